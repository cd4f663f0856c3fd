#pragma once

#include <cstdint>
#include <optional>

#include <gmpxx.h>

#include "xducer/machines.hpp"

namespace xducer {

enum class Verdict { Accept, Reject, BudgetExceeded, LoopDetected };

std::string verdict_name(Verdict v);

struct StackEntry {
    std::string color;
    std::size_t pos;
    bool operator==(const StackEntry&) const = default;
};

struct TraceStep {
    std::size_t step;
    std::string state;
    std::size_t head;
    std::vector<StackEntry> stack;  // top first
    Word emitted;
    bool operator==(const TraceStep&) const = default;
};

struct RunResult {
    Verdict verdict = Verdict::Reject;
    Word output;  // meaningful on Accept
    std::uint64_t steps = 0;
    std::size_t max_stack_depth = 0;
    std::vector<TraceStep> trace;
    std::string detail;

    bool accepted() const { return verdict == Verdict::Accept; }
    bool operator==(const RunResult&) const = default;
};

struct RunOptions {
    std::optional<std::uint64_t> budget;  // nullopt: default_budget (or XDUCER_BUDGET)
    bool trace = false;
    bool detect_loops = false;  // marble runs only; two-way runs always detect loops
};

std::uint64_t default_budget(std::size_t word_length, std::size_t num_states);
std::uint64_t effective_budget(const RunOptions& o, std::size_t word_length, std::size_t num_states);

// Throws ModelError on a symbol outside the alphabet.
void check_word(const Alphabet& a, const Word& w);

// Index tables for fast repeated marble runs.
class CompiledMarble {
public:
    explicit CompiledMarble(const MarbleTransducer& t);

    RunResult run(const Word& w, const RunOptions& o = {}) const;
    const MarbleTransducer& machine() const { return *m_; }

private:
    struct Entry {
        int target = -1;
        MarbleAction::Kind kind = MarbleAction::Kind::Right;
        int drop = 0;  // color index, 1-based
        int out = -1;  // index into outputs_
    };
    int sym_index(const Sym& s) const;
    const Entry& at(int q, int sym, int color) const
    {
        return table_[(static_cast<std::size_t>(q) * nsym_ + sym) * ncol_ + color];
    }

    const MarbleTransducer* m_;
    std::map<Sym, int> sym_;
    std::size_t nsym_ = 0, ncol_ = 0;
    std::vector<Entry> table_;
    std::vector<Word> outputs_;
    std::vector<char> final_;
    int initial_ = 0;
};

RunResult run_two_way(const TwoWayTransducer& t, const Word& w, const RunOptions& o = {});
RunResult run_marble(const MarbleTransducer& t, const Word& w, const RunOptions& o = {});
RunResult run_sst(const SST& m, const Word& w);

// Valuation after the prefix, or nullopt if the run is undefined on it.
std::optional<Valuation> register_values(const SST& m, const Word& prefix);

// Replaces every Fun(f) with f(w[1:m]) during step m.
RunResult run_sstf(const SST& m, const Word& w, const FunctionRegistry& reg);
std::optional<Valuation> sstf_register_values(const SST& m, const Word& prefix,
                                              const FunctionRegistry& reg);

struct NRun {
    std::vector<std::string> states;  // |w|+1 states
    Word output;
};

std::vector<NRun> enumerate_nsstf_runs(const NSSTF& m, const Word& w, const FunctionRegistry& reg,
                                       std::size_t branch_limit = 100000);
// Unique accepting run; throws ModelError if several.
RunResult run_nsstf(const NSSTF& m, const Word& w, const FunctionRegistry& reg);

mpz_class eval_nautomaton(const NAutomaton& a, const Word& w);

// Dispatch on the machine kind; NAutomaton is not a word function and raises ModelError.
RunResult run_machine(const Machine& m, const Word& w, const FunctionRegistry& reg = {},
                      const RunOptions& o = {});

std::string format_trace(const std::vector<TraceStep>& trace);

}  // namespace xducer
