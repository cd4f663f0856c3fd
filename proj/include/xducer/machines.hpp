#pragma once

#include <cstdint>
#include <optional>
#include <tuple>
#include <utility>
#include <variant>

#include "xducer/core.hpp"

namespace xducer {

using Alphabet = std::vector<Sym>;
using LayerPartition = std::vector<std::vector<std::string>>;

enum class Move { Left, Right };

struct TwoWayEdge {
    std::string target;
    Move move = Move::Right;
    Word output;
    bool operator==(const TwoWayEdge&) const = default;
};

struct TwoWayTransducer {
    Alphabet input, output;
    std::vector<std::string> states;
    std::string initial;
    std::set<std::string> finals;
    std::map<std::pair<std::string, Sym>, TwoWayEdge> delta;
    bool operator==(const TwoWayTransducer&) const = default;
};

struct MarbleAction {
    enum class Kind { Left, Right, Lift, Drop };
    Kind kind = Kind::Right;
    std::string color;  // Drop only

    static MarbleAction left() { return {Kind::Left, {}}; }
    static MarbleAction right() { return {Kind::Right, {}}; }
    static MarbleAction lift() { return {Kind::Lift, {}}; }
    static MarbleAction drop(std::string c) { return {Kind::Drop, std::move(c)}; }
    bool operator==(const MarbleAction&) const = default;
};

// (state, symbol, color seen or nullopt)
using MarbleKey = std::tuple<std::string, Sym, std::optional<std::string>>;

struct MarbleEdge {
    std::string target;
    MarbleAction action;
    Word output;
    bool operator==(const MarbleEdge&) const = default;
};

struct MarbleTransducer {
    Alphabet input, output;
    std::vector<std::string> states;
    std::string initial;
    std::set<std::string> finals;
    std::vector<std::string> colors;
    std::map<MarbleKey, MarbleEdge> delta;
    std::optional<int> declared_bound;
    bool operator==(const MarbleTransducer&) const = default;
};

struct SSTEdge {
    std::string target;
    Substitution update;
    bool operator==(const SSTEdge&) const = default;
};

// Also models SST-F: updates may carry Fun tokens named in `functions`.
struct SST {
    Alphabet input, output;
    std::vector<std::string> states;
    std::string initial;
    std::vector<std::string> registers;
    Valuation init;
    std::map<std::pair<std::string, Sym>, SSTEdge> delta;
    std::map<std::string, Expr> out;
    std::vector<std::string> functions;
    std::optional<LayerPartition> layers;
    bool operator==(const SST&) const = default;
};

struct NSSTF {
    Alphabet input, output;
    std::vector<std::string> states;
    std::vector<std::string> registers;
    std::vector<std::string> functions;
    std::map<std::string, Valuation> init;
    std::map<std::tuple<std::string, Sym, std::string>, Substitution> delta;
    std::map<std::string, Expr> out;
    bool operator==(const NSSTF&) const = default;
};

using Matrix = std::vector<std::vector<std::uint64_t>>;

struct NAutomaton {
    Alphabet input;
    std::vector<std::string> states;
    std::vector<std::uint64_t> alpha, beta;
    std::map<Sym, Matrix> mu;
    bool operator==(const NAutomaton&) const = default;
};

struct DFA {
    Alphabet input;
    std::vector<std::string> states;
    std::string initial;
    std::map<std::pair<std::string, Sym>, std::string> delta;
    std::set<std::string> finals;

    std::optional<std::string> run(const Word& w) const;
    bool accepts(const Word& w) const;
};

using Machine = std::variant<TwoWayTransducer, MarbleTransducer, SST, NSSTF, NAutomaton>;
using FunctionRegistry = std::map<std::string, Machine>;

std::string kind_name(const Machine& m);

using ValidationReport = std::vector<std::string>;

ValidationReport validate(const TwoWayTransducer& t);
ValidationReport validate(const MarbleTransducer& t);
ValidationReport validate(const SST& m);
ValidationReport validate(const NSSTF& m);
ValidationReport validate(const NAutomaton& a);
ValidationReport validate(const Machine& m);

MarbleTransducer as_marble(const TwoWayTransducer& t);
// nullopt when some transition lifts, drops or reads a marble.
std::optional<TwoWayTransducer> as_two_way(const MarbleTransducer& t);

std::vector<std::string> check_copyless(const SST& m);
std::vector<std::string> check_copyless(const NSSTF& m);
std::vector<std::string> check_layered(const SST& m, const LayerPartition& p);

struct BoundedResult {
    bool bounded = true;
    std::string state;  // start state of the witness
    Word witness;
    std::string detail;
};

// Throws ModelError if the partition is invalid or a layer-order condition fails.
BoundedResult check_bounded(const SST& m, const LayerPartition& p, int B);
// Least B with (k,B)-boundedness, or nullopt if it exceeds cap.
std::optional<int> measure_bound(const SST& m, const LayerPartition& p, int cap);

std::vector<std::string> partition_problems(const std::vector<std::string>& regs,
                                            const LayerPartition& p);

}  // namespace xducer
