#pragma once

#include <cmath>
#include <functional>

#include "xducer/semantics.hpp"

namespace xducer {

// All words of length <= maxlen in length-lexicographic order (alphabet order). Throws
// ModelError past `cap` words.
std::vector<Word> enumerate_words(const Alphabet& a, std::size_t maxlen, std::size_t cap = 100000);

struct EquivalenceVerdict {
    enum class Status { Equivalent, Counterexample, Inconclusive };
    Status status = Status::Equivalent;
    std::size_t maxlen = 0;
    std::optional<Word> word;           // set unless Equivalent
    std::optional<Word> first, second;  // outputs; nullopt means rejected or undecided
    std::string detail;

    bool equivalent() const { return status == Status::Equivalent; }
};

struct OracleOptions {
    std::size_t word_cap = 100000;
    RunOptions run;
    FunctionRegistry registry;
    unsigned threads = 0;  // 0: hardware concurrency
};

// Throws ModelError unless both machines read the same input alphabet.
EquivalenceVerdict equiv_check(const Machine& m1, const Machine& m2, std::size_t maxlen,
                               const OracleOptions& o = {});

struct PatternReport {
    std::vector<std::pair<std::string, Word>> heavy;                   // mu(v)(q,q) >= 2
    std::vector<std::tuple<std::string, std::string, Word>> barbells;  // q != q'
};

PatternReport brute_pattern_search(const NAutomaton& a, std::size_t maxlen);

// Longest chain of barbells (q1,q1'), (q2,q2'), ... with q_i' reaching q_{i+1}, from words of
// length <= maxlen. Meaningful for trim automata without heavy cycles.
int brute_degree(const NAutomaton& a, std::size_t maxlen);

struct GrowthProbe {
    std::vector<std::pair<std::size_t, std::size_t>> points;  // (l, |output|)
    double slope = 0;          // log-log slope over the last two points
    bool exponential = false;  // log |output| grows linearly in l
    bool consistent_with(int k) const { return !exponential && std::abs(slope - k) <= 0.25; }
};

// Throws ModelError if the machine rejects or exhausts its budget on a family member.
GrowthProbe probe_growth(const Machine& m, const std::function<Word(std::size_t)>& family, std::size_t from,
                         std::size_t to, const OracleOptions& o = {});
GrowthProbe probe_growth(const Machine& m, std::size_t from, std::size_t to, const OracleOptions& o = {});

}  // namespace xducer
