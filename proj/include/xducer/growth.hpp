#pragma once

#include <optional>

#include "xducer/machines.hpp"

namespace xducer {

struct TrimResult {
    NAutomaton automaton;
    std::set<std::string> removed;
};

TrimResult trim_with_report(const NAutomaton& a);
NAutomaton trim(const NAutomaton& a);
bool is_trim(const NAutomaton& a);

// mu(a)(x, x') = occurrences of x in lambda(a)(x'). Throws ModelError unless m is simple.
NAutomaton flow_automaton(const SST& m);
bool is_simple(const SST& m);

struct HeavyCycle {
    std::string state;
    Word word;  // mu(word)(state, state) >= 2
};

// Throws ModelError if a is not trim.
std::optional<HeavyCycle> has_heavy_cycle(const NAutomaton& a);

// Shortest nonempty v with mu(v)(q,q), mu(v)(q,q'), mu(v)(q',q') >= 1. Throws if q == q'.
std::optional<Word> find_barbell(const NAutomaton& a, const std::string& q, const std::string& qp);

struct BarbellEdge {
    std::string q, qp;  // the barbell
    Word v;             // barbell word
    Word w;             // from the edge source to q
    Word wp;            // from qp to the edge target
};

struct BarbellGraph {
    std::vector<std::string> vertices;
    std::map<std::pair<std::string, std::string>, BarbellEdge> edges;
};

// Throws ModelError if a has a heavy cycle or the result is cyclic.
BarbellGraph barbell_graph(const NAutomaton& a);

struct PolynomialWitness {
    Word left;
    std::vector<Word> loops;       // v_1..v_k
    std::vector<Word> connectors;  // u_1..u_{k-1}
    Word right;

    // left v_1^l u_1 v_2^l ... v_k^l right
    Word instance(std::size_t l) const;
};

struct GrowthReport {
    enum class Class { Exponential, Polynomial };
    Class cls = Class::Polynomial;

    // Exponential: mu(v)(q,q) >= 2, (alpha mu(u))(q) >= 1, (mu(z) beta)(q) >= 1.
    std::string q;
    Word u, v, z;

    int degree = 0;
    std::vector<std::vector<std::string>> partition;  // S_0..S_degree
    PolynomialWitness family;

    std::set<std::string> trim_removed;

    bool exponential() const { return cls == Class::Exponential; }
    Word exponential_instance(std::size_t l) const;
};

GrowthReport classify(const NAutomaton& a);

struct FunctionGrowth {
    GrowthReport report;
    std::optional<int> minimal_marbles;  // nullopt when exponential
};

FunctionGrowth classify_function(const SST& m);

}  // namespace xducer
