#pragma once

#include <functional>
#include <optional>

#include "xducer/growth.hpp"
#include "xducer/machines.hpp"

namespace xducer {

struct Totalized {
    SST machine;
    DFA domain;
};

// Sink-completes delta (registers reset to empty) and F (empty output).
Totalized make_total(const SST& m);

// One state, letter-free updates and output. Throws ModelError unless m is total.
SST to_simple(const SST& m);

struct BoundedLayerResult {
    SST machine;
    LayerPartition layers;  // S_1..S_{k+1}
    int bound = 1;
};

// Hardcodes the S_0 registers into states. Registers outside the partition (trimmed by the
// growth analysis) are replaced by the empty word.
BoundedLayerResult remove_bounded_layer(const SST& simple, const std::vector<std::vector<std::string>>& partition,
                                        std::size_t state_cap = 200000);

struct SSTFExtraction {
    SST top;                    // registers: top layer plus refresh registers
    FunctionRegistry registry;  // delayed and plain lower-layer functions
    SST lower;                  // lower layers only, output unused
    LayerPartition lower_layers;
    // function name -> (lower register, true if the value is taken after the step)
    std::map<std::string, std::pair<std::string, bool>> sources;
};

SSTFExtraction extract_sstf(const SST& m, const LayerPartition& layers);

// States (q, g); registers x#i. Throws ModelError if m is not total.
NSSTF bounded_sstf_to_unambiguous(const SST& m, int B);

struct SkeBegFol {
    std::map<std::string, std::vector<std::string>> ske;
    std::map<std::string, Expr> beg;  // letters and Fun tokens only
    std::map<std::string, Expr> fol;
    bool operator==(const SkeBegFol&) const = default;
};

// Throws ModelError if s is not copyless.
SkeBegFol decompose(const Substitution& s);
Substitution reassemble(const SkeBegFol& d);
// Decomposition of s1 o s2 computed from the parts.
SkeBegFol compose_decomposed(const SkeBegFol& s1, const SkeBegFol& s2);

struct DeterminizeStats {
    std::size_t max_slots = 0;
    std::size_t states = 0;
};

// Throws ModelError on ambiguity (two runs reaching one state).
SST determinize_nsstf(const NSSTF& m, DeterminizeStats* stats = nullptr, std::size_t state_cap = 200000);

enum class Timing { Pre, Post };

struct FunBinding {
    std::map<std::string, Expr> value;  // lower state -> expression over lower registers
    Timing timing = Timing::Post;
};

// Binding a function to a bare lower register in every state.
FunBinding register_binding(const SST& lower, const std::string& reg, Timing t);

// Product of a copyless top SST-F with a layered lower SST. Pre replaces Fun(f) by value[q_low];
// Post by lambda_low(q_low, a)(value[delta(q_low, a)]).
SST splice_layers(const SST& top, const SST& lower, const LayerPartition& lower_layers,
                  const std::map<std::string, FunBinding>& bind);

// (k,B)-bounded total SST -> k-layered SST with the same function.
SST bounded_to_layered(const SST& m, const LayerPartition& layers, int B);

using StageHook = std::function<void(const std::string& stage, const Machine& m)>;

struct LayeringResult {
    bool exponential = false;
    GrowthReport report;
    int k = 0;
    SST machine;  // layered, with machine.layers set
};

LayeringResult to_k_layered(const SST& m, const StageHook& hook = {});

}  // namespace xducer
