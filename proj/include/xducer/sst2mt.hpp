#pragma once

#include "xducer/machines.hpp"

namespace xducer {

inline const std::string BULLET = "•";

// lambda(q,a)(x) with its i-th token (a register) marked.
struct MarkedColor {
    std::string q;
    Sym a;
    std::string x;
    std::size_t i = 0;
    Expr body;
    std::string name;
};

// One colour per register occurrence in an update; the bullet is not included.
std::vector<MarkedColor> marked_colors(const SST& m);
// The marked variants of a single expression, rendered with the marked register overlined.
std::vector<std::string> marked(const Expr& alpha);

// Each register reference drops a marble; the prefix state is recomputed under a bullet.
MarbleTransducer sst_to_marble(const SST& m);

// Marble-free fragment: entered at position m >= 1 in entry[K(m)] (K = state after m letters),
// it returns to position m in exit[K(m-1)], emitting nothing and never passing m.
struct PrefixStateGadget {
    TwoWayTransducer fragment;  // no initial state or finals
    std::map<std::string, std::string> entry, exit;
};

// Throws ModelError unless d is total.
PrefixStateGadget prefix_state_gadget(const DFA& d);

enum class LayerStrategy { Exact, AuxMarble };

// Throws ModelError if p is not a valid layering of m.
MarbleTransducer layered_to_marble(const SST& m, const LayerPartition& p, LayerStrategy s);

}  // namespace xducer
