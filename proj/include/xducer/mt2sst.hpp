#pragma once

#include "xducer/machines.hpp"

namespace xducer {

using MaybeState = std::optional<std::string>;

// Register-free behaviour of a marble transducer on a prefix: the state on first reaching
// the next position, and for each q the state on returning there after entering the prefix's
// last position from the right in state q.
struct CrossingState {
    MaybeState first;
    std::map<std::string, MaybeState> next;
    auto operator<=>(const CrossingState&) const = default;
};

struct DerivationToken {
    bool call = false;
    Word word;          // constant output
    std::string state;  // call: the register of next(state)
    bool operator==(const DerivationToken&) const = default;
};

struct DerivationEntry {
    MaybeState result;
    std::vector<DerivationToken> tokens;  // empty when result is nullopt
};

// Keyed by (entry state, marble colour at the head or nullopt).
using Derivation = std::map<std::pair<std::string, std::optional<std::string>>, DerivationEntry>;

// Behaviour at one position reading `a`, given the behaviour f of the prefix to its left
// (all-nullopt at the left endmarker). With at_end, the position is the right endmarker
// and the result is the accepting state reached with no marble at the head.
Derivation crossing_fixpoint(const MarbleTransducer& t, const std::map<std::string, MaybeState>& f, const Sym& a,
                             bool at_end = false);

SST marble_to_sst(const MarbleTransducer& t, std::size_t state_cap = 100000);

}  // namespace xducer
