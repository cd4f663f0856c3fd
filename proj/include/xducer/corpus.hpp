#pragma once

#include "xducer/machines.hpp"

// Bundled example machines; also exported to corpus/*.json by tools/gen_corpus.
namespace xducer::corpus {

TwoWayTransducer reverse_two_way();   // {a,b,c}, w -> mirror(w)
TwoWayTransducer identity_two_way();  // {a,b,c}, w -> w
SST reverse_sst();                    // x := s x
SST reverse_copyful_sst();            // x := s x, z := s x, F = z
SST exp_sst();                        // a^n -> a^(2^n), x := xx
MarbleTransducer exp_marble();        // binary counter, n marbles
SST mul_sst();                        // w#0^n -> (w#)^n, layers {x},{y}
SST mul_copyful_sst();                // same function, z := xy
MarbleTransducer mul_marble();        // 1 marble
MarbleTransducer pow2_marble();       // a^n -> a^(n^2), 1 marble
MarbleTransducer pow2_wasteful();     // same function, 2 marbles
SST bounded02_sst();                  // x := xa, y := xb, F = xy

std::map<std::string, Machine> all();

}  // namespace xducer::corpus
