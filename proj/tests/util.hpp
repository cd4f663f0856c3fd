#pragma once

#include <doctest.h>

#include <random>

#include "xducer/machines.hpp"

namespace testutil {

using namespace xducer;

// All words of length <= n in length-lexicographic order.
inline std::vector<Word> words_upto(const Alphabet& a, std::size_t n)
{
    std::vector<Word> out{{}};
    std::vector<Word> layer{{}};
    for (std::size_t l = 1; l <= n; ++l) {
        std::vector<Word> next;
        for (const auto& w : layer)
            for (const auto& s : a) {
                Word v = w;
                v.push_back(s);
                next.push_back(v);
            }
        out.insert(out.end(), next.begin(), next.end());
        layer = std::move(next);
    }
    return out;
}

inline Word rep(const Sym& s, std::size_t n) { return Word(n, s); }

inline Word w(const std::string& text) { return word_of(text); }

}  // namespace testutil

namespace doctest {
template <>
struct StringMaker<xducer::Word> {
    static String convert(const xducer::Word& w) { return ("\"" + xducer::to_string(w) + "\"").c_str(); }
};
}  // namespace doctest
