#include <doctest.h>

#include <cmath>

#include "util.hpp"
#include "xducer/corpus.hpp"
#include "xducer/growth.hpp"
#include "xducer/oracle.hpp"
#include "xducer/pipeline.hpp"

using namespace xducer;
using namespace testutil;

namespace {

NAutomaton upper_unitriangular()
{
    NAutomaton a;
    a.input = {"a"};
    a.states = {"x", "y"};
    a.alpha = {1, 0};
    a.beta = {0, 1};
    a.mu["a"] = {{1, 1}, {0, 1}};
    return a;
}

NAutomaton random_trim(std::mt19937& rng)
{
    for (;;) {
        NAutomaton a;
        a.input = {"a", "b"};
        std::size_t n = 1 + rng() % 3;
        for (std::size_t i = 0; i < n; ++i) {
            a.states.push_back("q" + std::to_string(i));
            a.alpha.push_back(rng() % 3 == 0);
            a.beta.push_back(rng() % 3 == 0);
        }
        for (const auto& s : a.input) {
            Matrix m(n, std::vector<std::uint64_t>(n, 0));
            for (auto& row : m)
                for (auto& x : row) x = rng() % 3 == 0 ? rng() % 3 : 0;
            a.mu[s] = m;
        }
        auto t = trim(a);
        if (!t.states.empty()) return t;
    }
}

}  // namespace

TEST_CASE("word enumeration")
{
    auto ws = enumerate_words({"a", "b"}, 2);
    CHECK(ws == std::vector<Word>{{}, {"a"}, {"b"}, {"a", "a"}, {"a", "b"}, {"b", "a"}, {"b", "b"}});
    CHECK(enumerate_words({"a", "b", "c"}, 5).size() == 364);
    CHECK_THROWS_AS(enumerate_words({"a", "b"}, 10, 100), ModelError);
}

TEST_CASE("bounded equivalence")
{
    auto v = equiv_check(corpus::exp_sst(), corpus::exp_marble(), 5);
    CHECK(v.equivalent());
    CHECK(v.maxlen == 5);

    auto r = equiv_check(corpus::reverse_two_way(), corpus::identity_two_way(), 2);
    REQUIRE(r.status == EquivalenceVerdict::Status::Counterexample);
    CHECK(*r.word == w("ab"));
    CHECK(*r.first == w("ba"));
    CHECK(*r.second == w("ab"));
    auto back = equiv_check(corpus::identity_two_way(), corpus::reverse_two_way(), 2);
    CHECK(*back.word == w("ab"));
    CHECK(*back.first == w("ab"));

    for (const auto& [name, m] : corpus::all()) {
        CAPTURE(name);
        CHECK(equiv_check(m, m, 3).equivalent());
    }
    // Thread count never changes the reported counterexample.
    OracleOptions one;
    one.threads = 1;
    auto seq = equiv_check(corpus::reverse_sst(), corpus::identity_two_way(), 4, one);
    auto par = equiv_check(corpus::reverse_sst(), corpus::identity_two_way(), 4);
    CHECK(*seq.word == *par.word);

    OracleOptions tiny;
    tiny.run.budget = 3;
    CHECK(equiv_check(corpus::exp_marble(), corpus::exp_marble(), 3, tiny).status ==
          EquivalenceVerdict::Status::Inconclusive);
    CHECK_THROWS_AS(equiv_check(corpus::exp_sst(), corpus::reverse_sst(), 1), ModelError);
}

TEST_CASE("brute-force pattern search")
{
    auto e = brute_pattern_search(flow_automaton(corpus::exp_sst()), 1);
    REQUIRE(e.heavy.size() == 1);
    CHECK(e.heavy[0].first == "x");
    CHECK(e.heavy[0].second == w("a"));

    auto u = brute_pattern_search(upper_unitriangular(), 3);
    CHECK(u.heavy.empty());
    using B = std::tuple<std::string, std::string, Word>;
    CHECK(u.barbells == std::vector<B>{{"x", "y", w("a")}, {"x", "y", w("aa")}, {"x", "y", w("aaa")}});
    CHECK(brute_degree(upper_unitriangular(), 3) == 1);

    NAutomaton id;
    id.input = {"a"};
    id.states = {"x"};
    id.alpha = id.beta = {1};
    id.mu["a"] = {{1}};
    auto none = brute_pattern_search(id, 4);
    CHECK(none.heavy.empty());
    CHECK(none.barbells.empty());
    CHECK(brute_degree(id, 4) == 0);
}

TEST_CASE("brute-force degree matches classification")
{
    std::mt19937 rng(2024);
    int compared = 0;
    for (int i = 0; i < 300; ++i) {
        auto a = random_trim(rng);
        auto p = brute_pattern_search(a, 6);
        auto r = classify(a);
        CHECK(r.exponential() == !p.heavy.empty());
        if (r.exponential()) continue;
        CHECK(r.degree == brute_degree(a, 6));
        ++compared;
    }
    CHECK(compared >= 100);
}

TEST_CASE("growth probing")
{
    auto e = probe_growth(corpus::exp_marble(), 1, 6);
    CHECK(e.exponential);
    for (const auto& [l, s] : e.points) CHECK(s == (std::size_t{1} << l));
    auto p = probe_growth(corpus::pow2_marble(), 2, 6);
    CHECK_FALSE(p.exponential);
    CHECK(p.consistent_with(2));
    auto r = probe_growth(corpus::reverse_sst(), 2, 6);
    CHECK(r.consistent_with(1));

    SST c;
    c.input = c.output = {"a"};
    c.states = {"q"};
    c.initial = "q";
    c.delta[{"q", "a"}] = {"q", {}};
    c.out["q"] = {Token::letter("a")};
    auto k = probe_growth(c, 1, 6);
    CHECK(k.consistent_with(0));
}

TEST_CASE("marble minimization")
{
    auto check = [](const MarbleTransducer& t, int k, std::size_t maxlen) {
        auto r = minimize_marbles(t);
        REQUIRE_FALSE(r.exponential);
        CHECK(r.k == k);
        CHECK(check_layered(r.layered, *r.layered.layers).empty());
        CHECK(r.layered.layers->size() == static_cast<std::size_t>(k + 1));
        CHECK(validate(r.machine).empty());
        CHECK(equiv_check(t, r.machine, maxlen).equivalent());
        for (const auto& v : enumerate_words(t.input, maxlen))
            CHECK(run_marble(r.machine, v).max_stack_depth <= static_cast<std::size_t>(k));
        return r;
    };
    auto p = check(corpus::pow2_wasteful(), 1, 5);
    for (std::size_t n = 0; n <= 5; ++n) CHECK(run_marble(p.machine, rep("a", n)).output == rep("a", n * n));

    auto rev = check(as_marble(corpus::reverse_two_way()), 0, 5);
    CHECK(as_two_way(rev.machine).has_value());
    check(corpus::mul_marble(), 1, 5);

    std::vector<std::string> stages;
    auto x = minimize_marbles(corpus::exp_marble(), [&](const std::string& s, const Machine&) { stages.push_back(s); });
    CHECK(x.exponential);
    CHECK(x.report.exponential());
    CHECK(stages.front() == "sst");
}
