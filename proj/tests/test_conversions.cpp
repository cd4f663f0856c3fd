#include <doctest.h>

#include "util.hpp"
#include "xducer/corpus.hpp"
#include "xducer/mt2sst.hpp"
#include "xducer/semantics.hpp"
#include "xducer/sst2mt.hpp"

using namespace xducer;
using namespace testutil;

namespace {

std::optional<Word> fn(const Machine& m, const Word& w)
{
    auto r = run_machine(m, w);
    if (!r.accepted()) return std::nullopt;
    return r.output;
}

MarbleTransducer random_marble(std::mt19937& rng)
{
    MarbleTransducer t;
    t.input = {"a", "b"};
    t.output = {"c", "d"};
    std::size_t nq = 2 + rng() % 3;
    for (std::size_t i = 0; i < nq; ++i) t.states.push_back("s" + std::to_string(i));
    t.initial = "s0";
    t.finals = {t.states[rng() % nq]};
    t.colors = {"r"};
    if (rng() % 2) t.colors.push_back("g");
    std::vector<Sym> syms{LEFT_END, "a", "b", RIGHT_END};
    std::vector<std::optional<std::string>> modes{std::nullopt};
    for (const auto& c : t.colors) modes.push_back(c);
    for (const auto& q : t.states)
        for (const auto& s : syms)
            for (const auto& c : modes) {
                if (rng() % 5 == 0) continue;
                MarbleEdge e;
                e.target = t.states[rng() % nq];
                if (rng() % 3 == 0) e.output = {rng() % 2 ? "c" : "d"};
                std::vector<MarbleAction> ok;
                if (s != LEFT_END) ok.push_back(MarbleAction::left());
                if (c) ok.push_back(MarbleAction::lift());
                else {
                    if (s != RIGHT_END) ok.push_back(MarbleAction::right());
                    ok.push_back(MarbleAction::drop(t.colors[rng() % t.colors.size()]));
                }
                e.action = ok[rng() % ok.size()];
                t.delta[{q, s, c}] = e;
            }
    return t;
}

}  // namespace

TEST_CASE("crossing derivations")
{
    MarbleTransducer t;
    t.input = {"a"};
    t.output = {"o"};
    t.states = {"q", "q1", "q2", "q3", "f2", "out"};
    t.initial = "q";
    t.colors = {"c"};
    t.delta[{"q", "a", std::nullopt}] = {"out", MarbleAction::right(), {"o"}};
    std::map<std::string, MaybeState> none;
    for (const auto& q : t.states) none[q] = std::nullopt;
    auto d = crossing_fixpoint(t, none, "a");
    CHECK(d.at({"q", std::nullopt}).result == "out");
    CHECK(d.at({"q", std::nullopt}).tokens == std::vector<DerivationToken>{{false, {"o"}, {}}});

    // Drop, go left twice with the marble, lift, go left again and exit right.
    MarbleTransducer s = t;
    s.delta.clear();
    s.delta[{"q", "a", std::nullopt}] = {"q1", MarbleAction::drop("c"), {"0"}};
    s.delta[{"q1", "a", "c"}] = {"q2", MarbleAction::left(), {"1"}};
    s.delta[{"f2", "a", "c"}] = {"q3", MarbleAction::lift(), {"2"}};
    s.delta[{"q3", "a", std::nullopt}] = {"q2", MarbleAction::left(), {"3"}};
    s.delta[{"f2", "a", std::nullopt}] = {"out", MarbleAction::right(), {"4"}};
    auto f = none;
    f["q2"] = "f2";
    auto e = crossing_fixpoint(s, f, "a").at({"q", std::nullopt});
    CHECK(e.result == "out");
    std::vector<DerivationToken> expect{{false, {"0"}, {}}, {false, {"1"}, {}}, {true, {}, "q2"}, {false, {"2"}, {}},
                                        {false, {"3"}, {}}, {true, {}, "q2"}, {false, {"4"}, {}}};
    CHECK(e.tokens == expect);

    MarbleTransducer l = t;
    l.delta.clear();
    l.delta[{"q", "a", std::nullopt}] = {"q", MarbleAction::left(), {}};
    CHECK_FALSE(crossing_fixpoint(l, none, "a").at({"q", std::nullopt}).result);
}

TEST_CASE("marble machines as streaming transducers")
{
    auto exp = marble_to_sst(corpus::exp_marble());
    CHECK(validate(exp).empty());
    for (std::size_t n = 0; n <= 5; ++n) CHECK(run_sst(exp, rep("a", n)).output.size() == (1u << n));

    auto rev = corpus::reverse_two_way();
    auto rs = marble_to_sst(as_marble(rev));
    for (const auto& w : words_upto(rev.input, 6)) CHECK(fn(rs, w) == fn(rev, w));

    for (const auto& name : {"mul_marble", "pow2_marble", "pow2_wasteful_marble", "identity_two_way"}) {
        auto m = corpus::all().at(name);
        MarbleTransducer t = std::holds_alternative<MarbleTransducer>(m) ? std::get<MarbleTransducer>(m)
                                                                          : as_marble(std::get<TwoWayTransducer>(m));
        auto s = marble_to_sst(t);
        CHECK(validate(s).empty());
        for (const auto& w : words_upto(t.input, t.input.size() > 2 ? 4 : 6)) CHECK(fn(s, w) == fn(t, w));
    }

    MarbleTransducer dead = corpus::exp_marble();
    dead.finals.clear();
    CHECK(marble_to_sst(dead).out.empty());
}

TEST_CASE("random marble machines agree with their streaming versions")
{
    std::mt19937 rng(23);
    for (int i = 0; i < 150; ++i) {
        auto t = random_marble(rng);
        REQUIRE(validate(t).empty());
        auto s = marble_to_sst(t);
        CHECK(validate(s).empty());
        for (const auto& w : words_upto(t.input, 5)) CHECK(fn(s, w) == fn(t, w));
    }
}

namespace {

DFA random_dfa(std::mt19937& rng, const Alphabet& in)
{
    DFA d;
    d.input = in;
    std::size_t n = 1 + rng() % 4;
    for (std::size_t i = 0; i < n; ++i) d.states.push_back("d" + std::to_string(i));
    d.initial = "d0";
    for (const auto& q : d.states)
        for (const auto& a : in) d.delta[{q, a}] = d.states[rng() % n];
    return d;
}

// Random layered SST: within a layer, each register of that layer occurs at most once per update.
SST random_layered(std::mt19937& rng, LayerPartition& p)
{
    SST m;
    m.input = {"a", "b"};
    m.output = {"c", "d"};
    std::size_t nq = 1 + rng() % 2;
    for (std::size_t i = 0; i < nq; ++i) m.states.push_back("q" + std::to_string(i));
    m.initial = "q0";
    std::size_t layers = 1 + rng() % 3;
    p.assign(layers, {});
    std::map<std::string, std::size_t> li;
    for (std::size_t i = 0; i < 1 + rng() % 4; ++i) {
        std::string x(1, static_cast<char>('r' + i));
        std::size_t l = std::min<std::size_t>(i, rng() % layers);
        p[l].push_back(x);
        li[x] = l;
        m.registers.push_back(x);
        m.init[x] = rng() % 2 ? Word{} : Word{"c"};
    }
    LayerPartition q;
    for (auto& l : p)
        if (!l.empty()) q.push_back(l);
    p = q;
    li.clear();
    for (std::size_t l = 0; l < p.size(); ++l)
        for (const auto& x : p[l]) li[x] = l;
    for (const auto& s : m.states)
        for (const auto& a : m.input) {
            if (rng() % 6 == 0) continue;
            Substitution u;
            for (const auto& x : m.registers) u[x] = {};
            for (std::size_t l = 0; l < p.size(); ++l) {
                // Same-layer registers are distributed once each, some dropped.
                for (const auto& y : p[l]) {
                    if (rng() % 4 == 0) continue;
                    const auto& x = p[l][rng() % p[l].size()];
                    u[x].push_back(Token::reg(y));
                }
                for (const auto& x : p[l]) {
                    for (const auto& [y, ly] : li)
                        if (ly < l && rng() % 3 == 0) u[x].insert(u[x].begin() + rng() % (u[x].size() + 1), Token::reg(y));
                    if (rng() % 2) u[x].insert(u[x].begin() + rng() % (u[x].size() + 1), Token::letter(rng() % 2 ? "c" : "d"));
                }
            }
            m.delta[{s, a}] = {m.states[rng() % nq], u};
        }
    for (const auto& s : m.states) {
        if (rng() % 5 == 0) continue;
        Expr e;
        for (int i = rng() % 4; i > 0; --i)
            e.push_back(rng() % 3 ? Token::reg(m.registers[rng() % m.registers.size()]) : Token::letter("d"));
        m.out[s] = e;
    }
    return m;
}

}  // namespace

TEST_CASE("marked substitutions")
{
    std::set<std::string> regs{"x", "y"};
    auto alpha = parse_expr("xbybx", regs);
    CHECK(marked(alpha) == std::vector<std::string>{"x̄bybx", "xbȳbx", "xbybx̄"});
    CHECK(marked(parse_expr("bb", regs)).empty());
    auto colors = marked_colors(corpus::exp_sst());
    CHECK(colors.size() == 2);
    for (const auto& c : colors) CHECK(c.body == parse_expr("xx", {"x"}));
}

TEST_CASE("streaming transducers as marble machines")
{
    auto exp = sst_to_marble(corpus::exp_sst());
    CHECK(validate(exp).empty());
    for (std::size_t n = 0; n <= 5; ++n) CHECK(run_marble(exp, rep("a", n)).output == rep("a", 1u << n));
    for (const auto& name : {"reverse_sst", "reverse_copyful_sst", "bounded02_sst", "mul_sst", "mul_copyful_sst"}) {
        SST m = std::get<SST>(corpus::all().at(name));
        auto t = sst_to_marble(m);
        CHECK(validate(t).empty());
        for (const auto& w : words_upto(m.input, m.input.size() > 2 ? 4 : 6)) CHECK(fn(t, w) == fn(m, w));
    }
    // Value at position 0 is the initial register content.
    SST c = corpus::reverse_sst();
    for (auto& [x, v] : c.init) v = {"b"};
    auto tc = sst_to_marble(c);
    CHECK(fn(tc, {}) == fn(c, {}));
}

TEST_CASE("prefix state gadget contract")
{
    std::mt19937 rng(29);
    for (int trial = 0; trial < 4; ++trial) {
        Alphabet in{"a", "b"};
        DFA d = random_dfa(rng, in);
        if (trial == 0) {
            d.states = {"even", "odd"};
            d.initial = "even";
            d.delta = {{{"even", "a"}, "odd"}, {{"odd", "a"}, "even"}, {{"even", "b"}, "even"}, {{"odd", "b"}, "odd"}};
        }
        auto g = prefix_state_gadget(d);
        std::set<std::string> exits;
        for (const auto& [q, e] : g.exit) exits.insert(e);
        for (const auto& word : words_upto(in, 8)) {
            Word tape{LEFT_END};
            tape.insert(tape.end(), word.begin(), word.end());
            tape.push_back(RIGHT_END);
            std::vector<std::string> K{d.initial};
            for (const auto& a : word) K.push_back(d.delta.at({K.back(), a}));
            for (std::size_t m = 1; m <= word.size(); ++m) {
                std::string q = g.entry.at(K[m]);
                std::size_t pos = m;
                bool ok = true;
                for (int steps = 0; !exits.count(q); ++steps) {
                    auto it = g.fragment.delta.find({q, tape[pos]});
                    if (it == g.fragment.delta.end() || steps > 1000) {
                        ok = false;
                        break;
                    }
                    CHECK(it->second.output.empty());
                    q = it->second.target;
                    pos = it->second.move == Move::Left ? pos - 1 : pos + 1;
                    if (pos > m) ok = false;
                }
                CHECK(ok);
                CHECK(pos == m);
                CHECK(q == g.exit.at(K[m - 1]));
            }
        }
    }
    DFA one;
    one.input = {"a"};
    one.states = {"s"};
    one.initial = "s";
    one.delta[{"s", "a"}] = "s";
    auto g = prefix_state_gadget(one);
    auto back = g.fragment.delta.at({g.entry.at("s"), "a"});
    CHECK(back.move == Move::Left);
    CHECK(g.fragment.delta.at({back.target, LEFT_END}).target == g.exit.at("s"));
}

TEST_CASE("layered machines as marble machines")
{
    auto check = [](const SST& m, const LayerPartition& p, std::size_t maxlen) {
        std::size_t k = p.empty() ? 0 : p.size() - 1;
        auto exact = layered_to_marble(m, p, LayerStrategy::Exact);
        auto aux = layered_to_marble(m, p, LayerStrategy::AuxMarble);
        auto pe = validate(exact);
        auto pa = validate(aux);
        CHECK_MESSAGE(pe.empty(), (pe.empty() ? "" : pe.front()));
        CHECK_MESSAGE(pa.empty(), (pa.empty() ? "" : pa.front()));
        for (const auto& w : words_upto(m.input, maxlen)) {
            auto e = run_marble(exact, w);
            auto a = run_marble(aux, w);
            auto s = fn(m, w);
            CHECK(e.accepted() == s.has_value());
            CHECK(a.accepted() == s.has_value());
            if (s) {
                CHECK(e.output == *s);
                CHECK(a.output == *s);
            }
            CHECK(e.max_stack_depth <= k);
            CHECK(a.max_stack_depth <= k + 1);
        }
        return exact;
    };
    auto mul = corpus::mul_sst();
    check(mul, *mul.layers, 5);
    auto rev = corpus::reverse_sst();
    auto t = check(rev, {rev.registers}, 6);
    CHECK(as_two_way(t).has_value());

    std::mt19937 rng(31);
    for (int i = 0; i < 60; ++i) {
        LayerPartition p;
        auto m = random_layered(rng, p);
        REQUIRE(check_layered(m, p).empty());
        check(m, p, 5);
    }
    CHECK_THROWS_AS(layered_to_marble(corpus::exp_sst(), {{"x"}}, LayerStrategy::Exact), ModelError);
}
