#include <doctest.h>

#include "util.hpp"
#include "xducer/corpus.hpp"
#include "xducer/growth.hpp"
#include "xducer/layering.hpp"
#include "xducer/semantics.hpp"

using namespace xducer;
using namespace testutil;

namespace {

struct Builder {
    SST m;
    std::set<std::string> regs, funs;

    Builder(Alphabet in, Alphabet out, std::vector<std::string> states, std::vector<std::string> registers)
    {
        m.input = std::move(in);
        m.output = std::move(out);
        m.states = std::move(states);
        m.initial = m.states.front();
        m.registers = std::move(registers);
        regs = {m.registers.begin(), m.registers.end()};
        for (const auto& x : m.registers) m.init[x] = {};
    }
    Builder& edge(const std::string& p, const Sym& a, const std::string& q, std::map<std::string, std::string> u)
    {
        Substitution s;
        for (const auto& x : m.registers) s[x] = u.count(x) ? parse_expr(u[x], regs, funs) : Expr{Token::reg(x)};
        m.delta[{p, a}] = {q, s};
        return *this;
    }
    Builder& out(const std::string& q, const std::string& e)
    {
        m.out[q] = parse_expr(e, regs, funs);
        return *this;
    }
};

// The function computed by m, with undefined inputs mapped to nullopt.
std::optional<Word> fn(const SST& m, const Word& w)
{
    auto r = run_sst(m, w);
    if (!r.accepted()) return std::nullopt;
    return r.output;
}

std::optional<Word> fn(const SST& m, const Word& w, const FunctionRegistry& reg)
{
    auto r = run_sstf(m, w, reg);
    if (!r.accepted()) return std::nullopt;
    return r.output;
}

std::optional<Word> fn(const NSSTF& m, const Word& w)
{
    auto runs = enumerate_nsstf_runs(m, w, {});
    if (runs.empty()) return std::nullopt;
    return runs.front().output;
}

SST random_sst(std::mt19937& rng)
{
    std::size_t nq = 1 + rng() % 2, nx = 1 + rng() % 2;
    SST m;
    m.input = {"a", "b"};
    m.output = {"c", "d"};
    for (std::size_t i = 0; i < nq; ++i) m.states.push_back("q" + std::to_string(i));
    m.initial = "q0";
    for (std::size_t i = 0; i < nx; ++i) m.registers.push_back(std::string(1, static_cast<char>('x' + i)));
    for (const auto& x : m.registers) m.init[x] = rng() % 3 ? Word{} : Word{"c"};
    auto expr = [&](int maxlen) {
        Expr e;
        int len = rng() % (maxlen + 1);
        for (int i = 0; i < len; ++i) {
            auto k = rng() % (nx + 2);
            e.push_back(k < nx ? Token::reg(m.registers[k]) : Token::letter(k == nx ? "c" : "d"));
        }
        return e;
    };
    for (const auto& q : m.states)
        for (const auto& a : m.input) {
            if (rng() % 8 == 0) continue;
            Substitution s;
            for (const auto& x : m.registers) s[x] = expr(3);
            m.delta[{q, a}] = {m.states[rng() % nq], s};
        }
    for (const auto& q : m.states)
        if (rng() % 4) m.out[q] = expr(3);
    return m;
}

const std::vector<Word>& small_words()
{
    static auto ws = words_upto({"a", "b"}, 5);
    return ws;
}

}  // namespace

TEST_CASE("totalization")
{
    auto r = corpus::reverse_sst();
    auto t = make_total(r);
    CHECK(t.machine.states == r.states);
    CHECK(t.machine.delta == r.delta);
    for (const auto& w : words_upto(r.input, 4)) CHECK(t.domain.accepts(w));

    Builder b({"a", "b"}, {"a"}, {"q"}, {"x"});
    b.edge("q", "a", "q", {{"x", "xa"}}).out("q", "x");
    auto t2 = make_total(b.m);
    for (const auto& w : small_words()) {
        bool only_a = std::count(w.begin(), w.end(), "b") == 0;
        CHECK(t2.domain.accepts(w) == only_a);
        CHECK(run_sst(t2.machine, w).output == (only_a ? w : Word{}));
    }

    Builder e({"a"}, {"a"}, {"q"}, {"x"});
    e.edge("q", "a", "q", {{"x", "xa"}});
    auto t3 = make_total(e.m);
    for (const auto& w : words_upto({"a"}, 4)) {
        CHECK_FALSE(t3.domain.accepts(w));
        CHECK(run_sst(t3.machine, w).output.empty());
    }
}

TEST_CASE("simple normal form")
{
    auto x = to_simple(corpus::exp_sst());
    CHECK(is_simple(x));
    for (std::size_t n = 0; n <= 5; ++n) CHECK(run_sst(x, rep("a", n)).output == run_sst(corpus::exp_sst(), rep("a", n)).output);

    Builder b({"a", "b"}, {"c", "d"}, {"p", "q"}, {"x", "y"});
    b.edge("p", "a", "q", {{"x", "xc"}, {"y", "dy"}})
        .edge("p", "b", "p", {{"x", "yx"}, {"y", ""}})
        .edge("q", "a", "p", {{"x", "cx"}, {"y", "y"}})
        .edge("q", "b", "q", {{"x", "x"}, {"y", "yxd"}})
        .out("p", "xy")
        .out("q", "dyx");
    auto s = to_simple(b.m);
    CHECK(s.registers.size() == 2 * 2 + 2 * 2);
    for (const auto& w : words_upto(b.m.input, 6)) CHECK(fn(s, w) == fn(b.m, w));

    Builder plain({"a"}, {"c"}, {"q"}, {"x"});
    plain.edge("q", "a", "q", {{"x", "x"}}).out("q", "x");
    auto p = to_simple(plain.m);
    CHECK(p.registers.size() == 1);
    CHECK(p.out.at("s") == Expr{Token::reg("q.x")});
}

TEST_CASE("bounded layer removal")
{
    // x0 always holds "b"; it becomes part of the state.
    Builder b({"a"}, {"a", "b"}, {"q"}, {"x", "y"});
    b.m.init["x"] = {"b"};
    b.edge("q", "a", "q", {{"x", "x"}, {"y", "yx"}}).out("q", "y");
    auto simple = to_simple(b.m);
    auto g = classify(flow_automaton(simple));
    REQUIRE(g.degree == 1);
    auto rb = remove_bounded_layer(simple, g.partition);
    CHECK(rb.machine.states.size() == 1);
    CHECK(rb.machine.registers.size() + 1 == simple.registers.size() - g.trim_removed.size());
    for (std::size_t n = 0; n <= 5; ++n) CHECK(fn(rb.machine, rep("a", n)) == fn(b.m, rep("a", n)));

    // Degree 0: constant per state, no registers.
    Builder c({"a", "b"}, {"c"}, {"q", "r"}, {"x"});
    c.edge("q", "a", "r", {{"x", "c"}}).edge("q", "b", "q", {}).edge("r", "a", "r", {}).edge("r", "b", "q", {{"x", ""}});
    c.out("q", "xc").out("r", "xx");
    auto cs = to_simple(c.m);
    auto cg = classify(flow_automaton(cs));
    REQUIRE(cg.degree == 0);
    auto cr = remove_bounded_layer(cs, cg.partition);
    CHECK(cr.machine.registers.empty());
    for (const auto& w : small_words()) CHECK(fn(cr.machine, w) == fn(c.m, w));

    for (const auto& m : {corpus::mul_sst(), corpus::mul_copyful_sst()}) {
        auto s = to_simple(make_total(m).machine);
        auto mg = classify(flow_automaton(s));
        REQUIRE(mg.degree == 2);
        auto mr = remove_bounded_layer(s, mg.partition);
        CHECK(check_bounded(mr.machine, mr.layers, mr.bound).bounded);
        for (const auto& w : words_upto(m.input, 6)) CHECK(fn(mr.machine, w) == fn(s, w));
    }
}

TEST_CASE("sst-f extraction")
{
    auto m = corpus::mul_sst();
    auto ext = extract_sstf(m, *m.layers);
    CHECK(ext.lower.registers == std::vector<std::string>{"x"});
    CHECK(ext.top.registers == std::vector<std::string>{"y"});
    const auto& upd = ext.top.delta.at({"p1", "0"}).update.at("y");
    REQUIRE(upd.size() == 2);
    CHECK(upd[0].is_fun());
    CHECK(upd[1] == Token::reg("y"));
    for (const auto& w : words_upto(m.input, 5)) CHECK(fn(ext.top, w, ext.registry) == fn(m, w));

    auto r = corpus::reverse_sst();
    auto e0 = extract_sstf(r, {r.registers});
    CHECK(e0.registry.empty());
    CHECK(e0.top.delta == r.delta);

    // F reads the lower register directly.
    Builder b({"a", "b"}, {"a", "b"}, {"q"}, {"x", "y"});
    b.edge("q", "a", "q", {{"x", "xa"}, {"y", "yx"}}).edge("q", "b", "q", {{"x", "bx"}, {"y", "xy"}}).out("q", "yxa");
    LayerPartition p{{"x"}, {"y"}};
    auto e1 = extract_sstf(b.m, p);
    CHECK(e1.top.registers.size() == 2);
    for (const auto& tok : e1.top.out.at("q")) CHECK(tok != Token::reg("x"));
    for (const auto& w : small_words()) CHECK(fn(e1.top, w, e1.registry) == fn(b.m, w));
}

TEST_CASE("guessing occurrence profiles")
{
    Builder b({"a"}, {"f"}, {"q", "q'"}, {"x", "y"});
    b.edge("q", "a", "q'", {{"x", "x"}, {"y", "xyf"}}).edge("q'", "a", "q'", {}).out("q'", "xy").out("q", "");
    auto n = bounded_sstf_to_unambiguous(b.m, 2);
    std::string p = "q|2,1", pp = "q'|1,1", ppp = "q'|2,0";
    REQUIRE(n.delta.count({p, "a", pp}));
    CHECK_FALSE(n.delta.count({p, "a", ppp}));
    const auto& lam = n.delta.at({p, "a", pp});
    std::set<std::string> regs(n.registers.begin(), n.registers.end());
    auto R = [](const std::string& s) { return Token::reg(s); };
    CHECK(lam.at("x#1") == Expr{R("x#1")});
    CHECK(lam.at("x#2").empty());
    CHECK(lam.at("y#1") == Expr{R("x#2"), R("y#1"), Token::letter("f")});
    CHECK(lam.at("y#2").empty());
    CHECK(check_copyless(n).empty());
    for (const auto& w : words_upto({"a"}, 5)) {
        CHECK(enumerate_nsstf_runs(n, w, {}).size() == (fn(b.m, w) ? 1u : 0u));
        CHECK(fn(n, w) == fn(b.m, w));
    }

    auto tot = make_total(corpus::reverse_sst()).machine;
    auto u = bounded_sstf_to_unambiguous(tot, 1);
    for (const auto& [q, v] : u.init)
        for (const auto& ch : q)
            if (std::isdigit(static_cast<unsigned char>(ch))) CHECK(ch <= '1');
    for (const auto& w : words_upto(tot.input, 4)) {
        CHECK(enumerate_nsstf_runs(u, w, {}).size() == 1);
        CHECK(fn(u, w) == fn(tot, w));
    }
}

TEST_CASE("skeleton decomposition")
{
    std::set<std::string> regs{"x", "y"};
    Substitution s1{{"x", parse_expr("a", regs)}, {"y", parse_expr("bxyc", regs)}};
    Substitution s2{{"x", parse_expr("yd", regs)}, {"y", parse_expr("x", regs)}};
    auto d1 = decompose(s1);
    CHECK(d1.ske.at("x").empty());
    CHECK(d1.ske.at("y") == std::vector<std::string>{"x", "y"});
    CHECK(d1.beg.at("x") == letters(w("a")));
    CHECK(d1.beg.at("y") == letters(w("b")));
    CHECK(d1.fol.at("x").empty());
    CHECK(d1.fol.at("y") == letters(w("c")));
    auto c = compose_decomposed(d1, decompose(s2));
    CHECK(c.beg.at("x") == letters(w("b")));
    CHECK(c.beg.at("y") == letters(w("a")));
    CHECK(c.fol.at("y") == letters(w("cd")));
    CHECK(c.ske.at("x") == std::vector<std::string>{"x", "y"});
    CHECK(c == decompose(compose(s1, s2)));

    std::mt19937 rng(3);
    std::vector<std::string> names{"p", "q", "r", "s"};
    auto random_copyless = [&](std::size_t n) {
        std::vector<std::string> xs(names.begin(), names.begin() + n);
        std::vector<std::string> pool = xs;
        std::shuffle(pool.begin(), pool.end(), rng);
        pool.resize(rng() % (n + 1));
        Substitution s;
        for (const auto& x : xs) s[x] = {};
        for (const auto& z : pool) s[xs[rng() % n]].push_back(Token::reg(z));
        for (auto& [x, e] : s) {
            Expr out;
            for (const auto& t : e) {
                for (int i = rng() % 2; i > 0; --i) out.push_back(Token::letter("a"));
                out.push_back(t);
            }
            for (int i = rng() % 3; i > 0; --i) out.push_back(Token::letter(rng() % 2 ? "b" : "c"));
            if (rng() % 4 == 0) out.insert(out.begin(), Token::fun("f"));
            e = out;
        }
        return s;
    };
    for (int i = 0; i < 200; ++i) {
        std::size_t n = 1 + rng() % 4;
        auto s = random_copyless(n), t = random_copyless(n);
        CHECK(reassemble(decompose(s)) == s);
        CHECK(compose_decomposed(decompose(s), decompose(t)) == decompose(compose(s, t)));
    }
    CHECK_THROWS_AS(decompose(Substitution{{"x", {Token::reg("x"), Token::reg("x")}}}), ModelError);
}

TEST_CASE("determinization of unambiguous machines")
{
    std::vector<SST> inputs{make_total(corpus::reverse_sst()).machine, make_total(corpus::bounded02_sst()).machine,
                            make_total(corpus::reverse_copyful_sst()).machine};
    std::mt19937 rng(5);
    while (inputs.size() < 40) {
        auto m = make_total(random_sst(rng)).machine;
        auto s = to_simple(m);
        auto g = classify(flow_automaton(s));
        if (g.exponential() || !measure_bound(m, {m.registers}, 6)) continue;
        inputs.push_back(m);
    }
    for (const auto& m : inputs) {
        int B = *measure_bound(m, {m.registers}, 6);
        auto n = bounded_sstf_to_unambiguous(m, B);
        CHECK(check_copyless(n).empty());
        DeterminizeStats st;
        auto d = determinize_nsstf(n, &st);
        CHECK(check_copyless(d).empty());
        CHECK(st.max_slots <= 2 * n.states.size() - 1);
        for (const auto& w : words_upto(m.input, 5)) {
            CHECK(enumerate_nsstf_runs(n, w, {}).size() == 1);
            CHECK(fn(n, w) == fn(m, w));
            CHECK(fn(d, w) == fn(m, w));
        }
    }

    // Two runs reaching one state.
    NSSTF amb;
    amb.input = {"a"};
    amb.output = {"a"};
    amb.states = {"p", "q", "r"};
    amb.registers = {"x"};
    amb.init["p"] = {{"x", {}}};
    amb.delta[{"p", "a", "q"}] = {{"x", {Token::reg("x")}}};
    amb.delta[{"p", "a", "r"}] = {{"x", {Token::reg("x")}}};
    amb.delta[{"q", "a", "r"}] = {{"x", {Token::reg("x")}}};
    amb.delta[{"r", "a", "r"}] = {{"x", {Token::reg("x")}}};
    amb.out["r"] = {Token::reg("x")};
    CHECK_THROWS_AS(determinize_nsstf(amb), ModelError);
}

TEST_CASE("splicing a lower layer")
{
    Builder low({"a"}, {"a"}, {"q"}, {"x"});
    low.edge("q", "a", "q", {{"x", "xa"}});
    low.m.out["q"] = {};
    Builder top({"a"}, {"a"}, {"t"}, {"y"});
    top.funs = {"f"};
    top.m.functions = {"f"};
    top.edge("t", "a", "t", {{"y", "fy"}}).out("t", "y");
    SST fx = low.m;
    fx.out["q"] = {Token::reg("x")};
    FunctionRegistry reg{{"f", fx}};
    auto s = splice_layers(top.m, low.m, {{"x"}}, {{"f", register_binding(low.m, "x", Timing::Post)}});
    CHECK(check_layered(s, *s.layers).empty());
    CHECK(s.delta.begin()->second.update.at("y") ==
          Expr{Token::reg("x"), Token::letter("a"), Token::reg("y")});
    for (std::size_t n = 0; n <= 5; ++n) CHECK(fn(s, rep("a", n)) == fn(top.m, rep("a", n), reg));
    CHECK_THROWS_AS(splice_layers(top.m, low.m, {{"x"}}, {}), ModelError);
}

TEST_CASE("layered machines from the pipeline")
{
    auto e = to_k_layered(corpus::exp_sst());
    CHECK(e.exponential);

    auto check = [](const SST& m, int k, const std::vector<Word>& ws) {
        auto r = to_k_layered(m);
        REQUIRE_FALSE(r.exponential);
        CHECK(r.k == k);
        CHECK(check_layered(r.machine, *r.machine.layers).empty());
        CHECK(r.machine.layers->size() <= static_cast<std::size_t>(k + 1));
        for (const auto& w : ws) CHECK(fn(r.machine, w) == fn(m, w));
        return r;
    };
    auto rc = check(corpus::reverse_copyful_sst(), 0, words_upto(corpus::reverse_sst().input, 5));
    CHECK(check_copyless(rc.machine).empty());
    check(corpus::bounded02_sst(), 0, words_upto(corpus::bounded02_sst().input, 5));
    std::vector<Word> mulwords = words_upto(corpus::mul_sst().input, 5);
    for (const auto& u : words_upto({"a", "b"}, 3))
        for (std::size_t n = 0; n <= 3; ++n) {
            Word v = u;
            v.push_back("#");
            for (std::size_t i = 0; i < n; ++i) v.push_back("0");
            mulwords.push_back(v);
        }
    check(corpus::mul_sst(), 1, mulwords);
    check(corpus::mul_copyful_sst(), 1, mulwords);
}

TEST_CASE("pipeline preserves random functions")
{
    std::mt19937 rng(17);
    int done = 0;
    for (int i = 0; i < 300 && done < 60; ++i) {
        auto m = random_sst(rng);
        std::vector<std::pair<std::string, Machine>> stages;
        auto r = to_k_layered(m, [&](const std::string& s, const Machine& x) { stages.emplace_back(s, x); });
        if (r.exponential) continue;
        ++done;
        CHECK(r.k == std::max(r.report.degree - 1, 0));
        CHECK(check_layered(r.machine, *r.machine.layers).empty());
        REQUIRE(stages.back().first == "domain");
        for (const auto& w : small_words()) {
            auto want = fn(m, w);
            CHECK(fn(r.machine, w) == want);
            // Intermediate stages are total; they agree with m on its domain.
            if (want)
                for (const auto& [name, x] : stages) {
                    CAPTURE(name);
                    CHECK(fn(std::get<SST>(x), w) == want);
                }
        }
    }
    CHECK(done >= 30);
}
