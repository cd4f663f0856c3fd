#include "xducer/corpus.hpp"

namespace xducer::corpus {

namespace {

const Alphabet ABC = {"a", "b", "c"};

void tw(TwoWayTransducer& t, const std::string& q, const Sym& a, const std::string& to, Move mv,
        Word out = {})
{
    t.delta[{q, a}] = {to, mv, std::move(out)};
}

void mt(MarbleTransducer& t, const std::string& q, const Sym& a, std::optional<std::string> c,
        const std::string& to, MarbleAction act, Word out = {})
{
    t.delta[{q, a, std::move(c)}] = {to, std::move(act), std::move(out)};
}

void st(SST& m, const std::string& q, const Sym& a, const std::string& to,
        const std::map<std::string, std::string>& upd)
{
    std::set<std::string> regs(m.registers.begin(), m.registers.end());
    Substitution s;
    for (const auto& [x, rhs] : upd) s[x] = parse_expr(rhs, regs);
    m.delta[{q, a}] = {to, std::move(s)};
}

Expr ex(const SST& m, const std::string& text)
{
    return parse_expr(text, std::set<std::string>(m.registers.begin(), m.registers.end()));
}

}  // namespace

TwoWayTransducer reverse_two_way()
{
    TwoWayTransducer t;
    t.input = t.output = ABC;
    t.states = {"q0", "q1", "q2"};
    t.initial = "q0";
    t.finals = {"q2"};
    tw(t, "q0", LEFT_END, "q0", Move::Right);
    tw(t, "q0", RIGHT_END, "q1", Move::Left);
    tw(t, "q1", LEFT_END, "q2", Move::Right);
    for (const auto& s : ABC) {
        tw(t, "q0", s, "q0", Move::Right);
        tw(t, "q1", s, "q1", Move::Left, {s});
        tw(t, "q2", s, "q2", Move::Right);
    }
    return t;
}

TwoWayTransducer identity_two_way()
{
    TwoWayTransducer t;
    t.input = t.output = ABC;
    t.states = {"q0"};
    t.initial = "q0";
    t.finals = {"q0"};
    tw(t, "q0", LEFT_END, "q0", Move::Right);
    for (const auto& s : ABC) tw(t, "q0", s, "q0", Move::Right, {s});
    return t;
}

SST reverse_sst()
{
    SST m;
    m.input = m.output = ABC;
    m.states = {"q"};
    m.initial = "q";
    m.registers = {"x"};
    m.init = {{"x", {}}};
    for (const auto& s : ABC) st(m, "q", s, "q", {{"x", s + "x"}});
    m.out["q"] = ex(m, "x");
    return m;
}

SST reverse_copyful_sst()
{
    SST m;
    m.input = m.output = ABC;
    m.states = {"q"};
    m.initial = "q";
    m.registers = {"x", "z"};
    m.init = {{"x", {}}, {"z", {}}};
    for (const auto& s : ABC) st(m, "q", s, "q", {{"x", s + "x"}, {"z", s + "x"}});
    m.out["q"] = ex(m, "z");
    return m;
}

SST exp_sst()
{
    SST m;
    m.input = m.output = {"a"};
    m.states = {"q"};
    m.initial = "q";
    m.registers = {"x"};
    m.init = {{"x", {"a"}}};
    st(m, "q", "a", "q", {{"x", "xx"}});
    m.out["q"] = ex(m, "x");
    return m;
}

MarbleTransducer exp_marble()
{
    MarbleTransducer t;
    t.input = t.output = {"a"};
    t.states = {"start", "down", "dropped", "ret", "flip", "carry"};
    t.initial = "start";
    t.finals = {"ret"};
    t.colors = {"0", "1"};
    using A = MarbleAction;
    mt(t, "start", LEFT_END, {}, "start", A::right());
    mt(t, "start", "a", {}, "start", A::right());
    mt(t, "start", RIGHT_END, {}, "down", A::left());
    // Every position right of the head but left of the counter top gets digit 0.
    mt(t, "down", "a", {}, "dropped", A::drop("0"));
    mt(t, "dropped", "a", "0", "down", A::left());
    mt(t, "dropped", "a", "1", "down", A::left());
    mt(t, "down", LEFT_END, {}, "ret", A::right(), {"a"});
    mt(t, "ret", "a", "0", "flip", A::lift());
    mt(t, "flip", "a", {}, "dropped", A::drop("1"));
    mt(t, "ret", "a", "1", "carry", A::lift());
    mt(t, "carry", "a", {}, "ret", A::right());
    return t;
}

SST mul_sst()
{
    SST m;
    m.input = {"a", "b", "#", "0"};
    m.output = {"a", "b", "#"};
    m.states = {"p0", "p1"};
    m.initial = "p0";
    m.registers = {"x", "y"};
    m.init = {{"x", {}}, {"y", {}}};
    st(m, "p0", "a", "p0", {{"x", "xa"}, {"y", "y"}});
    st(m, "p0", "b", "p0", {{"x", "xb"}, {"y", "y"}});
    st(m, "p0", "#", "p1", {{"x", "x#"}, {"y", "y"}});
    st(m, "p1", "0", "p1", {{"x", "x"}, {"y", "xy"}});
    m.out["p1"] = ex(m, "y");
    m.layers = LayerPartition{{"x"}, {"y"}};
    return m;
}

SST mul_copyful_sst()
{
    SST m;
    m.input = {"a", "b", "#", "0"};
    m.output = {"a", "b", "#"};
    m.states = {"p0", "p1"};
    m.initial = "p0";
    m.registers = {"x", "y", "z"};
    m.init = {{"x", {}}, {"y", {}}, {"z", {}}};
    st(m, "p0", "a", "p0", {{"x", "xa"}, {"y", "y"}, {"z", "z"}});
    st(m, "p0", "b", "p0", {{"x", "xb"}, {"y", "y"}, {"z", "z"}});
    st(m, "p0", "#", "p1", {{"x", "x#"}, {"y", "y"}, {"z", "z"}});
    st(m, "p1", "0", "p1", {{"x", "x"}, {"y", "xy"}, {"z", "xy"}});
    m.out["p1"] = ex(m, "z");
    return m;
}

MarbleTransducer mul_marble()
{
    MarbleTransducer t;
    t.input = {"a", "b", "#", "0"};
    t.output = {"a", "b", "#"};
    t.states = {"s0", "s1", "s2", "s3", "s4", "s5", "s6"};
    t.initial = "s0";
    t.finals = {"s1"};
    t.colors = {"m"};
    t.declared_bound = 1;
    using A = MarbleAction;
    mt(t, "s0", LEFT_END, {}, "s0", A::right());
    mt(t, "s0", "a", {}, "s0", A::right());
    mt(t, "s0", "b", {}, "s0", A::right());
    mt(t, "s0", "#", {}, "s1", A::right());
    // s1 sits on the next 0 to process.
    mt(t, "s1", "0", {}, "s2", A::drop("m"));
    mt(t, "s2", "0", "m", "s3", A::left());
    for (const char* s : {"a", "b", "#", "0"}) mt(t, "s3", s, {}, "s3", A::left());
    mt(t, "s3", LEFT_END, {}, "s4", A::right());
    mt(t, "s4", "a", {}, "s4", A::right(), {"a"});
    mt(t, "s4", "b", {}, "s4", A::right(), {"b"});
    mt(t, "s4", "#", {}, "s5", A::right(), {"#"});
    mt(t, "s5", "0", {}, "s5", A::right());
    mt(t, "s5", "0", "m", "s6", A::lift());
    mt(t, "s6", "0", {}, "s1", A::right());
    return t;
}

namespace {

MarbleTransducer pow2_base(bool wasteful)
{
    MarbleTransducer t;
    t.input = t.output = {"a"};
    t.states = {"s0", "s1", "s2", "s3", "s4", "s5", "s6", "s7"};
    t.initial = "s0";
    t.finals = {"s7"};
    t.colors = {"m"};
    t.declared_bound = 1;
    using A = MarbleAction;
    mt(t, "s0", LEFT_END, {}, "s1", A::right());
    mt(t, "s1", "a", {}, "s2", A::drop("m"));
    mt(t, "s2", "a", "m", "s3", A::left());
    mt(t, "s3", "a", {}, "s3", A::left(), {"a", "a"});
    if (wasteful) {
        t.states.insert(t.states.end(), {"w1", "w2"});
        t.colors.push_back("w");
        t.declared_bound = 2;
        mt(t, "s3", LEFT_END, {}, "w1", A::drop("w"));
        mt(t, "w1", LEFT_END, "w", "w2", A::lift());
        mt(t, "w2", LEFT_END, {}, "s4", A::right());
    } else {
        mt(t, "s3", LEFT_END, {}, "s4", A::right());
    }
    mt(t, "s4", "a", {}, "s4", A::right());
    mt(t, "s4", "a", "m", "s5", A::lift());
    mt(t, "s5", "a", {}, "s1", A::right());
    mt(t, "s1", RIGHT_END, {}, "s6", A::left());
    mt(t, "s6", "a", {}, "s6", A::left(), {"a"});
    mt(t, "s6", LEFT_END, {}, "s7", A::right());
    mt(t, "s7", "a", {}, "s7", A::right());
    return t;
}

}  // namespace

MarbleTransducer pow2_marble() { return pow2_base(false); }
MarbleTransducer pow2_wasteful() { return pow2_base(true); }

SST bounded02_sst()
{
    SST m;
    m.input = {"a"};
    m.output = {"a", "b"};
    m.states = {"q"};
    m.initial = "q";
    m.registers = {"x", "y"};
    m.init = {{"x", {}}, {"y", {}}};
    st(m, "q", "a", "q", {{"x", "xa"}, {"y", "xb"}});
    m.out["q"] = ex(m, "xy");
    return m;
}

std::map<std::string, Machine> all()
{
    return {
        {"reverse_two_way", reverse_two_way()},
        {"identity_two_way", identity_two_way()},
        {"reverse_sst", reverse_sst()},
        {"reverse_copyful_sst", reverse_copyful_sst()},
        {"exp_sst", exp_sst()},
        {"exp_marble", exp_marble()},
        {"mul_sst", mul_sst()},
        {"mul_copyful_sst", mul_copyful_sst()},
        {"mul_marble", mul_marble()},
        {"pow2_marble", pow2_marble()},
        {"pow2_wasteful_marble", pow2_wasteful()},
        {"bounded02_sst", bounded02_sst()},
    };
}

}  // namespace xducer::corpus
