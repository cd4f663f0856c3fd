#include "xducer/io.hpp"

#include <fstream>
#include <sstream>

namespace xducer {

namespace {

// A JSON value with its pointer, so every schema error names the field.
struct Node {
    const json& v;
    std::string path;

    [[noreturn]] void fail(const std::string& msg) const { throw SchemaError(path.empty() ? "/" : path, msg); }

    bool has(const std::string& k) const { return v.is_object() && v.contains(k) && !v.at(k).is_null(); }
    Node at(const std::string& k) const
    {
        if (!v.is_object()) fail("expected an object");
        if (!v.contains(k)) throw SchemaError(path + "/" + k, "missing field");
        return {v.at(k), path + "/" + k};
    }
    Node at(std::size_t i) const { return {v.at(i), path + "/" + std::to_string(i)}; }
    std::size_t size() const
    {
        if (!v.is_array()) fail("expected an array");
        return v.size();
    }
    std::string str() const
    {
        if (!v.is_string()) fail("expected a string");
        return v.get<std::string>();
    }
    std::uint64_t uint() const
    {
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
            fail("expected a non-negative integer");
        return v.get<std::uint64_t>();
    }
    std::vector<std::string> strings() const
    {
        std::vector<std::string> r;
        for (std::size_t i = 0; i < size(); ++i) r.push_back(at(i).str());
        return r;
    }
    template <class F>
    void each_member(F f) const
    {
        if (!v.is_object()) fail("expected an object");
        for (const auto& [k, x] : v.items()) f(k, Node{x, path + "/" + k});
    }
};

json word_json(const Word& w) { return json(w); }

json expr_json(const Expr& e)
{
    json a = json::array();
    for (const auto& t : e) {
        const char* k = t.is_letter() ? "lit" : t.is_reg() ? "reg" : "fun";
        a.push_back(json{{k, t.name}});
    }
    return a;
}

Expr read_expr(const Node& n)
{
    Expr e;
    for (std::size_t i = 0; i < n.size(); ++i) {
        auto t = n.at(i);
        if (!t.v.is_object() || t.v.size() != 1) t.fail("expected a token object {\"lit\"|\"reg\"|\"fun\": name}");
        if (t.has("lit")) e.push_back(Token::letter(t.at("lit").str()));
        else if (t.has("reg")) e.push_back(Token::reg(t.at("reg").str()));
        else if (t.has("fun")) e.push_back(Token::fun(t.at("fun").str()));
        else t.fail("unknown token kind");
    }
    return e;
}

json subst_json(const Substitution& s)
{
    json o = json::object();
    for (const auto& [x, e] : s) o[x] = expr_json(e);
    return o;
}

Substitution read_subst(const Node& n)
{
    Substitution s;
    n.each_member([&](const std::string& k, const Node& x) { s[k] = read_expr(x); });
    return s;
}

json valuation_json(const Valuation& v)
{
    json o = json::object();
    for (const auto& [x, w] : v) o[x] = w;
    return o;
}

Valuation read_valuation(const Node& n)
{
    Valuation v;
    n.each_member([&](const std::string& k, const Node& x) { v[k] = x.strings(); });
    return v;
}

std::string move_name(Move m) { return m == Move::Left ? "left" : "right"; }

Move read_move(const Node& n)
{
    auto s = n.str();
    if (s == "left") return Move::Left;
    if (s == "right") return Move::Right;
    n.fail("expected \"left\" or \"right\"");
}

bool has_fun(const SST& m)
{
    if (!m.functions.empty()) return true;
    for (const auto& [k, e] : m.delta)
        for (const auto& [x, a] : e.update)
            for (const auto& t : a)
                if (t.is_fun()) return true;
    return false;
}

json header(const std::string& kind, const Alphabet& in, const Alphabet& out)
{
    return json{{"kind", kind}, {"input_alphabet", in}, {"output_alphabet", out}};
}

json encode(const TwoWayTransducer& t)
{
    json j = header("two-way", t.input, t.output);
    j["states"] = t.states;
    j["initial"] = t.initial;
    j["finals"] = t.finals;
    json tr = json::array();
    for (const auto& [k, e] : t.delta)
        tr.push_back({{"state", k.first}, {"symbol", k.second}, {"target", e.target}, {"move", move_name(e.move)},
                      {"output", e.output}});
    j["transitions"] = tr;
    return j;
}

json encode(const MarbleTransducer& t)
{
    json j = header("marble", t.input, t.output);
    j["states"] = t.states;
    j["initial"] = t.initial;
    j["finals"] = t.finals;
    j["colors"] = t.colors;
    if (t.declared_bound) j["declared_marble_bound"] = *t.declared_bound;
    json tr = json::array();
    for (const auto& [k, e] : t.delta) {
        const auto& [q, a, c] = k;
        json key = {q, a, c ? json(*c) : json(nullptr)};
        json row = {{"key", key}, {"target", e.target}, {"output", e.output}};
        using K = MarbleAction::Kind;
        switch (e.action.kind) {
        case K::Left: row["action"] = "left"; break;
        case K::Right: row["action"] = "right"; break;
        case K::Lift: row["action"] = "lift"; break;
        case K::Drop:
            row["action"] = "drop";
            row["color"] = e.action.color;
            break;
        }
        tr.push_back(row);
    }
    j["transitions"] = tr;
    return j;
}

json encode(const SST& m)
{
    json j = header(has_fun(m) ? "sstf" : "sst", m.input, m.output);
    j["states"] = m.states;
    j["initial"] = m.initial;
    j["registers"] = m.registers;
    j["initial_valuation"] = valuation_json(m.init);
    if (!m.functions.empty()) j["functions"] = m.functions;
    if (m.layers) j["layers"] = *m.layers;
    json tr = json::array();
    for (const auto& [k, e] : m.delta)
        tr.push_back({{"state", k.first}, {"symbol", k.second}, {"target", e.target}, {"update", subst_json(e.update)}});
    j["transitions"] = tr;
    json out = json::object();
    for (const auto& [q, e] : m.out) out[q] = expr_json(e);
    j["output"] = out;
    return j;
}

json encode(const NSSTF& m)
{
    json j = header("nsstf", m.input, m.output);
    j["states"] = m.states;
    j["registers"] = m.registers;
    j["functions"] = m.functions;
    json init = json::object();
    for (const auto& [q, v] : m.init) init[q] = valuation_json(v);
    j["initial_valuation"] = init;
    json tr = json::array();
    for (const auto& [k, u] : m.delta) {
        const auto& [p, a, q] = k;
        tr.push_back({{"state", p}, {"symbol", a}, {"target", q}, {"update", subst_json(u)}});
    }
    j["transitions"] = tr;
    json out = json::object();
    for (const auto& [q, e] : m.out) out[q] = expr_json(e);
    j["output"] = out;
    return j;
}

json encode(const NAutomaton& a)
{
    json j = {{"kind", "nautomaton"}, {"input_alphabet", a.input}};
    j["states"] = a.states;
    j["alpha"] = a.alpha;
    j["beta"] = a.beta;
    json mu = json::object();
    for (const auto& [s, m] : a.mu) mu[s] = m;
    j["mu"] = mu;
    return j;
}

template <class T>
void read_common(const Node& n, T& t)
{
    t.input = n.at("input_alphabet").strings();
    t.output = n.at("output_alphabet").strings();
}

TwoWayTransducer decode_two_way(const Node& n)
{
    TwoWayTransducer t;
    read_common(n, t);
    t.states = n.at("states").strings();
    t.initial = n.at("initial").str();
    for (const auto& f : n.at("finals").strings()) t.finals.insert(f);
    auto tr = n.at("transitions");
    for (std::size_t i = 0; i < tr.size(); ++i) {
        auto r = tr.at(i);
        std::pair<std::string, Sym> k{r.at("state").str(), r.at("symbol").str()};
        if (t.delta.count(k)) r.fail("duplicate transition");
        t.delta[k] = {r.at("target").str(), read_move(r.at("move")), r.at("output").strings()};
    }
    return t;
}

MarbleTransducer decode_marble(const Node& n)
{
    MarbleTransducer t;
    read_common(n, t);
    t.states = n.at("states").strings();
    t.initial = n.at("initial").str();
    for (const auto& f : n.at("finals").strings()) t.finals.insert(f);
    t.colors = n.at("colors").strings();
    if (n.has("declared_marble_bound")) t.declared_bound = static_cast<int>(n.at("declared_marble_bound").uint());
    auto tr = n.at("transitions");
    for (std::size_t i = 0; i < tr.size(); ++i) {
        auto r = tr.at(i);
        auto key = r.at("key");
        if (key.size() != 3) key.fail("expected [state, symbol, color-or-null]");
        std::optional<std::string> c;
        if (!key.v.at(2).is_null()) c = key.at(2).str();
        MarbleKey k{key.at(0).str(), key.at(1).str(), c};
        if (t.delta.count(k)) r.fail("duplicate transition");
        MarbleEdge e;
        e.target = r.at("target").str();
        e.output = r.at("output").strings();
        auto act = r.at("action");
        auto s = act.str();
        if (s == "left") e.action = MarbleAction::left();
        else if (s == "right") e.action = MarbleAction::right();
        else if (s == "lift") e.action = MarbleAction::lift();
        else if (s == "drop") e.action = MarbleAction::drop(r.at("color").str());
        else act.fail("expected left, right, lift or drop");
        t.delta[k] = e;
    }
    return t;
}

std::map<std::string, Expr> read_out(const Node& n)
{
    std::map<std::string, Expr> out;
    n.each_member([&](const std::string& q, const Node& e) { out[q] = read_expr(e); });
    return out;
}

SST decode_sst(const Node& n)
{
    SST m;
    read_common(n, m);
    m.states = n.at("states").strings();
    m.initial = n.at("initial").str();
    m.registers = n.at("registers").strings();
    m.init = read_valuation(n.at("initial_valuation"));
    if (n.has("functions")) m.functions = n.at("functions").strings();
    if (n.has("layers")) {
        auto l = n.at("layers");
        LayerPartition p;
        for (std::size_t i = 0; i < l.size(); ++i) p.push_back(l.at(i).strings());
        m.layers = p;
    }
    auto tr = n.at("transitions");
    for (std::size_t i = 0; i < tr.size(); ++i) {
        auto r = tr.at(i);
        std::pair<std::string, Sym> k{r.at("state").str(), r.at("symbol").str()};
        if (m.delta.count(k)) r.fail("duplicate transition");
        m.delta[k] = {r.at("target").str(), read_subst(r.at("update"))};
    }
    m.out = read_out(n.at("output"));
    return m;
}

NSSTF decode_nsstf(const Node& n)
{
    NSSTF m;
    read_common(n, m);
    m.states = n.at("states").strings();
    m.registers = n.at("registers").strings();
    if (n.has("functions")) m.functions = n.at("functions").strings();
    n.at("initial_valuation").each_member([&](const std::string& q, const Node& v) { m.init[q] = read_valuation(v); });
    auto tr = n.at("transitions");
    for (std::size_t i = 0; i < tr.size(); ++i) {
        auto r = tr.at(i);
        std::tuple<std::string, Sym, std::string> k{r.at("state").str(), r.at("symbol").str(), r.at("target").str()};
        if (m.delta.count(k)) r.fail("duplicate transition");
        m.delta[k] = read_subst(r.at("update"));
    }
    m.out = read_out(n.at("output"));
    return m;
}

NAutomaton decode_nautomaton(const Node& n)
{
    NAutomaton a;
    a.input = n.at("input_alphabet").strings();
    a.states = n.at("states").strings();
    auto vec = [&](const Node& x) {
        std::vector<std::uint64_t> r;
        for (std::size_t i = 0; i < x.size(); ++i) r.push_back(x.at(i).uint());
        if (r.size() != a.states.size()) x.fail("expected one entry per state");
        return r;
    };
    a.alpha = vec(n.at("alpha"));
    a.beta = vec(n.at("beta"));
    n.at("mu").each_member([&](const std::string& s, const Node& m) {
        if (m.size() != a.states.size()) m.fail("expected one row per state");
        Matrix mx;
        for (std::size_t i = 0; i < m.size(); ++i) mx.push_back(vec(m.at(i)));
        a.mu[s] = mx;
    });
    return a;
}

ValidationReport validate_any(const Machine& m)
{
    return std::visit(
        [](const auto& x) -> ValidationReport {
            if constexpr (std::is_same_v<std::decay_t<decltype(x)>, NAutomaton>) {
                ValidationReport r;
                for (const auto& s : x.input)
                    if (!x.mu.count(s)) r.push_back("missing matrix for symbol " + s);
                return r;
            } else {
                return validate(x);
            }
        },
        m);
}

}  // namespace

json to_json(const Machine& m, const FunctionRegistry& registry)
{
    json j = std::visit([](const auto& x) { return encode(x); }, m);
    if (!registry.empty()) {
        json r = json::object();
        for (const auto& [name, f] : registry) r[name] = to_json(f);
        j["registry"] = r;
    }
    return j;
}

MachineFile from_json(const json& j)
{
    Node n{j, ""};
    auto kind = n.at("kind").str();
    MachineFile f{TwoWayTransducer{}, {}};
    if (kind == "two-way") f.machine = decode_two_way(n);
    else if (kind == "marble") f.machine = decode_marble(n);
    else if (kind == "sst" || kind == "sstf") f.machine = decode_sst(n);
    else if (kind == "nsstf") f.machine = decode_nsstf(n);
    else if (kind == "nautomaton") f.machine = decode_nautomaton(n);
    else n.at("kind").fail("unknown machine kind " + kind);
    auto problems = validate_any(f.machine);
    if (!problems.empty()) {
        std::string msg = "invalid machine:";
        for (const auto& p : problems) msg += "\n  " + p;
        throw ModelError(msg);
    }
    if (n.has("registry"))
        n.at("registry").each_member([&](const std::string& name, const Node& x) {
            try {
                f.registry[name] = from_json(x.v).machine;
            } catch (const SchemaError& e) {
                throw SchemaError(x.path + e.path, e.what());
            }
        });
    return f;
}

std::string emit_text(const Machine& m, const FunctionRegistry& registry)
{
    return to_json(m, registry).dump(2) + "\n";
}

MachineFile parse_machine(const std::filesystem::path& p)
{
    std::ifstream in(p);
    if (!in) throw IoError("cannot read " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    json j;
    try {
        j = json::parse(ss.str());
    } catch (const json::parse_error& e) {
        throw SchemaError("/", std::string("malformed JSON: ") + e.what());
    }
    return from_json(j);
}

void emit_machine(const Machine& m, const std::filesystem::path& p, const FunctionRegistry& registry)
{
    std::ofstream out(p);
    if (!out) throw IoError("cannot write " + p.string());
    out << emit_text(m, registry);
    if (!out) throw IoError("cannot write " + p.string());
}

json to_json(const Word& w) { return word_json(w); }

json to_json(const GrowthReport& r, std::optional<int> minimal_marbles)
{
    json j;
    if (r.exponential()) {
        j["class"] = "exponential";
        j["state"] = r.q;
        j["witness"] = {{"u", r.u}, {"v", r.v}, {"z", r.z}};
    } else {
        j["class"] = "polynomial";
        j["degree"] = r.degree;
        j["partition"] = r.partition;
        j["family"] = {{"left", r.family.left},
                       {"loops", r.family.loops},
                       {"connectors", r.family.connectors},
                       {"right", r.family.right}};
        if (minimal_marbles) j["minimal_marbles"] = *minimal_marbles;
    }
    j["trim_removed"] = r.trim_removed;
    return j;
}

Word parse_word_arg(const Alphabet& a, const std::string& text)
{
    bool multi = false;
    for (const auto& s : a) multi = multi || code_points(s).size() != 1;
    if (!multi) return word_of(text);
    Word w;
    if (text.empty()) return w;
    std::stringstream ss(text);
    std::string s;
    while (std::getline(ss, s, ',')) w.push_back(s);
    if (text.back() == ',') w.push_back("");
    return w;
}

std::string render_word(const Alphabet& a, const Word& w)
{
    bool multi = false;
    for (const auto& s : a) multi = multi || code_points(s).size() != 1;
    std::string r;
    for (std::size_t i = 0; i < w.size(); ++i) r += (multi && i ? "," : "") + w[i];
    return r;
}

}  // namespace xducer
