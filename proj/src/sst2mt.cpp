#include "xducer/sst2mt.hpp"

#include <deque>
#include <functional>
#include <variant>

namespace xducer {

std::vector<std::string> marked(const Expr& alpha)
{
    std::vector<std::string> r;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        if (!alpha[i].is_reg()) continue;
        std::string s;
        for (std::size_t j = 0; j < alpha.size(); ++j) {
            s += alpha[j].name;
            if (j == i) s += "̄";
        }
        r.push_back(s);
    }
    return r;
}

std::vector<MarkedColor> marked_colors(const SST& m)
{
    std::vector<MarkedColor> r;
    for (const auto& [k, e] : m.delta)
        for (const auto& [x, alpha] : e.update) {
            auto names = marked(alpha);
            std::size_t n = 0;
            for (std::size_t i = 0; i < alpha.size(); ++i) {
                if (!alpha[i].is_reg()) continue;
                r.push_back({k.first, k.second, x, i, alpha, k.first + "|" + k.second + "|" + x + "|" + names[n++]});
            }
        }
    return r;
}

namespace {

// Total deterministic automaton with predecessor lookup.
struct Dfa {
    std::vector<std::string> states;
    std::string q0;
    std::map<std::pair<std::string, Sym>, std::string> d;
    std::map<std::pair<std::string, Sym>, std::vector<std::string>> inv;

    explicit Dfa(const DFA& a) : states(a.states), q0(a.initial), d(a.delta)
    {
        for (const auto& q : states)
            for (const auto& s : a.input) {
                auto it = d.find({q, s});
                if (it == d.end()) throw ModelError("automaton is not total");
                inv[{it->second, s}].push_back(q);
            }
    }
    const std::string& step(const std::string& q, const Sym& a) const { return d.at({q, a}); }
    std::vector<std::string> pre(const std::string& q, const Sym& a) const
    {
        auto it = inv.find({q, a});
        return it == inv.end() ? std::vector<std::string>{} : it->second;
    }
};

DFA control_of(const SST& m, std::string& sink)
{
    DFA d;
    d.input = m.input;
    d.states = m.states;
    d.initial = m.initial;
    sink = fresh_name("sink", std::set<std::string>(m.states.begin(), m.states.end()));
    d.states.push_back(sink);
    for (const auto& q : d.states)
        for (const auto& a : m.input) {
            auto it = m.delta.find({q, a});
            d.delta[{q, a}] = it == m.delta.end() ? sink : it->second.target;
        }
    return d;
}

// Candidate predecessor -> nonempty set of states that lead to it; sorted by candidate.
using Sets = std::vector<std::pair<std::string, std::vector<std::string>>>;

struct GState {
    int phase = 0;  // 0: at m holding K(m); 1: walking left with sets; 2: walking right with two images
    std::string k;
    Sets sets;
    std::string ps, u, v;
    auto operator<=>(const GState&) const = default;
};

std::string gname(const GState& g)
{
    switch (g.phase) {
    case 0: return "G0[" + g.k + "]";
    case 1: {
        std::string s = "GL[";
        for (const auto& [p, rs] : g.sets) {
            s += p + ":";
            for (const auto& r : rs) s += r + ",";
            s += ";";
        }
        return s + "]";
    }
    default: return "GR[" + g.ps + "," + g.u + "," + g.v + "]";
    }
}

struct GMove {
    Move move;
    std::variant<GState, std::string> next;  // string: exit with K(m-1)
};

std::optional<GMove> gadget_step(const Dfa& d, const GState& g, const Sym& s)
{
    auto pick = [&](const Sets& sets, const std::string& ps, const std::string& rstar) -> GState {
        GState r;
        r.phase = 2;
        r.ps = ps;
        r.u = rstar;
        for (const auto& [p, rs] : sets)
            if (p != ps) {
                r.v = rs.front();
                break;
            }
        return r;
    };
    switch (g.phase) {
    case 0: {
        if (s == LEFT_END || s == RIGHT_END) return std::nullopt;
        auto cand = d.pre(g.k, s);
        if (cand.empty()) return std::nullopt;
        if (cand.size() == 1) return GMove{Move::Left, cand.front()};
        GState n;
        n.phase = 1;
        for (const auto& p : cand) n.sets.push_back({p, {p}});
        return GMove{Move::Left, n};
    }
    case 1: {
        if (s == RIGHT_END) return std::nullopt;
        if (s == LEFT_END) {
            for (const auto& [p, rs] : g.sets)
                if (std::find(rs.begin(), rs.end(), d.q0) != rs.end()) return GMove{Move::Right, pick(g.sets, p, d.q0)};
            return std::nullopt;
        }
        Sets next;
        for (const auto& [p, rs] : g.sets) {
            std::set<std::string> pre;
            for (const auto& r : rs)
                for (const auto& x : d.pre(r, s)) pre.insert(x);
            if (!pre.empty()) next.push_back({p, {pre.begin(), pre.end()}});
        }
        if (next.empty()) return std::nullopt;
        if (next.size() >= 2) {
            GState n;
            n.phase = 1;
            n.sets = next;
            return GMove{Move::Left, n};
        }
        const auto& ps = next.front().first;
        for (const auto& [p, rs] : g.sets)
            if (p == ps) return GMove{Move::Right, pick(g.sets, ps, rs.front())};
        return std::nullopt;
    }
    default: {
        if (s == LEFT_END || s == RIGHT_END) return std::nullopt;
        const auto& u = d.step(g.u, s);
        const auto& v = d.step(g.v, s);
        if (u == v) return GMove{Move::Left, g.ps};
        GState n = g;
        n.u = u;
        n.v = v;
        return GMove{Move::Right, n};
    }
    }
}

struct Frame {
    enum class Kind { Scan, Fin, Acc, Enter, Pre, Body, Down, Ret, Gadget, Sweep, Replay };
    Kind kind = Kind::Scan;
    int fi = -1;      // index of the pending register in the final output expression
    std::string reg;  // register being computed
    std::string p;    // automaton state; meaning depends on kind
    std::size_t i = 0;
    GState g;
    auto operator<=>(const Frame&) const = default;
};

std::string fname(const Frame& f)
{
    using K = Frame::Kind;
    std::string tag = "#" + std::to_string(f.fi);
    switch (f.kind) {
    case K::Scan: return "scan[" + f.p + "]";
    case K::Fin: return "fin";
    case K::Acc: return "acc";
    case K::Enter: return "enter[" + f.reg + "," + f.p + "]" + tag;
    case K::Pre: return "pre[" + f.reg + "," + f.p + "]" + tag;
    case K::Body: return "body[" + f.reg + "," + f.p + "," + std::to_string(f.i) + "]" + tag;
    case K::Down: return "down[" + f.reg + "," + f.p + "]" + tag;
    case K::Ret: return "ret[" + f.reg + "," + f.p + "]" + tag;
    case K::Gadget: return gname(f.g) + "[" + f.reg + "]" + tag;
    case K::Sweep: return "sweep[" + f.reg + "]" + tag;
    case K::Replay: return "replay[" + f.reg + "," + f.p + "]" + tag;
    }
    return {};
}

// Recursive evaluation of register values by a marble transducer. A call to a register
// either drops a marble naming the suspended frame, or (same layer) relies on the callee
// being the unique occurrence of its register among its layer's expressions.
class Builder {
public:
    struct Options {
        bool exact = false;  // prefix state by the gadget instead of a bullet
        std::function<std::optional<std::string>(const std::string& q, const Sym& a, const std::string& y,
                                                 std::size_t i)>
            call_color;  // nullopt: call without a marble
        std::map<std::string, int> layer;
    };

    Builder(const SST& m, Options o) : m_(m), o_(std::move(o)), dfa_(control_of(m, sink_))
    {
        for (const auto& [k, e] : m.delta)
            for (const auto& [y, alpha] : e.update)
                for (std::size_t i = 0; i < alpha.size(); ++i)
                    if (alpha[i].is_reg())
                        if (auto c = o_.call_color(k.first, k.second, y, i)) {
                            colors_[*c].push_back({k.first, k.second, y, i});
                            color_list_.push_back(*c);
                        }
        if (!o_.exact) color_list_.push_back(BULLET);
    }

    MarbleTransducer build()
    {
        MarbleTransducer t;
        t.input = m_.input;
        t.output = m_.output;
        std::set<std::string> seen_colors;
        for (const auto& c : color_list_)
            if (seen_colors.insert(c).second) t.colors.push_back(c);
        Frame init;
        init.kind = Frame::Kind::Scan;
        init.p = m_.initial;
        t.initial = name_of(init);
        std::vector<Sym> syms{LEFT_END};
        syms.insert(syms.end(), m_.input.begin(), m_.input.end());
        syms.push_back(RIGHT_END);
        std::vector<std::optional<std::string>> modes{std::nullopt};
        for (const auto& c : t.colors) modes.push_back(c);
        while (!queue_.empty()) {
            Frame f = queue_.front();
            queue_.pop_front();
            const std::string from = names_.at(f);
            if (f.kind == Frame::Kind::Acc) t.finals.insert(from);
            for (const auto& s : syms)
                for (const auto& c : modes)
                    if (auto e = step(f, s, c)) t.delta[{from, s, c}] = *e;
        }
        t.states = order_;
        return t;
    }

private:
    using K = Frame::Kind;

    std::string name_of(const Frame& f)
    {
        auto it = names_.find(f);
        if (it != names_.end()) return it->second;
        auto n = fname(f);
        names_[f] = n;
        order_.push_back(n);
        queue_.push_back(f);
        return n;
    }

    MarbleEdge edge(const Frame& to, MarbleAction a, Word out = {}) { return {name_of(to), std::move(a), std::move(out)}; }

    static MarbleAction mv(Move m) { return m == Move::Left ? MarbleAction::left() : MarbleAction::right(); }

    const Expr* update(const std::string& p, const Sym& a, const std::string& y) const
    {
        auto it = m_.delta.find({p, a});
        if (it == m_.delta.end()) return nullptr;
        return &it->second.update.at(y);
    }

    // Continue the final output expression F(k) from index j, at the right endmarker.
    std::optional<MarbleEdge> final_from(const std::string& k, std::size_t j)
    {
        auto it = m_.out.find(k);
        if (it == m_.out.end() || j > it->second.size()) return std::nullopt;
        const Expr& beta = it->second;
        Word out;
        for (; j < beta.size() && !beta[j].is_reg(); ++j) out.push_back(beta[j].name);
        Frame n;
        if (j == beta.size()) {
            n.kind = K::Fin;
            return edge(n, MarbleAction::left(), out);
        }
        n.kind = K::Enter;
        n.reg = beta[j].name;
        n.fi = static_cast<int>(j);
        n.p = o_.exact ? k : "";
        return edge(n, MarbleAction::left(), out);
    }

    // Continue alpha = lambda(p, a)(y) from index j at its own position (no marble there).
    std::optional<MarbleEdge> body_from(const Frame& f, const std::string& y, const std::string& p, const Sym& a,
                                        std::size_t j)
    {
        const Expr* alpha = update(p, a, y);
        if (!alpha || j > alpha->size()) return std::nullopt;
        Word out;
        for (; j < alpha->size() && !(*alpha)[j].is_reg(); ++j) out.push_back((*alpha)[j].name);
        Frame n;
        n.fi = f.fi;
        if (j == alpha->size()) {
            n.kind = K::Ret;
            n.reg = y;
            n.p = dfa_.step(p, a);
            return edge(n, MarbleAction::right(), out);
        }
        const auto& z = (*alpha)[j].name;
        n.reg = z;
        if (auto c = o_.call_color(p, a, y, j)) {
            n.kind = K::Down;
            n.p = p;
            return edge(n, MarbleAction::drop(*c), out);
        }
        n.kind = K::Enter;
        n.p = o_.exact ? p : "";
        return edge(n, MarbleAction::left(), out);
    }

    std::optional<MarbleEdge> step(const Frame& f, const Sym& s, const std::optional<std::string>& c)
    {
        const bool letter = s != LEFT_END && s != RIGHT_END;
        switch (f.kind) {
        case K::Scan: {
            if (c) return std::nullopt;
            if (s == RIGHT_END) return final_from(f.p, 0);
            Frame n = f;
            if (letter) {
                if (f.p == sink_) return std::nullopt;
                n.p = dfa_.step(f.p, s);
            }
            return edge(n, MarbleAction::right());
        }
        case K::Fin: {
            if (c || s == RIGHT_END) return std::nullopt;
            Frame n;
            n.kind = K::Acc;
            return edge(n, MarbleAction::right());
        }
        case K::Acc: return std::nullopt;
        case K::Enter: {
            if (c) return std::nullopt;
            if (s == RIGHT_END) return std::nullopt;
            Frame n;
            n.fi = f.fi;
            n.reg = f.reg;
            if (s == LEFT_END) {
                n.kind = K::Ret;
                n.p = m_.initial;
                return edge(n, MarbleAction::right(), m_.init.at(f.reg));
            }
            if (o_.exact) {
                GState g;
                g.k = f.p;
                return gadget(f, g, s);
            }
            n.kind = K::Sweep;
            return edge(n, MarbleAction::drop(BULLET));
        }
        case K::Gadget: {
            if (s == RIGHT_END) return std::nullopt;
            // The gadget never passes the position it was entered at, which carries no marble.
            if (c) return std::nullopt;
            return gadget(f, f.g, s);
        }
        case K::Pre: {
            if (c || s == RIGHT_END) return std::nullopt;
            Frame n = f;
            n.kind = K::Body;
            n.i = 0;
            return edge(n, MarbleAction::right());
        }
        case K::Sweep: {
            if (c && *c != BULLET) return std::nullopt;
            if (s == RIGHT_END) return std::nullopt;
            if (s == LEFT_END) {
                if (c) return std::nullopt;
                Frame n = f;
                n.kind = K::Replay;
                n.p = m_.initial;
                return edge(n, MarbleAction::right());
            }
            return edge(f, MarbleAction::left());
        }
        case K::Replay: {
            if (!letter) return std::nullopt;
            if (c == BULLET) {
                Frame n = f;
                n.kind = K::Body;
                n.i = 0;
                return edge(n, MarbleAction::lift());
            }
            if (c) return std::nullopt;
            Frame n = f;
            n.p = dfa_.step(f.p, s);
            return edge(n, MarbleAction::right());
        }
        case K::Body: {
            if (c || !letter) return std::nullopt;
            return body_from(f, f.reg, f.p, s, f.i);
        }
        case K::Down: {
            if (!c) return std::nullopt;
            Frame n = f;
            n.kind = K::Enter;
            if (!o_.exact) n.p = "";
            return edge(n, MarbleAction::left());
        }
        case K::Ret: {
            if (s == LEFT_END) return std::nullopt;
            if (s == RIGHT_END) {
                if (c) return std::nullopt;
                return final_from(f.p, static_cast<std::size_t>(f.fi) + 1);
            }
            if (c) {
                auto it = colors_.find(*c);
                if (it == colors_.end()) return std::nullopt;
                for (const auto& [q, a, y, i] : it->second) {
                    if (q != f.p || a != s) continue;
                    const Expr* alpha = update(q, a, y);
                    if (!alpha || (*alpha)[i] != Token::reg(f.reg)) continue;
                    Frame n;
                    n.kind = K::Body;
                    n.fi = f.fi;
                    n.reg = y;
                    n.p = q;
                    n.i = i + 1;
                    return edge(n, MarbleAction::lift());
                }
                return std::nullopt;
            }
            // Same-layer return: the unique occurrence of the register among its layer.
            auto e = m_.delta.find({f.p, s});
            if (e == m_.delta.end()) return std::nullopt;
            auto lz = o_.layer.find(f.reg);
            if (lz == o_.layer.end()) return std::nullopt;
            std::optional<std::pair<std::string, std::size_t>> hit;
            for (const auto& [y, alpha] : e->second.update) {
                if (o_.layer.at(y) != lz->second) continue;
                for (std::size_t i = 0; i < alpha.size(); ++i)
                    if (alpha[i] == Token::reg(f.reg)) {
                        if (hit) throw ModelError("register " + f.reg + " occurs twice in its layer");
                        hit = {y, i};
                    }
            }
            if (!hit) return std::nullopt;
            return body_from(f, hit->first, f.p, s, hit->second + 1);
        }
        }
        return std::nullopt;
    }

    std::optional<MarbleEdge> gadget(const Frame& f, const GState& g, const Sym& s)
    {
        auto r = gadget_step(dfa_, g, s);
        if (!r) return std::nullopt;
        Frame n;
        n.fi = f.fi;
        n.reg = f.reg;
        if (auto* p = std::get_if<std::string>(&r->next)) {
            n.kind = K::Pre;
            n.p = *p;
        } else {
            n.kind = K::Gadget;
            n.g = std::get<GState>(r->next);
        }
        return edge(n, mv(r->move));
    }

    const SST& m_;
    Options o_;
    std::string sink_;
    Dfa dfa_;
    std::map<std::string, std::vector<std::tuple<std::string, Sym, std::string, std::size_t>>> colors_;
    std::vector<std::string> color_list_;
    std::map<Frame, std::string> names_;
    std::vector<std::string> order_;
    std::deque<Frame> queue_;
};

}  // namespace

MarbleTransducer sst_to_marble(const SST& m)
{
    auto problems = validate(m);
    if (!problems.empty()) throw ModelError("invalid SST: " + problems.front());
    if (!m.functions.empty()) throw ModelError("sst_to_marble expects a plain SST");
    std::map<std::tuple<std::string, Sym, std::string, std::size_t>, std::string> names;
    for (const auto& c : marked_colors(m)) names[{c.q, c.a, c.x, c.i}] = c.name;
    Builder::Options o;
    o.call_color = [names](const std::string& q, const Sym& a, const std::string& y, std::size_t i) {
        return std::optional<std::string>(names.at({q, a, y, i}));
    };
    return Builder(m, o).build();
}

MarbleTransducer layered_to_marble(const SST& m, const LayerPartition& p, LayerStrategy s)
{
    for (const auto& v : check_layered(m, p)) throw ModelError("invalid layering: " + v);
    if (!m.functions.empty()) throw ModelError("layered_to_marble expects a plain SST");
    Builder::Options o;
    o.exact = s == LayerStrategy::Exact;
    for (std::size_t l = 0; l < p.size(); ++l)
        for (const auto& x : p[l]) o.layer[x] = static_cast<int>(l);
    auto layer = o.layer;
    auto upd = m.delta;
    o.call_color = [layer, upd](const std::string& q, const Sym& a, const std::string& y,
                                std::size_t i) -> std::optional<std::string> {
        const auto& z = upd.at({q, a}).update.at(y)[i].name;
        if (layer.at(z) == layer.at(y)) return std::nullopt;
        return y + "@" + std::to_string(i);
    };
    auto t = Builder(m, o).build();
    t.declared_bound = static_cast<int>(p.empty() ? 0 : p.size() - 1) + (o.exact ? 0 : 1);
    return t;
}

PrefixStateGadget prefix_state_gadget(const DFA& a)
{
    Dfa d(a);
    PrefixStateGadget g;
    g.fragment.input = a.input;
    std::map<GState, std::string> names;
    std::deque<GState> queue;
    std::set<std::string> states;
    auto name_of = [&](const GState& s) {
        auto it = names.find(s);
        if (it != names.end()) return it->second;
        auto n = gname(s);
        names[s] = n;
        states.insert(n);
        queue.push_back(s);
        return n;
    };
    for (const auto& q : a.states) {
        GState s;
        s.k = q;
        g.entry[q] = name_of(s);
        g.exit[q] = "exit[" + q + "]";
        states.insert(g.exit[q]);
    }
    std::vector<Sym> syms{LEFT_END};
    syms.insert(syms.end(), a.input.begin(), a.input.end());
    // The walk ends at m-1; one more step brings the head back to m.
    std::map<std::string, std::string> back;
    for (const auto& q : a.states) {
        back[q] = "back[" + q + "]";
        states.insert(back[q]);
        for (const auto& sym : syms) g.fragment.delta[{back[q], sym}] = {g.exit[q], Move::Right, {}};
    }
    while (!queue.empty()) {
        GState s = queue.front();
        queue.pop_front();
        auto from = names.at(s);
        for (const auto& sym : syms) {
            auto r = gadget_step(d, s, sym);
            if (!r) continue;
            std::string to = std::holds_alternative<std::string>(r->next) ? back.at(std::get<std::string>(r->next))
                                                                          : name_of(std::get<GState>(r->next));
            g.fragment.delta[{from, sym}] = {to, r->move, {}};
        }
    }
    g.fragment.states.assign(states.begin(), states.end());
    return g;
}

}  // namespace xducer
