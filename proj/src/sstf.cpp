#include <deque>
#include <functional>
#include <sstream>

#include "xducer/layering.hpp"

namespace xducer {

namespace {

bool is_total(const SST& m)
{
    for (const auto& q : m.states)
        for (const auto& a : m.input)
            if (!m.delta.count({q, a})) return false;
    return true;
}

SST delayed(const SST& lower, const std::string& x)
{
    SST d;
    d.input = lower.input;
    d.output = lower.output;
    d.registers = lower.registers;
    d.init = lower.init;
    std::set<std::string> used;
    auto start = fresh_name("start", used);
    used.insert(start);
    std::map<std::pair<std::string, Sym>, std::string> name;
    for (const auto& p : lower.states)
        for (const auto& a : lower.input) {
            auto n = fresh_name(p + "/" + a, used);
            used.insert(n);
            name[{p, a}] = n;
        }
    d.states.push_back(start);
    for (const auto& [k, n] : name) d.states.push_back(n);
    d.initial = start;
    auto id = identity_substitution(lower.registers);
    for (const auto& a : lower.input) d.delta[{start, a}] = {name.at({lower.initial, a}), id};
    // State (p, a): registers hold the value before the last letter a, read from state p.
    for (const auto& [k, n] : name) {
        auto it = lower.delta.find(k);
        if (it == lower.delta.end()) continue;
        for (const auto& b : lower.input)
            d.delta[{n, b}] = {name.at({it->second.target, b}), it->second.update};
    }
    for (const auto& q : d.states) d.out[q] = {Token::reg(x)};
    return d;
}

}  // namespace

SSTFExtraction extract_sstf(const SST& m, const LayerPartition& layers)
{
    auto problems = check_layered(m, layers);
    for (const auto& p : partition_problems(m.registers, layers)) throw ModelError("invalid layering: " + p);
    (void)problems;
    SSTFExtraction r;
    if (layers.size() <= 1) {
        r.top = m;
        r.top.layers.reset();
        return r;
    }
    const auto& topregs = layers.back();
    std::set<std::string> top(topregs.begin(), topregs.end());
    r.lower_layers.assign(layers.begin(), layers.end() - 1);

    SST& low = r.lower;
    low.input = m.input;
    low.output = m.output;
    low.states = m.states;
    low.initial = m.initial;
    for (const auto& l : r.lower_layers)
        for (const auto& x : l) {
            low.registers.push_back(x);
            low.init[x] = m.init.at(x);
        }
    for (const auto& [k, e] : m.delta) {
        Substitution s;
        for (const auto& x : low.registers) s[x] = e.update.at(x);
        low.delta[k] = {e.target, s};
    }
    for (const auto& q : m.states) low.out[q] = {};
    low.layers = r.lower_layers;

    std::set<std::string> used(m.registers.begin(), m.registers.end());
    std::map<std::string, std::string> fname, hat, gname;
    auto fun_for = [&](const std::string& x) {
        if (!fname.count(x)) {
            auto n = fresh_name("f[" + x + "]", used);
            used.insert(n);
            fname[x] = n;
        }
        return fname[x];
    };
    auto hat_for = [&](const std::string& x) {
        if (!hat.count(x)) {
            auto h = fresh_name("^" + x, used);
            used.insert(h);
            hat[x] = h;
            auto g = fresh_name("g[" + x + "]", used);
            used.insert(g);
            gname[x] = g;
        }
        return hat[x];
    };

    SST& t = r.top;
    t.input = m.input;
    t.output = m.output;
    t.states = m.states;
    t.initial = m.initial;
    t.registers = topregs;
    for (const auto& y : topregs) t.init[y] = m.init.at(y);
    for (const auto& [q, e] : m.out) {
        Expr f;
        for (const auto& tok : e)
            f.push_back(tok.is_reg() && !top.count(tok.name) ? Token::reg(hat_for(tok.name)) : tok);
        t.out[q] = f;
    }
    for (const auto& [k, e] : m.delta) {
        Substitution s;
        for (const auto& y : topregs) {
            Expr rhs;
            for (const auto& tok : e.update.at(y))
                rhs.push_back(tok.is_reg() && !top.count(tok.name) ? Token::fun(fun_for(tok.name)) : tok);
            s[y] = rhs;
        }
        t.delta[k] = {e.target, s};
    }
    for (const auto& [x, h] : hat) {
        t.registers.push_back(h);
        t.init[h] = m.init.at(x);
        for (auto& [k, e] : t.delta) e.update[h] = {Token::fun(gname.at(x))};
    }
    for (const auto& [x, f] : fname) {
        t.functions.push_back(f);
        r.registry[f] = delayed(low, x);
        r.sources[f] = {x, false};
    }
    for (const auto& [x, g] : gname) {
        t.functions.push_back(g);
        SST plain = low;
        plain.layers.reset();
        for (const auto& q : plain.states) plain.out[q] = {Token::reg(x)};
        r.registry[g] = plain;
        r.sources[g] = {x, true};
    }
    return r;
}

NSSTF bounded_sstf_to_unambiguous(const SST& m, int B)
{
    if (!is_total(m)) throw ModelError("bounded_sstf_to_unambiguous expects a total machine");
    for (const auto& q : m.states)
        if (!m.out.count(q)) throw ModelError("bounded_sstf_to_unambiguous expects a total output");
    const auto& X = m.registers;
    std::size_t n = X.size();
    std::map<std::string, std::size_t> xi;
    for (std::size_t i = 0; i < n; ++i) xi[X[i]] = i;
    using Profile = std::vector<int>;
    auto count = [&](const Expr& e) {
        Profile c(n, 0);
        for (const auto& t : e)
            if (t.is_reg()) ++c[xi.at(t.name)];
        return c;
    };
    // occ[(q,a)][y] = occurrences of each x in lambda(q,a)(y)
    std::map<std::pair<std::string, Sym>, std::vector<Profile>> occ;
    for (const auto& [k, e] : m.delta) {
        std::vector<Profile> v;
        for (const auto& y : X) v.push_back(count(e.update.at(y)));
        occ[k] = v;
    }
    int fmax = 1;
    for (const auto& [q, e] : m.out) {
        int c = 0;
        for (const auto& t : e) c += t.is_reg();
        fmax = std::max(fmax, c);
    }
    const int cap = std::max(B, 1) * fmax;
    auto pred = [&](const std::pair<std::string, Sym>& k, const Profile& gp) -> std::optional<Profile> {
        Profile g(n, 0);
        const auto& o = occ.at(k);
        for (std::size_t y = 0; y < n; ++y)
            if (gp[y])
                for (std::size_t x = 0; x < n; ++x) g[x] += o[y][x] * gp[y];
        for (int v : g)
            if (v > cap) return std::nullopt;
        return g;
    };

    // Co-reachable profiles by backward search from the final ones.
    std::map<std::string, std::vector<std::pair<std::string, Sym>>> into;
    for (const auto& [k, e] : m.delta) into[e.target].push_back(k);
    std::set<std::pair<std::string, Profile>> co;
    std::deque<std::pair<std::string, Profile>> queue;
    for (const auto& q : m.states) {
        auto p = std::make_pair(q, count(m.out.at(q)));
        bool ok = true;
        for (int v : p.second) ok = ok && v <= cap;
        if (ok && co.insert(p).second) queue.push_back(p);
    }
    while (!queue.empty()) {
        auto [q, g] = queue.front();
        queue.pop_front();
        for (const auto& k : into[q]) {
            auto pg = pred(k, g);
            if (!pg) continue;
            auto p = std::make_pair(k.first, *pg);
            if (co.insert(p).second) queue.push_back(p);
        }
    }
    std::map<std::string, std::vector<Profile>> co_by_state;
    for (const auto& [q, g] : co) co_by_state[q].push_back(g);

    // Forward reachability restricted to co-reachable profiles.
    std::set<std::pair<std::string, Profile>> reach;
    std::vector<std::tuple<std::pair<std::string, Profile>, Sym, std::pair<std::string, Profile>>> edges;
    for (const auto& g : co_by_state[m.initial]) {
        auto p = std::make_pair(m.initial, g);
        reach.insert(p);
        queue.push_back(p);
    }
    while (!queue.empty()) {
        auto cur = queue.front();
        queue.pop_front();
        for (const auto& a : m.input) {
            const auto& e = m.delta.at({cur.first, a});
            for (const auto& gp : co_by_state[e.target]) {
                auto pg = pred({cur.first, a}, gp);
                if (!pg || *pg != cur.second) continue;
                auto nxt = std::make_pair(e.target, gp);
                edges.push_back({cur, a, nxt});
                if (reach.insert(nxt).second) queue.push_back(nxt);
            }
        }
    }
    int copies = 1;
    for (const auto& [q, g] : reach)
        for (int v : g) copies = std::max(copies, v);

    NSSTF r;
    r.input = m.input;
    r.output = m.output;
    r.functions = m.functions;
    std::set<std::string> used;
    std::map<std::pair<std::size_t, int>, std::string> reg;
    for (std::size_t x = 0; x < n; ++x)
        for (int i = 1; i <= copies; ++i) {
            auto nm = fresh_name(X[x] + "#" + std::to_string(i), used);
            used.insert(nm);
            reg[{x, i}] = nm;
            r.registers.push_back(nm);
        }
    auto state_name = [&](const std::pair<std::string, Profile>& p) {
        std::string s = p.first + "|";
        for (std::size_t x = 0; x < n; ++x) s += (x ? "," : "") + std::to_string(p.second[x]);
        return s;
    };
    for (const auto& p : reach) r.states.push_back(state_name(p));
    for (const auto& p : reach) {
        if (p.first != m.initial) continue;
        Valuation v;
        for (std::size_t x = 0; x < n; ++x)
            for (int i = 1; i <= copies; ++i)
                v[reg.at({x, i})] = i <= p.second[x] ? m.init.at(X[x]) : Word{};
        r.init[state_name(p)] = v;
    }
    // Occurrences of x are replaced by copies 1, 2, ... in reading order.
    auto distribute = [&](const Expr& e, std::vector<int>& next) {
        Expr out;
        for (const auto& t : e) {
            if (!t.is_reg()) {
                out.push_back(t);
                continue;
            }
            std::size_t x = xi.at(t.name);
            out.push_back(Token::reg(reg.at({x, ++next[x]})));
        }
        return out;
    };
    for (const auto& [from, a, to] : edges) {
        const auto& upd = m.delta.at({from.first, a}).update;
        Substitution s;
        std::vector<int> next(n, 0);
        for (std::size_t y = 0; y < n; ++y)
            for (int j = 1; j <= copies; ++j)
                s[reg.at({y, j})] = j <= to.second[y] ? distribute(upd.at(X[y]), next) : Expr{};
        r.delta[{state_name(from), a, state_name(to)}] = s;
    }
    for (const auto& p : reach) {
        if (p.second != count(m.out.at(p.first))) continue;
        std::vector<int> next(n, 0);
        r.out[state_name(p)] = distribute(m.out.at(p.first), next);
    }
    return r;
}

SkeBegFol decompose(const Substitution& s)
{
    SkeBegFol d;
    std::set<std::string> seen;
    for (const auto& [x, e] : s) {
        d.ske[x] = {};
        d.beg[x] = {};
        if (!d.fol.count(x)) d.fol[x] = {};
    }
    for (const auto& [x, e] : s) {
        Expr* cur = &d.beg[x];
        for (const auto& t : e) {
            if (t.is_reg()) {
                if (!seen.insert(t.name).second) throw ModelError("substitution is not copyless");
                d.ske[x].push_back(t.name);
                cur = &d.fol[t.name];
                cur->clear();
            } else {
                cur->push_back(t);
            }
        }
    }
    return d;
}

Substitution reassemble(const SkeBegFol& d)
{
    Substitution s;
    for (const auto& [x, sk] : d.ske) {
        Expr e = d.beg.at(x);
        for (const auto& z : sk) {
            e.push_back(Token::reg(z));
            const auto& f = d.fol.at(z);
            e.insert(e.end(), f.begin(), f.end());
        }
        s[x] = e;
    }
    return s;
}

SkeBegFol compose_decomposed(const SkeBegFol& s1, const SkeBegFol& s2)
{
    SkeBegFol r;
    for (const auto& [x, sk] : s2.ske) {
        r.ske[x] = {};
        r.beg[x] = {};
        r.fol[x] = {};
    }
    for (const auto& [x, sk] : s2.ske) {
        Expr* pending = &r.beg[x];
        auto append = [&](const Expr& e) { pending->insert(pending->end(), e.begin(), e.end()); };
        append(s2.beg.at(x));
        for (const auto& z : sk) {
            append(s1.beg.at(z));
            for (const auto& w : s1.ske.at(z)) {
                r.ske[x].push_back(w);
                pending = &r.fol[w];
                append(s1.fol.at(w));
            }
            append(s2.fol.at(z));
        }
    }
    return r;
}

namespace {

// Item of a symbolic substitution: an NSST register, or a token of the deterministic machine
// (letter, Fun, or one of its own registers).
struct Item {
    bool nreg = false;
    Token tok;
    bool operator==(const Item&) const = default;
};
using SymExpr = std::vector<Item>;
using SymSubst = std::map<std::string, SymExpr>;

SymSubst sym_compose(const SymSubst& s, const SymSubst& t)
{
    SymSubst r;
    for (const auto& [x, e] : t) {
        SymExpr out;
        for (const auto& it : e) {
            if (!it.nreg) out.push_back(it);
            else {
                const auto& img = s.at(it.tok.name);
                out.insert(out.end(), img.begin(), img.end());
            }
        }
        r[x] = std::move(out);
    }
    return r;
}

SymExpr sym_apply(const SymSubst& s, const SymExpr& e)
{
    SymExpr out;
    for (const auto& it : e) {
        if (!it.nreg) out.push_back(it);
        else {
            const auto& img = s.at(it.tok.name);
            out.insert(out.end(), img.begin(), img.end());
        }
    }
    return out;
}

SymSubst lift(const Substitution& s)
{
    SymSubst r;
    for (const auto& [x, e] : s) {
        SymExpr v;
        for (const auto& t : e) v.push_back(t.is_reg() ? Item{true, t} : Item{false, t});
        r[x] = v;
    }
    return r;
}

struct Node {
    int parent = -1;
    std::vector<int> children;
    std::string state;  // leaves only
    SymSubst sub;
    bool dead = false;
};

struct Forest {
    std::vector<Node> nodes;
    std::vector<int> roots;
};

// Canonical deterministic state: per slot (pre-order) the leaf state, skeleton and child count.
struct SlotShape {
    std::string state;
    std::map<std::string, std::vector<std::string>> ske;
    int children = 0;
    auto operator<=>(const SlotShape&) const = default;
};
using Shape = std::vector<SlotShape>;

std::string dreg(int slot, const std::string& x, char kind)
{
    return "s" + std::to_string(slot) + "." + x + "." + kind;
}

}  // namespace

SST determinize_nsstf(const NSSTF& m, DeterminizeStats* stats, std::size_t state_cap)
{
    std::map<std::string, std::size_t> sidx;
    for (std::size_t i = 0; i < m.states.size(); ++i) sidx[m.states[i]] = i;
    std::map<std::pair<std::string, Sym>, std::vector<std::pair<std::string, SymSubst>>> succ;
    for (const auto& [k, s] : m.delta) {
        const auto& [p, a, q] = k;
        succ[{p, a}].push_back({q, lift(s)});
    }
    for (auto& [k, v] : succ)
        std::sort(v.begin(), v.end(), [&](const auto& l, const auto& r) { return sidx.at(l.first) < sidx.at(r.first); });

    // Rebuilds the symbolic forest of a canonical shape; slot subs refer to own registers.
    auto expand = [&](const Shape& sh) {
        Forest f;
        std::vector<int> stack;  // open internal nodes with remaining child counts
        std::vector<int> remaining;
        for (std::size_t i = 0; i < sh.size(); ++i) {
            Node n;
            n.state = sh[i].state;
            for (const auto& x : m.registers) {
                SymExpr e{Item{false, Token::reg(dreg(static_cast<int>(i), x, 'b'))}};
                for (const auto& z : sh[i].ske.at(x)) {
                    e.push_back(Item{true, Token::reg(z)});
                    e.push_back(Item{false, Token::reg(dreg(static_cast<int>(i), z, 'f'))});
                }
                n.sub[x] = e;
            }
            int id = static_cast<int>(f.nodes.size());
            if (!stack.empty()) {
                n.parent = stack.back();
                f.nodes[stack.back()].children.push_back(id);
                if (--remaining.back() == 0) {
                    stack.pop_back();
                    remaining.pop_back();
                }
            } else {
                f.roots.push_back(id);
            }
            f.nodes.push_back(n);
            if (sh[i].children > 0) {
                stack.push_back(id);
                remaining.push_back(sh[i].children);
            }
        }
        return f;
    };

    // Prunes dead leaves, contracts unary nodes, then canonicalizes.
    struct Canon {
        Shape shape;
        std::map<std::string, SymExpr> values;  // new register -> symbolic value
        std::vector<int> order;
    };
    auto min_leaf = [&](const Forest& f, int id, auto&& self) -> std::size_t {
        const Node& n = f.nodes[id];
        if (n.children.empty()) return sidx.at(n.state);
        std::size_t best = SIZE_MAX;
        for (int c : n.children) best = std::min(best, self(f, c, self));
        return best;
    };
    auto normalize = [&](Forest& f) -> std::optional<Canon> {
        // Remove dead leaves and childless internal nodes bottom-up.
        std::function<bool(int)> alive = [&](int id) -> bool {
            Node& n = f.nodes[id];
            if (n.children.empty()) return !n.dead;
            std::vector<int> keep;
            for (int c : n.children)
                if (alive(c)) keep.push_back(c);
            n.children = keep;
            return !keep.empty();
        };
        std::vector<int> roots;
        for (int r : f.roots)
            if (alive(r)) roots.push_back(r);
        f.roots = roots;
        if (f.roots.empty()) return std::nullopt;
        // Contract unary chains.
        std::function<void(int)> contract = [&](int id) {
            Node& n = f.nodes[id];
            while (n.children.size() == 1) {
                Node child = f.nodes[n.children.front()];
                n.sub = sym_compose(n.sub, child.sub);
                n.children = child.children;
                n.state = child.state;
                for (int c : n.children) f.nodes[c].parent = id;
            }
            for (int c : n.children) contract(c);
        };
        for (int r : f.roots) contract(r);
        // Leaves must carry distinct states.
        std::set<std::string> leaves;
        std::function<void(int)> collect = [&](int id) {
            const Node& n = f.nodes[id];
            if (n.children.empty()) {
                if (!leaves.insert(n.state).second)
                    throw ModelError("NSST-F is ambiguous: two runs reach state " + n.state);
            }
            for (int c : n.children) collect(c);
        };
        for (int r : f.roots) collect(r);
        auto by_min = [&](int l, int r) { return min_leaf(f, l, min_leaf) < min_leaf(f, r, min_leaf); };
        std::sort(f.roots.begin(), f.roots.end(), by_min);
        for (auto& n : f.nodes) std::sort(n.children.begin(), n.children.end(), by_min);
        Canon c;
        std::function<void(int)> visit = [&](int id) {
            const Node& n = f.nodes[id];
            int slot = static_cast<int>(c.shape.size());
            SlotShape ss;
            ss.children = static_cast<int>(n.children.size());
            if (n.children.empty()) ss.state = n.state;
            std::set<std::string> occurring;
            for (const auto& x : m.registers) {
                ss.ske[x] = {};
                SymExpr* cur = &c.values[dreg(slot, x, 'b')];
                for (const auto& it : n.sub.at(x)) {
                    if (it.nreg) {
                        if (!occurring.insert(it.tok.name).second)
                            throw ModelError("NSST-F update is not copyless");
                        ss.ske[x].push_back(it.tok.name);
                        cur = &c.values[dreg(slot, it.tok.name, 'f')];
                    } else {
                        cur->push_back(it);
                    }
                }
            }
            c.shape.push_back(ss);
            c.order.push_back(id);
            for (int ch : n.children) visit(ch);
        };
        for (int r : f.roots) visit(r);
        return c;
    };

    auto to_expr = [](const SymExpr& e) {
        Expr out;
        for (const auto& it : e) out.push_back(it.tok);
        return out;
    };

    SST r;
    r.input = m.input;
    r.output = m.output;
    r.functions = m.functions;
    std::map<Shape, std::string> names;
    std::vector<Shape> shapes;
    std::deque<std::size_t> queue;
    std::set<std::string> regs;
    auto name_of = [&](const Shape& sh) {
        auto it = names.find(sh);
        if (it != names.end()) return it->second;
        if (names.size() >= state_cap) throw ModelError("determinization exceeds the state cap");
        std::string n = "d" + std::to_string(names.size());
        names[sh] = n;
        shapes.push_back(sh);
        r.states.push_back(n);
        queue.push_back(shapes.size() - 1);
        if (stats) stats->max_slots = std::max(stats->max_slots, sh.size());
        return n;
    };

    Forest init;
    for (const auto& q : m.states) {
        auto it = m.init.find(q);
        if (it == m.init.end()) continue;
        Node n;
        n.state = q;
        for (const auto& x : m.registers) {
            SymExpr e;
            for (const auto& b : it->second.at(x)) e.push_back(Item{false, Token::letter(b)});
            n.sub[x] = e;
        }
        init.roots.push_back(static_cast<int>(init.nodes.size()));
        init.nodes.push_back(n);
    }
    auto c0 = normalize(init);
    if (!c0) {
        // Empty domain: a single state without output.
        r.states = {"d0"};
        r.initial = "d0";
        return r;
    }
    r.initial = name_of(c0->shape);
    for (const auto& [x, v] : c0->values) {
        regs.insert(x);
        r.init[x] = evaluate(to_expr(v), {});
    }

    std::map<std::pair<std::string, Sym>, Substitution> updates;
    while (!queue.empty()) {
        std::size_t si = queue.front();
        queue.pop_front();
        Shape sh = shapes[si];
        std::string from = names.at(sh);
        Forest base = expand(sh);
        // Output: compose from the unique final leaf up to its root.
        for (std::size_t i = 0; i < base.nodes.size(); ++i) {
            const Node& n = base.nodes[i];
            if (!n.children.empty()) continue;
            auto fo = m.out.find(n.state);
            if (fo == m.out.end()) continue;
            SymExpr e;
            for (const auto& t : fo->second) e.push_back(t.is_reg() ? Item{true, t} : Item{false, t});
            for (int id = static_cast<int>(i); id >= 0; id = base.nodes[id].parent)
                e = sym_apply(base.nodes[id].sub, e);
            r.out[from] = to_expr(e);
            break;
        }
        for (const auto& a : m.input) {
            Forest f = base;
            std::size_t original = f.nodes.size();
            for (std::size_t i = 0; i < original; ++i) {
                if (!f.nodes[i].children.empty()) continue;
                auto it = succ.find({f.nodes[i].state, a});
                if (it == succ.end() || it->second.empty()) {
                    f.nodes[i].dead = true;
                } else if (it->second.size() == 1) {
                    f.nodes[i].sub = sym_compose(f.nodes[i].sub, it->second.front().second);
                    f.nodes[i].state = it->second.front().first;
                } else {
                    f.nodes[i].state.clear();
                    for (const auto& [q, s] : it->second) {
                        Node child;
                        child.parent = static_cast<int>(i);
                        child.state = q;
                        child.sub = s;
                        f.nodes[i].children.push_back(static_cast<int>(f.nodes.size()));
                        f.nodes.push_back(child);
                    }
                }
            }
            auto c = normalize(f);
            if (!c) continue;
            std::string to = name_of(c->shape);
            Substitution u;
            for (const auto& [x, v] : c->values) {
                regs.insert(x);
                u[x] = to_expr(v);
            }
            updates[{from, a}] = u;
            r.delta[{from, a}] = {to, {}};
        }
    }
    r.registers.assign(regs.begin(), regs.end());
    for (const auto& x : r.registers)
        if (!r.init.count(x)) r.init[x] = {};
    for (auto& [k, e] : r.delta) {
        auto& u = updates.at(k);
        for (const auto& x : r.registers)
            if (!u.count(x)) u[x] = {};
        e.update = u;
    }
    if (stats) stats->states = r.states.size();
    return r;
}

FunBinding register_binding(const SST& lower, const std::string& reg, Timing t)
{
    FunBinding b;
    b.timing = t;
    for (const auto& q : lower.states) b.value[q] = {Token::reg(reg)};
    return b;
}

SST splice_layers(const SST& top, const SST& lower, const LayerPartition& lower_layers,
                  const std::map<std::string, FunBinding>& bind)
{
    for (const auto& f : top.functions)
        if (!bind.count(f)) throw ModelError("unbound function name " + f);
    std::set<std::string> lowregs(lower.registers.begin(), lower.registers.end());
    for (const auto& y : top.registers)
        if (lowregs.count(y)) throw ModelError("register " + y + " occurs in both layers");
    SST r;
    r.input = top.input;
    r.output = top.output;
    r.registers = lower.registers;
    r.registers.insert(r.registers.end(), top.registers.begin(), top.registers.end());
    for (const auto& x : lower.registers) r.init[x] = lower.init.at(x);
    for (const auto& y : top.registers) r.init[y] = top.init.at(y);
    LayerPartition layers = lower_layers;
    layers.push_back(top.registers);
    r.layers = layers;

    std::map<std::pair<std::string, std::string>, std::string> names;
    std::deque<std::pair<std::string, std::string>> queue;
    auto name_of = [&](const std::pair<std::string, std::string>& p) {
        auto it = names.find(p);
        if (it != names.end()) return it->second;
        std::string n = "<" + p.first + "|" + p.second + ">";
        names[p] = n;
        r.states.push_back(n);
        queue.push_back(p);
        return n;
    };
    r.initial = name_of({top.initial, lower.initial});
    while (!queue.empty()) {
        auto [qt, ql] = queue.front();
        queue.pop_front();
        std::string from = names.at({qt, ql});
        if (auto o = top.out.find(qt); o != top.out.end()) r.out[from] = o->second;
        for (const auto& a : top.input) {
            auto et = top.delta.find({qt, a});
            auto el = lower.delta.find({ql, a});
            if (et == top.delta.end() || el == lower.delta.end()) continue;
            Substitution u = el->second.update;
            for (const auto& [y, rhs] : et->second.update) {
                Expr e;
                for (const auto& t : rhs) {
                    if (!t.is_fun()) {
                        e.push_back(t);
                        continue;
                    }
                    const auto& b = bind.at(t.name);
                    Expr v = b.timing == Timing::Pre ? b.value.at(ql)
                                                     : apply(el->second.update, b.value.at(el->second.target));
                    e.insert(e.end(), v.begin(), v.end());
                }
                u[y] = e;
            }
            r.delta[{from, a}] = {name_of({et->second.target, el->second.target}), u};
        }
    }
    return r;
}

}  // namespace xducer
