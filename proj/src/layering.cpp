#include "xducer/layering.hpp"

#include <deque>

namespace xducer {

Totalized make_total(const SST& m)
{
    Totalized t{m, {}};
    SST& s = t.machine;
    DFA& d = t.domain;
    bool partial = false;
    for (const auto& q : m.states)
        for (const auto& a : m.input)
            if (!m.delta.count({q, a})) partial = true;
    std::string sink;
    if (partial) {
        sink = fresh_name("sink", std::set<std::string>(m.states.begin(), m.states.end()));
        s.states.push_back(sink);
        Substitution reset;
        for (const auto& x : m.registers) reset[x] = {};
        for (const auto& q : s.states)
            for (const auto& a : m.input)
                if (!s.delta.count({q, a})) s.delta[{q, a}] = {sink, reset};
    }
    for (const auto& q : s.states)
        if (!s.out.count(q)) s.out[q] = {};
    d.input = m.input;
    d.states = s.states;
    d.initial = m.initial;
    for (const auto& [k, e] : s.delta) d.delta[k] = e.target;
    for (const auto& [q, e] : m.out) d.finals.insert(q);
    return t;
}

SST to_simple(const SST& m)
{
    for (const auto& q : m.states)
        for (const auto& a : m.input)
            if (!m.delta.count({q, a})) throw ModelError("machine not total");
    if (!m.functions.empty()) throw ModelError("to_simple expects a plain SST");

    std::set<std::string> used;
    std::set<Sym> letters;
    auto note_letters = [&](const Expr& e) {
        for (const auto& t : e)
            if (t.is_letter()) letters.insert(t.name);
    };
    for (const auto& [k, e] : m.delta)
        for (const auto& [x, rhs] : e.update) note_letters(rhs);
    for (const auto& [q, e] : m.out) note_letters(e);

    // Register x and constant b both get one copy per state; only the current state's copies are nonempty.
    std::map<std::pair<std::string, std::string>, std::string> copy, konst;
    SST s;
    s.input = m.input;
    s.output = m.output;
    s.states = {"s"};
    s.initial = "s";
    for (const auto& q : m.states) {
        for (const auto& x : m.registers) {
            auto n = fresh_name(q + "." + x, used);
            used.insert(n);
            copy[{q, x}] = n;
            s.registers.push_back(n);
            s.init[n] = q == m.initial ? m.init.at(x) : Word{};
        }
        for (const auto& b : letters) {
            auto n = fresh_name(q + ".$" + b, used);
            used.insert(n);
            konst[{q, b}] = n;
            s.registers.push_back(n);
            s.init[n] = q == m.initial ? Word{b} : Word{};
        }
    }
    // mu_p: registers and letters to their p-copies.
    auto relabel = [&](const std::string& p, const Expr& e) {
        Expr r;
        for (const auto& t : e) r.push_back(Token::reg(t.is_reg() ? copy.at({p, t.name}) : konst.at({p, t.name})));
        return r;
    };
    for (const auto& a : m.input) {
        Substitution u;
        for (const auto& r : s.registers) u[r] = {};
        for (const auto& p : m.states) {
            const auto& e = m.delta.at({p, a});
            for (const auto& x : m.registers) {
                auto part = relabel(p, e.update.at(x));
                auto& dst = u[copy.at({e.target, x})];
                dst.insert(dst.end(), part.begin(), part.end());
            }
            for (const auto& b : letters) u[konst.at({e.target, b})].push_back(Token::reg(konst.at({p, b})));
        }
        s.delta[{"s", a}] = {"s", std::move(u)};
    }
    Expr f;
    for (const auto& q : m.states) {
        auto it = m.out.find(q);
        if (it == m.out.end()) continue;
        auto part = relabel(q, it->second);
        f.insert(f.end(), part.begin(), part.end());
    }
    s.out["s"] = f;
    return s;
}

BoundedLayerResult remove_bounded_layer(const SST& m, const std::vector<std::vector<std::string>>& partition,
                                        std::size_t cap)
{
    if (m.states.size() != 1) throw ModelError("machine not simple");
    const std::string& q0 = m.states.front();
    std::vector<std::string> s0 = partition.empty() ? std::vector<std::string>{} : partition.front();
    std::set<std::string> s0set(s0.begin(), s0.end()), kept;
    BoundedLayerResult r;
    for (std::size_t i = 1; i < partition.size(); ++i) {
        r.layers.push_back(partition[i]);
        kept.insert(partition[i].begin(), partition[i].end());
    }
    std::map<std::string, std::size_t> s0idx;
    for (std::size_t i = 0; i < s0.size(); ++i) s0idx[s0[i]] = i;

    using Val = std::vector<Word>;
    // Replace S_0 registers by their values and dropped registers by the empty word.
    auto instantiate = [&](const Expr& e, const Val& v) {
        Expr out;
        for (const auto& t : e) {
            if (!t.is_reg() || kept.count(t.name)) {
                out.push_back(t);
            } else if (auto it = s0idx.find(t.name); it != s0idx.end()) {
                for (const auto& b : v[it->second]) out.push_back(Token::letter(b));
            }
        }
        return out;
    };
    auto word_of_expr = [&](const Expr& e) {
        Word w;
        for (const auto& t : e) {
            if (t.is_reg()) throw ModelError("S0 register depends on a higher register " + t.name);
            w.push_back(t.name);
        }
        return w;
    };

    SST& s = r.machine;
    s.input = m.input;
    s.output = m.output;
    for (const auto& layer : r.layers) s.registers.insert(s.registers.end(), layer.begin(), layer.end());
    for (const auto& x : s.registers) s.init[x] = m.init.at(x);

    Val init;
    for (const auto& x : s0) init.push_back(m.init.at(x));
    std::map<Val, std::string> names;
    std::deque<Val> queue;
    auto name_of = [&](const Val& v) {
        auto it = names.find(v);
        if (it != names.end()) return it->second;
        if (names.size() >= cap) throw ModelError("S0 valuation closure exceeds the state cap");
        std::string n = "v" + std::to_string(names.size());
        names[v] = n;
        s.states.push_back(n);
        queue.push_back(v);
        return n;
    };
    s.initial = name_of(init);
    const Expr& F = m.out.count(q0) ? m.out.at(q0) : Expr{};
    while (!queue.empty()) {
        Val v = queue.front();
        queue.pop_front();
        std::string from = names.at(v);
        s.out[from] = instantiate(F, v);
        for (const auto& a : m.input) {
            const auto& upd = m.delta.at({q0, a}).update;
            Val nv;
            for (const auto& x : s0) nv.push_back(word_of_expr(instantiate(upd.at(x), v)));
            Substitution u;
            for (const auto& y : s.registers) u[y] = instantiate(upd.at(y), v);
            std::string to = name_of(nv);
            s.delta[{from, a}] = {to, std::move(u)};
        }
    }
    if (!s.registers.empty()) {
        auto b = measure_bound(s, r.layers, 64);
        if (!b) throw ModelError("remaining layers are not bounded-copy (wrong partition)");
        r.bound = *b;
        s.layers = r.layers;
    } else {
        s.layers = LayerPartition{};
    }
    return r;
}

namespace {

SST rename_registers(const SST& m, const std::map<std::string, std::string>& ren)
{
    auto re = [&](const Expr& e) {
        Expr out;
        for (const auto& t : e) out.push_back(t.is_reg() ? Token::reg(ren.at(t.name)) : t);
        return out;
    };
    SST r = m;
    r.registers.clear();
    r.init.clear();
    for (const auto& x : m.registers) {
        r.registers.push_back(ren.at(x));
        r.init[ren.at(x)] = m.init.at(x);
    }
    for (auto& [k, e] : r.delta) {
        Substitution u;
        for (const auto& [x, rhs] : e.update) u[ren.at(x)] = re(rhs);
        e.update = u;
    }
    for (auto& [q, e] : r.out) e = re(e);
    if (m.layers) {
        LayerPartition l;
        for (const auto& layer : *m.layers) {
            l.emplace_back();
            for (const auto& x : layer) l.back().push_back(ren.at(x));
        }
        r.layers = l;
    }
    return r;
}

// Synchronous product of layered SSTs over one alphabet. Registers are already disjoint;
// layers are merged index by index. The output is left empty.
SST layered_product(const std::vector<SST>& comps)
{
    SST r;
    r.input = comps.front().input;
    r.output = comps.front().output;
    LayerPartition layers;
    for (const auto& c : comps) {
        const auto& cl = *c.layers;
        if (layers.size() < cl.size()) layers.resize(cl.size());
        for (std::size_t i = 0; i < cl.size(); ++i) layers[i].insert(layers[i].end(), cl[i].begin(), cl[i].end());
        for (const auto& x : c.registers) {
            r.registers.push_back(x);
            r.init[x] = c.init.at(x);
        }
    }
    r.layers = layers;
    using Tuple = std::vector<std::string>;
    std::map<Tuple, std::string> names;
    std::vector<Tuple> tuples;
    std::deque<Tuple> queue;
    auto name_of = [&](const Tuple& t) {
        auto it = names.find(t);
        if (it != names.end()) return it->second;
        std::string n = "<";
        for (std::size_t i = 0; i < t.size(); ++i) n += (i ? "|" : "") + t[i];
        n += ">";
        names[t] = n;
        r.states.push_back(n);
        queue.push_back(t);
        return n;
    };
    Tuple init;
    for (const auto& c : comps) init.push_back(c.initial);
    r.initial = name_of(init);
    while (!queue.empty()) {
        Tuple t = queue.front();
        queue.pop_front();
        std::string from = names.at(t);
        r.out[from] = {};
        for (const auto& a : r.input) {
            Tuple nt;
            Substitution u;
            bool ok = true;
            for (std::size_t i = 0; i < comps.size() && ok; ++i) {
                auto it = comps[i].delta.find({t[i], a});
                if (it == comps[i].delta.end()) {
                    ok = false;
                    break;
                }
                nt.push_back(it->second.target);
                u.insert(it->second.update.begin(), it->second.update.end());
            }
            if (ok) r.delta[{from, a}] = {name_of(nt), u};
        }
    }
    return r;
}

// Component i of a product state name built by layered_product.
std::map<std::string, std::vector<std::string>> product_components(const SST& prod, const std::vector<SST>& comps)
{
    // Recomputed by walking the product in lockstep with its components.
    std::map<std::string, std::vector<std::string>> r;
    std::vector<std::string> init;
    for (const auto& c : comps) init.push_back(c.initial);
    r[prod.initial] = init;
    std::deque<std::string> queue{prod.initial};
    while (!queue.empty()) {
        auto s = queue.front();
        queue.pop_front();
        for (const auto& a : prod.input) {
            auto it = prod.delta.find({s, a});
            if (it == prod.delta.end() || r.count(it->second.target)) continue;
            std::vector<std::string> nt;
            for (std::size_t i = 0; i < comps.size(); ++i) nt.push_back(comps[i].delta.at({r[s][i], a}).target);
            r[it->second.target] = nt;
            queue.push_back(it->second.target);
        }
    }
    return r;
}

}  // namespace

SST bounded_to_layered(const SST& m, const LayerPartition& layers, int B)
{
    if (B <= 1 || check_layered(m, layers).empty()) {
        SST r = m;
        r.layers = layers;
        return r;
    }
    auto ext = extract_sstf(m, layers);
    SST top = ext.top;
    if (!check_copyless(top).empty()) top = determinize_nsstf(bounded_sstf_to_unambiguous(top, B));
    if (ext.lower_layers.empty()) {
        top.layers = LayerPartition{top.registers};
        return top;
    }

    SST lower;
    std::map<std::string, FunBinding> bind;
    if (check_layered(ext.lower, ext.lower_layers).empty()) {
        lower = ext.lower;
        for (const auto& [f, src] : ext.sources)
            bind[f] = register_binding(lower, src.first, src.second ? Timing::Post : Timing::Pre);
    } else {
        // One layered component per lower register read by the top layer.
        std::vector<std::string> xs;
        for (const auto& [f, src] : ext.sources)
            if (std::find(xs.begin(), xs.end(), src.first) == xs.end()) xs.push_back(src.first);
        std::vector<SST> comps;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            SST mx = ext.lower;
            for (const auto& q : mx.states) mx.out[q] = {Token::reg(xs[i])};
            SST lx = bounded_to_layered(mx, ext.lower_layers, B);
            std::map<std::string, std::string> ren;
            for (const auto& x : lx.registers) ren[x] = "c" + std::to_string(i) + ":" + x;
            comps.push_back(rename_registers(lx, ren));
        }
        lower = layered_product(comps);
        auto proj = product_components(lower, comps);
        for (const auto& [f, src] : ext.sources) {
            std::size_t i = std::find(xs.begin(), xs.end(), src.first) - xs.begin();
            FunBinding b;
            b.timing = src.second ? Timing::Post : Timing::Pre;
            for (const auto& q : lower.states) b.value[q] = comps[i].out.at(proj.at(q)[i]);
            bind[f] = b;
        }
        ext.lower_layers = *lower.layers;
    }
    std::set<std::string> low(lower.registers.begin(), lower.registers.end()), used = low;
    std::map<std::string, std::string> ren;
    for (const auto& y : top.registers) {
        auto n = low.count(y) ? fresh_name("t:" + y, used) : y;
        used.insert(n);
        ren[y] = n;
    }
    top = rename_registers(top, ren);
    return splice_layers(top, lower, ext.lower_layers, bind);
}

namespace {

// Restricts the output of m to inputs accepted by d.
SST restrict_domain(const SST& m, const DFA& d)
{
    SST r = m;
    r.states.clear();
    r.delta.clear();
    r.out.clear();
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
    r.initial = name_of({m.initial, d.initial});
    while (!queue.empty()) {
        auto [q, p] = queue.front();
        queue.pop_front();
        auto from = names.at({q, p});
        if (d.finals.count(p) && m.out.count(q)) r.out[from] = m.out.at(q);
        for (const auto& a : m.input) {
            auto e = m.delta.find({q, a});
            auto f = d.delta.find({p, a});
            if (e == m.delta.end() || f == d.delta.end()) continue;
            r.delta[{from, a}] = {name_of({e->second.target, f->second}), e->second.update};
        }
    }
    return r;
}

}  // namespace

LayeringResult to_k_layered(const SST& m, const StageHook& hook)
{
    auto emit = [&](const std::string& stage, const SST& s) {
        if (hook) hook(stage, Machine{s});
    };
    LayeringResult r;
    auto tot = make_total(m);
    emit("total", tot.machine);
    SST simple = to_simple(tot.machine);
    emit("simple", simple);
    r.report = classify(flow_automaton(simple));
    if (r.report.exponential()) {
        r.exponential = true;
        return r;
    }
    auto rb = remove_bounded_layer(simple, r.report.partition);
    emit("bounded-removed", rb.machine);
    SST layered = rb.layers.empty() ? rb.machine : bounded_to_layered(rb.machine, rb.layers, rb.bound);
    emit("layered", layered);
    r.machine = restrict_domain(layered, tot.domain);
    r.machine.layers = layered.layers ? *layered.layers : LayerPartition{};
    r.k = std::max(r.report.degree - 1, 0);
    emit("domain", r.machine);
    return r;
}

}  // namespace xducer
