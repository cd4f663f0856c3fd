#include "xducer/machines.hpp"

#include <deque>
#include <unordered_map>

namespace xducer {

namespace {

void check_alphabet(const Alphabet& a, const std::string& what, ValidationReport& r)
{
    if (a.empty()) r.push_back(what + " alphabet is empty");
    std::set<Sym> seen;
    for (const auto& s : a) {
        if (s.empty()) r.push_back(what + " alphabet contains an empty symbol");
        if (s == LEFT_END || s == RIGHT_END) r.push_back(what + " alphabet contains an endmarker");
        if (!seen.insert(s).second) r.push_back(what + " alphabet repeats symbol " + s);
    }
}

std::set<std::string> unique_set(const std::vector<std::string>& v, const std::string& what,
                                 ValidationReport& r)
{
    std::set<std::string> s;
    for (const auto& x : v)
        if (!s.insert(x).second) r.push_back("duplicate " + what + " " + x);
    return s;
}

void check_word(const Word& w, const std::set<Sym>& out, const std::string& where,
                ValidationReport& r)
{
    for (const auto& b : w)
        if (!out.count(b)) r.push_back("unknown output letter " + b + " in " + where);
}

void check_expr(const Expr& e, const std::set<Sym>& out, const std::set<std::string>& regs,
                const std::set<std::string>& funs, bool allow_fun, const std::string& where,
                ValidationReport& r)
{
    for (const auto& t : e) {
        switch (t.kind) {
        case Token::Kind::Letter:
            if (!out.count(t.name)) r.push_back("unknown output letter " + t.name + " in " + where);
            break;
        case Token::Kind::Reg:
            if (!regs.count(t.name)) r.push_back("unknown register " + t.name + " in " + where);
            break;
        case Token::Kind::Fun:
            if (!allow_fun) r.push_back("function token " + t.name + " in " + where);
            else if (!funs.count(t.name)) r.push_back("unknown function " + t.name + " in " + where);
            break;
        }
    }
}

void check_subst(const Substitution& s, const std::set<Sym>& out,
                 const std::set<std::string>& regs, const std::set<std::string>& funs,
                 const std::string& where, ValidationReport& r)
{
    for (const auto& x : regs)
        if (!s.count(x)) r.push_back("update " + where + " undefined on register " + x);
    for (const auto& [x, e] : s) {
        if (!regs.count(x)) r.push_back("update " + where + " assigns unknown register " + x);
        check_expr(e, out, regs, funs, true, where, r);
    }
}

std::set<Sym> with_endmarkers(const Alphabet& a)
{
    std::set<Sym> s(a.begin(), a.end());
    s.insert(LEFT_END);
    s.insert(RIGHT_END);
    return s;
}

}  // namespace

std::optional<std::string> DFA::run(const Word& w) const
{
    std::string q = initial;
    for (const auto& a : w) {
        auto it = delta.find({q, a});
        if (it == delta.end()) return std::nullopt;
        q = it->second;
    }
    return q;
}

bool DFA::accepts(const Word& w) const
{
    auto q = run(w);
    return q && finals.count(*q);
}

std::string kind_name(const Machine& m)
{
    struct V {
        std::string operator()(const TwoWayTransducer&) const { return "two-way"; }
        std::string operator()(const MarbleTransducer&) const { return "marble"; }
        std::string operator()(const SST& s) const { return s.functions.empty() ? "sst" : "sstf"; }
        std::string operator()(const NSSTF&) const { return "nsstf"; }
        std::string operator()(const NAutomaton&) const { return "nautomaton"; }
    };
    return std::visit(V{}, m);
}

ValidationReport validate(const TwoWayTransducer& t)
{
    ValidationReport r;
    check_alphabet(t.input, "input", r);
    check_alphabet(t.output, "output", r);
    auto states = unique_set(t.states, "state", r);
    std::set<Sym> out(t.output.begin(), t.output.end());
    auto syms = with_endmarkers(t.input);
    if (!states.count(t.initial)) r.push_back("initial state " + t.initial + " not declared");
    for (const auto& f : t.finals)
        if (!states.count(f)) r.push_back("final state " + f + " not declared");
    for (const auto& [k, e] : t.delta) {
        std::string where = "(" + k.first + "," + k.second + ")";
        if (!states.count(k.first)) r.push_back("unknown state " + k.first + " in transition " + where);
        if (!syms.count(k.second)) r.push_back("unknown symbol " + k.second + " in transition " + where);
        if (!states.count(e.target)) r.push_back("unknown target " + e.target + " in transition " + where);
        check_word(e.output, out, "transition " + where, r);
    }
    return r;
}

ValidationReport validate(const MarbleTransducer& t)
{
    ValidationReport r;
    check_alphabet(t.input, "input", r);
    check_alphabet(t.output, "output", r);
    auto states = unique_set(t.states, "state", r);
    auto colors = unique_set(t.colors, "color", r);
    std::set<Sym> out(t.output.begin(), t.output.end());
    auto syms = with_endmarkers(t.input);
    if (!states.count(t.initial)) r.push_back("initial state " + t.initial + " not declared");
    for (const auto& f : t.finals)
        if (!states.count(f)) r.push_back("final state " + f + " not declared");
    if (t.declared_bound && *t.declared_bound < 0) r.push_back("negative declared marble bound");
    for (const auto& [k, e] : t.delta) {
        const auto& [q, a, c] = k;
        std::string where = "(" + q + "," + a + "," + (c ? *c : "null") + ")";
        if (!states.count(q)) r.push_back("unknown state " + q + " in transition " + where);
        if (!syms.count(a)) r.push_back("unknown symbol " + a + " in transition " + where);
        if (c && !colors.count(*c)) r.push_back("unknown color " + *c + " in transition " + where);
        if (!states.count(e.target)) r.push_back("unknown target " + e.target + " in transition " + where);
        check_word(e.output, out, "transition " + where, r);
        using K = MarbleAction::Kind;
        if (e.action.kind == K::Drop && !colors.count(e.action.color))
            r.push_back("drop of unknown color " + e.action.color + " in transition " + where);
        if (c) {
            if (e.action.kind == K::Right) r.push_back("move right on marble in transition " + where);
            if (e.action.kind == K::Drop) r.push_back("drop on marble in transition " + where);
        } else if (e.action.kind == K::Lift) {
            r.push_back("lift without marble in transition " + where);
        }
    }
    return r;
}

ValidationReport validate(const SST& m)
{
    ValidationReport r;
    check_alphabet(m.input, "input", r);
    check_alphabet(m.output, "output", r);
    auto states = unique_set(m.states, "state", r);
    auto regs = unique_set(m.registers, "register", r);
    auto funs = unique_set(m.functions, "function", r);
    std::set<Sym> out(m.output.begin(), m.output.end());
    std::set<Sym> in(m.input.begin(), m.input.end());
    if (!states.count(m.initial)) r.push_back("initial state " + m.initial + " not declared");
    for (const auto& x : m.registers)
        if (!m.init.count(x)) r.push_back("initial valuation undefined on register " + x);
    for (const auto& [x, w] : m.init) {
        if (!regs.count(x)) r.push_back("initial valuation of unknown register " + x);
        check_word(w, out, "initial valuation", r);
    }
    for (const auto& [k, e] : m.delta) {
        std::string where = "(" + k.first + "," + k.second + ")";
        if (!states.count(k.first)) r.push_back("unknown state " + k.first + " in transition " + where);
        if (!in.count(k.second)) r.push_back("unknown letter " + k.second + " in transition " + where);
        if (!states.count(e.target)) r.push_back("unknown target " + e.target + " in transition " + where);
        check_subst(e.update, out, regs, funs, where, r);
    }
    for (const auto& [q, e] : m.out) {
        if (!states.count(q)) r.push_back("output defined on unknown state " + q);
        for (const auto& t : e) {
            if (t.is_reg() && !regs.count(t.name)) r.push_back("unknown register in output of " + q + ": " + t.name);
            if (t.is_letter() && !out.count(t.name)) r.push_back("unknown output letter " + t.name + " in output of " + q);
            if (t.is_fun()) r.push_back("function token in output of " + q);
        }
    }
    if (m.layers) {
        for (auto& s : partition_problems(m.registers, *m.layers)) r.push_back(s);
    }
    return r;
}

ValidationReport validate(const NSSTF& m)
{
    ValidationReport r;
    check_alphabet(m.input, "input", r);
    check_alphabet(m.output, "output", r);
    auto states = unique_set(m.states, "state", r);
    auto regs = unique_set(m.registers, "register", r);
    auto funs = unique_set(m.functions, "function", r);
    std::set<Sym> out(m.output.begin(), m.output.end());
    std::set<Sym> in(m.input.begin(), m.input.end());
    for (const auto& [q, v] : m.init) {
        if (!states.count(q)) r.push_back("initial valuation on unknown state " + q);
        for (const auto& x : m.registers)
            if (!v.count(x)) r.push_back("initial valuation of " + q + " undefined on register " + x);
        for (const auto& [x, w] : v) {
            if (!regs.count(x)) r.push_back("initial valuation of unknown register " + x);
            check_word(w, out, "initial valuation", r);
        }
    }
    for (const auto& [k, s] : m.delta) {
        const auto& [p, a, q] = k;
        std::string where = "(" + p + "," + a + "," + q + ")";
        if (!states.count(p) || !states.count(q)) r.push_back("unknown state in transition " + where);
        if (!in.count(a)) r.push_back("unknown letter " + a + " in transition " + where);
        check_subst(s, out, regs, funs, where, r);
    }
    for (const auto& [q, e] : m.out) {
        if (!states.count(q)) r.push_back("output defined on unknown state " + q);
        for (const auto& t : e) {
            if (t.is_reg() && !regs.count(t.name)) r.push_back("unknown register in output of " + q + ": " + t.name);
            if (t.is_letter() && !out.count(t.name)) r.push_back("unknown output letter " + t.name + " in output of " + q);
            if (t.is_fun()) r.push_back("function token in output of " + q);
        }
    }
    return r;
}

ValidationReport validate(const NAutomaton& a)
{
    ValidationReport r;
    check_alphabet(a.input, "input", r);
    std::set<std::string> st;
    for (const auto& s : a.states)
        if (!st.insert(s).second) r.push_back("duplicate state " + s);
    std::size_t n = a.states.size();
    if (a.alpha.size() != n) r.push_back("initial vector has wrong dimension");
    if (a.beta.size() != n) r.push_back("final vector has wrong dimension");
    for (const auto& s : a.input) {
        auto it = a.mu.find(s);
        if (it == a.mu.end()) {
            r.push_back("no matrix for letter " + s);
            continue;
        }
        if (it->second.size() != n) r.push_back("matrix for " + s + " has wrong dimension");
        for (const auto& row : it->second)
            if (row.size() != n) r.push_back("matrix for " + s + " has wrong dimension");
    }
    std::set<Sym> in(a.input.begin(), a.input.end());
    for (const auto& [s, m] : a.mu)
        if (!in.count(s)) r.push_back("matrix for unknown letter " + s);
    return r;
}

ValidationReport validate(const Machine& m)
{
    return std::visit([](const auto& x) { return validate(x); }, m);
}

MarbleTransducer as_marble(const TwoWayTransducer& t)
{
    MarbleTransducer m;
    m.input = t.input;
    m.output = t.output;
    m.states = t.states;
    m.initial = t.initial;
    m.finals = t.finals;
    m.declared_bound = 0;
    for (const auto& [k, e] : t.delta) {
        MarbleEdge me{e.target, e.move == Move::Left ? MarbleAction::left() : MarbleAction::right(),
                      e.output};
        m.delta[{k.first, k.second, std::nullopt}] = me;
    }
    return m;
}

std::optional<TwoWayTransducer> as_two_way(const MarbleTransducer& t)
{
    TwoWayTransducer r;
    r.input = t.input;
    r.output = t.output;
    r.states = t.states;
    r.initial = t.initial;
    r.finals = t.finals;
    for (const auto& [k, e] : t.delta) {
        const auto& [q, a, c] = k;
        if (c) return std::nullopt;
        using K = MarbleAction::Kind;
        if (e.action.kind == K::Drop || e.action.kind == K::Lift) return std::nullopt;
        r.delta[{q, a}] = {e.target, e.action.kind == K::Left ? Move::Left : Move::Right, e.output};
    }
    return r;
}

namespace {

template <class Edges>
std::vector<std::string> copyless_violations(const Edges& edges)
{
    std::vector<std::string> v;
    for (const auto& [where, s] : edges) {
        for (const auto& [x, n] : register_counts(*s))
            if (n > 1)
                v.push_back("register " + x + " used " + std::to_string(n) + " times in update " + where);
    }
    return v;
}

}  // namespace

std::vector<std::string> check_copyless(const SST& m)
{
    std::vector<std::pair<std::string, const Substitution*>> edges;
    for (const auto& [k, e] : m.delta)
        edges.push_back({"(" + k.first + "," + k.second + ")", &e.update});
    return copyless_violations(edges);
}

std::vector<std::string> check_copyless(const NSSTF& m)
{
    std::vector<std::pair<std::string, const Substitution*>> edges;
    for (const auto& [k, s] : m.delta) {
        const auto& [p, a, q] = k;
        edges.push_back({"(" + p + "," + a + "," + q + ")", &s});
    }
    return copyless_violations(edges);
}

std::vector<std::string> partition_problems(const std::vector<std::string>& regs,
                                            const LayerPartition& p)
{
    std::vector<std::string> v;
    std::set<std::string> all(regs.begin(), regs.end()), seen;
    for (const auto& layer : p)
        for (const auto& x : layer) {
            if (!all.count(x)) v.push_back("layer mentions unknown register " + x);
            if (!seen.insert(x).second) v.push_back("register " + x + " in several layers");
        }
    for (const auto& x : regs)
        if (!seen.count(x)) v.push_back("register " + x + " in no layer");
    return v;
}

namespace {

std::map<std::string, int> layer_index(const LayerPartition& p)
{
    std::map<std::string, int> li;
    for (int i = 0; i < static_cast<int>(p.size()); ++i)
        for (const auto& x : p[i]) li[x] = i;
    return li;
}

std::vector<std::string> order_violations(const SST& m, const LayerPartition& p)
{
    std::vector<std::string> v;
    auto li = layer_index(p);
    for (const auto& [k, e] : m.delta)
        for (const auto& [x, rhs] : e.update)
            for (const auto& t : rhs)
                if (t.is_reg() && li.at(t.name) > li.at(x))
                    v.push_back("register " + x + " of layer " + std::to_string(li.at(x)) +
                                " reads higher-layer register " + t.name + " in update (" +
                                k.first + "," + k.second + ")");
    return v;
}

}  // namespace

std::vector<std::string> check_layered(const SST& m, const LayerPartition& p)
{
    auto v = partition_problems(m.registers, p);
    if (!v.empty()) return v;
    v = order_violations(m, p);
    auto li = layer_index(p);
    for (const auto& [k, e] : m.delta) {
        std::map<std::string, int> count;
        for (const auto& [x, rhs] : e.update)
            for (const auto& t : rhs)
                if (t.is_reg() && li.at(t.name) == li.at(x)) ++count[t.name];
        for (const auto& [y, n] : count)
            if (n > 1)
                v.push_back("register " + y + " occurs " + std::to_string(n) +
                            " times within its layer in update (" + k.first + "," + k.second + ")");
    }
    return v;
}

namespace {

// Closure over (state, per-layer occurrence matrices saturated at cap).
struct OccurrenceClosure {
    struct Node {
        int state;
        std::vector<std::uint8_t> mats;
        int parent;
        int letter;
        int start;
    };
    std::vector<Node> nodes;
    int max_sum = 0;
    int worst = -1;
};

OccurrenceClosure occurrence_closure(const SST& m, const LayerPartition& p, int cap, bool stop_over)
{
    auto problems = partition_problems(m.registers, p);
    if (!problems.empty()) throw ModelError(problems.front());
    auto ov = order_violations(m, p);
    if (!ov.empty()) throw ModelError(ov.front());

    std::map<std::string, int> sidx;
    for (int i = 0; i < static_cast<int>(m.states.size()); ++i) sidx[m.states[i]] = i;
    // Each layer's block is an n_i x n_i matrix; offsets index the flattened vector.
    std::vector<std::vector<std::string>> L = p;
    std::vector<int> offset(L.size() + 1, 0);
    for (std::size_t i = 0; i < L.size(); ++i)
        offset[i + 1] = offset[i] + static_cast<int>(L[i].size() * L[i].size());
    std::map<std::string, std::pair<int, int>> where;  // layer, index
    for (int i = 0; i < static_cast<int>(L.size()); ++i)
        for (int j = 0; j < static_cast<int>(L[i].size()); ++j) where[L[i][j]] = {i, j};

    int nA = static_cast<int>(m.input.size());
    // Per (state, letter): target and per-layer occurrence matrix of the update.
    struct Step {
        int target = -1;
        std::vector<int> mat;
    };
    std::vector<std::vector<Step>> steps(m.states.size(), std::vector<Step>(nA));
    for (const auto& [k, e] : m.delta) {
        int q = sidx.at(k.first);
        int a = static_cast<int>(std::find(m.input.begin(), m.input.end(), k.second) - m.input.begin());
        Step st;
        st.target = sidx.at(e.target);
        st.mat.assign(offset.back(), 0);
        for (const auto& [x, rhs] : e.update) {
            auto [lx, ix] = where.at(x);
            for (const auto& t : rhs) {
                if (!t.is_reg()) continue;
                auto [ly, iy] = where.at(t.name);
                if (ly != lx) continue;
                int n = static_cast<int>(L[lx].size());
                st.mat[offset[lx] + ix * n + iy] += 1;
            }
        }
        steps[q][a] = std::move(st);
    }

    auto column_max = [&](const std::vector<std::uint8_t>& M) {
        int best = 0;
        for (std::size_t l = 0; l < L.size(); ++l) {
            int n = static_cast<int>(L[l].size());
            for (int y = 0; y < n; ++y) {
                int s = 0;
                for (int x = 0; x < n; ++x) s += M[offset[l] + x * n + y];
                best = std::max(best, std::min(s, cap));
            }
        }
        return best;
    };

    OccurrenceClosure c;
    std::map<std::pair<int, std::vector<std::uint8_t>>, int> seen;
    std::deque<int> queue;
    for (int q = 0; q < static_cast<int>(m.states.size()); ++q) {
        std::vector<std::uint8_t> id(offset.back(), 0);
        for (std::size_t l = 0; l < L.size(); ++l) {
            int n = static_cast<int>(L[l].size());
            for (int x = 0; x < n; ++x) id[offset[l] + x * n + x] = 1;
        }
        if (seen.emplace(std::make_pair(q, id), static_cast<int>(c.nodes.size())).second) {
            c.nodes.push_back({q, id, -1, -1, q});
            queue.push_back(static_cast<int>(c.nodes.size()) - 1);
        }
    }
    while (!queue.empty()) {
        int cur = queue.front();
        queue.pop_front();
        int sum = column_max(c.nodes[cur].mats);
        if (sum > c.max_sum) {
            c.max_sum = sum;
            c.worst = cur;
        }
        if (stop_over && sum >= cap) return c;
        for (int a = 0; a < nA; ++a) {
            const Step& st = steps[c.nodes[cur].state][a];
            if (st.target < 0) continue;
            // N_{new} = N_step * N_old per layer block, saturated.
            std::vector<std::uint8_t> M(offset.back(), 0);
            const auto& old = c.nodes[cur].mats;
            for (std::size_t l = 0; l < L.size(); ++l) {
                int n = static_cast<int>(L[l].size());
                for (int x = 0; x < n; ++x)
                    for (int y = 0; y < n; ++y) {
                        long s = 0;
                        for (int z = 0; z < n; ++z)
                            s += static_cast<long>(st.mat[offset[l] + x * n + z]) *
                                 old[offset[l] + z * n + y];
                        M[offset[l] + x * n + y] = static_cast<std::uint8_t>(std::min<long>(s, cap));
                    }
            }
            auto key = std::make_pair(st.target, M);
            if (seen.count(key)) continue;
            seen.emplace(key, static_cast<int>(c.nodes.size()));
            c.nodes.push_back({st.target, std::move(M), cur, a, c.nodes[cur].start});
            queue.push_back(static_cast<int>(c.nodes.size()) - 1);
        }
    }
    return c;
}

}  // namespace

BoundedResult check_bounded(const SST& m, const LayerPartition& p, int B)
{
    if (B < 1) throw ModelError("bound must be positive");
    auto c = occurrence_closure(m, p, B + 1, true);
    BoundedResult r;
    if (c.max_sum <= B) return r;
    r.bounded = false;
    Word w;
    for (int n = c.worst; c.nodes[n].parent >= 0; n = c.nodes[n].parent)
        w.insert(w.begin(), m.input[c.nodes[n].letter]);
    r.witness = w;
    r.state = m.states[c.nodes[c.worst].start];
    r.detail = "some register occurs more than " + std::to_string(B) + " times within its layer";
    return r;
}

std::optional<int> measure_bound(const SST& m, const LayerPartition& p, int cap)
{
    auto c = occurrence_closure(m, p, cap + 1, true);
    if (c.max_sum > cap) return std::nullopt;
    return std::max(c.max_sum, 1);
}

}  // namespace xducer
