#include "xducer/growth.hpp"

#include <deque>
#include <functional>

#include "xducer/layering.hpp"

namespace xducer {

namespace {

// Positive-support view of an N-automaton.
struct Support {
    std::size_t n = 0;
    std::vector<Sym> letters;
    // succ[a][i] = (j, weight) with weight >= 1
    std::vector<std::vector<std::vector<std::pair<int, std::uint64_t>>>> succ;
    std::vector<std::vector<char>> reach;  // reflexive-transitive

    explicit Support(const NAutomaton& a) : n(a.states.size()), letters(a.input)
    {
        succ.assign(letters.size(), std::vector<std::vector<std::pair<int, std::uint64_t>>>(n));
        for (std::size_t l = 0; l < letters.size(); ++l) {
            const Matrix& M = a.mu.at(letters[l]);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    if (M[i][j]) succ[l][i].push_back({static_cast<int>(j), M[i][j]});
        }
        reach.assign(n, std::vector<char>(n, 0));
        for (std::size_t s = 0; s < n; ++s) {
            std::deque<int> q{static_cast<int>(s)};
            reach[s][s] = 1;
            while (!q.empty()) {
                int i = q.front();
                q.pop_front();
                for (const auto& row : succ)
                    for (auto [j, wgt] : row[i])
                        if (!reach[s][j]) {
                            reach[s][j] = 1;
                            q.push_back(j);
                        }
            }
        }
    }

    bool same_scc(int i, int j) const { return reach[i][j] && reach[j][i]; }

    // Shortest (then lexicographically least) word from some source to some target.
    std::optional<Word> path(const std::vector<int>& sources, const std::vector<char>& target) const
    {
        std::vector<int> parent(n, -2), via(n, -1);
        std::deque<int> q;
        for (int s : sources)
            if (parent[s] == -2) {
                parent[s] = -1;
                q.push_back(s);
            }
        while (!q.empty()) {
            int i = q.front();
            q.pop_front();
            if (target[i]) {
                Word w;
                for (int c = i; parent[c] >= 0; c = parent[c]) w.insert(w.begin(), letters[via[c]]);
                return w;
            }
            for (std::size_t l = 0; l < letters.size(); ++l)
                for (auto [j, wgt] : succ[l][i])
                    if (parent[j] == -2) {
                        parent[j] = i;
                        via[j] = static_cast<int>(l);
                        q.push_back(j);
                    }
        }
        return std::nullopt;
    }

    std::optional<Word> path(int from, int to) const
    {
        std::vector<char> t(n, 0);
        t[to] = 1;
        return path(std::vector<int>{from}, t);
    }
};

std::map<std::string, int> indices(const std::vector<std::string>& v)
{
    std::map<std::string, int> m;
    for (std::size_t i = 0; i < v.size(); ++i) m[v[i]] = static_cast<int>(i);
    return m;
}

// BFS over tuples of states moving on a common letter; tuples encoded base n.
template <class Allowed, class Step>
std::optional<Word> tuple_search(const Support& s, std::vector<long> start, long goal,
                                 Allowed allowed, Step step)
{
    std::map<long, std::pair<long, int>> parent;
    std::deque<long> q;
    for (long st : start) {
        if (parent.count(st)) continue;
        parent[st] = {-1, -1};
        q.push_back(st);
    }
    while (!q.empty()) {
        long cur = q.front();
        q.pop_front();
        for (std::size_t l = 0; l < s.letters.size(); ++l) {
            std::vector<long> nexts;
            step(cur, l, nexts);
            for (long nx : nexts) {
                if (!allowed(nx) || parent.count(nx)) continue;
                parent[nx] = {cur, static_cast<int>(l)};
                if (nx == goal) {
                    Word w;
                    for (long c = nx; parent[c].second >= 0; c = parent[c].first)
                        w.insert(w.begin(), s.letters[parent[c].second]);
                    return w;
                }
                q.push_back(nx);
            }
        }
    }
    return std::nullopt;
}

std::optional<Word> heavy_on(const Support& s, int q)
{
    const long n = static_cast<long>(s.n);
    auto enc = [&](long p1, long p2, long f) { return (p1 * n + p2) * 2 + f; };
    long start = enc(q, q, 0), goal = enc(q, q, 1);
    auto allowed = [&](long code) {
        long p12 = code / 2;
        return s.same_scc(q, static_cast<int>(p12 / n)) && s.same_scc(q, static_cast<int>(p12 % n));
    };
    auto step = [&](long code, std::size_t l, std::vector<long>& out) {
        long f = code % 2, p12 = code / 2, p1 = p12 / n, p2 = p12 % n;
        for (auto [j1, w1] : s.succ[l][p1])
            for (auto [j2, w2] : s.succ[l][p2]) {
                // Paths diverge on distinct successors, or on distinct copies of one weighted edge.
                if (f || p1 != p2) out.push_back(enc(j1, j2, f));
                else if (j1 != j2) out.push_back(enc(j1, j2, 1));
                else {
                    out.push_back(enc(j1, j2, 0));
                    if (w1 >= 2) out.push_back(enc(j1, j2, 1));
                }
                (void)w2;
            }
    };
    // Only a diverged pair may return to (q,q,1); the start itself is never the goal.
    return tuple_search(s, {start}, goal, allowed, step);
}

std::optional<Word> barbell_idx(const Support& s, int q, int qp)
{
    const long n = static_cast<long>(s.n);
    auto enc = [&](long a, long b, long c) { return (a * n + b) * n + c; };
    auto allowed = [&](long code) {
        int c = static_cast<int>(code % n), b = static_cast<int>((code / n) % n),
            a = static_cast<int>(code / n / n);
        return s.same_scc(a, q) && s.reach[q][b] && s.reach[b][qp] && s.same_scc(c, qp);
    };
    auto step = [&](long code, std::size_t l, std::vector<long>& out) {
        long c = code % n, b = (code / n) % n, a = code / n / n;
        for (auto [ja, wa] : s.succ[l][a])
            for (auto [jb, wb] : s.succ[l][b])
                for (auto [jc, wc] : s.succ[l][c]) out.push_back(enc(ja, jb, jc));
    };
    return tuple_search(s, {enc(q, q, qp)}, enc(q, qp, qp), allowed, step);
}

}  // namespace

TrimResult trim_with_report(const NAutomaton& a)
{
    Support s(a);
    std::vector<char> fwd(s.n, 0), bwd(s.n, 0);
    for (std::size_t i = 0; i < s.n; ++i)
        for (std::size_t j = 0; j < s.n; ++j) {
            if (a.alpha[i] && s.reach[i][j]) fwd[j] = 1;
            if (a.beta[j] && s.reach[i][j]) bwd[i] = 1;
        }
    TrimResult r;
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < s.n; ++i) {
        if (fwd[i] && bwd[i]) keep.push_back(i);
        else r.removed.insert(a.states[i]);
    }
    NAutomaton& t = r.automaton;
    t.input = a.input;
    for (auto i : keep) {
        t.states.push_back(a.states[i]);
        t.alpha.push_back(a.alpha[i]);
        t.beta.push_back(a.beta[i]);
    }
    for (const auto& [l, M] : a.mu) {
        Matrix R(keep.size(), std::vector<std::uint64_t>(keep.size(), 0));
        for (std::size_t i = 0; i < keep.size(); ++i)
            for (std::size_t j = 0; j < keep.size(); ++j) R[i][j] = M[keep[i]][keep[j]];
        t.mu[l] = std::move(R);
    }
    return r;
}

NAutomaton trim(const NAutomaton& a) { return trim_with_report(a).automaton; }

bool is_trim(const NAutomaton& a) { return trim_with_report(a).removed.empty(); }

bool is_simple(const SST& m)
{
    if (m.states.size() != 1 || !m.functions.empty()) return false;
    const auto& q = m.states.front();
    for (const auto& a : m.input) {
        auto it = m.delta.find({q, a});
        if (it == m.delta.end()) return false;
        for (const auto& [x, e] : it->second.update)
            for (const auto& t : e)
                if (!t.is_reg()) return false;
    }
    auto f = m.out.find(q);
    if (f != m.out.end())
        for (const auto& t : f->second)
            if (!t.is_reg()) return false;
    return true;
}

NAutomaton flow_automaton(const SST& m)
{
    if (!is_simple(m)) throw ModelError("machine not simple");
    NAutomaton a;
    a.input = m.input;
    a.states = m.registers;
    auto idx = indices(m.registers);
    std::size_t n = m.registers.size();
    for (const auto& x : m.registers) a.alpha.push_back(m.init.at(x).size());
    a.beta.assign(n, 0);
    const auto& q = m.states.front();
    if (auto f = m.out.find(q); f != m.out.end())
        for (const auto& t : f->second) ++a.beta[idx.at(t.name)];
    for (const auto& l : m.input) {
        Matrix M(n, std::vector<std::uint64_t>(n, 0));
        for (const auto& [xp, e] : m.delta.at({q, l}).update)
            for (const auto& t : e) ++M[idx.at(t.name)][idx.at(xp)];
        a.mu[l] = std::move(M);
    }
    return a;
}

std::optional<HeavyCycle> has_heavy_cycle(const NAutomaton& a)
{
    if (!is_trim(a)) throw ModelError("automaton is not trim");
    Support s(a);
    for (std::size_t q = 0; q < s.n; ++q)
        if (auto w = heavy_on(s, static_cast<int>(q))) return HeavyCycle{a.states[q], *w};
    return std::nullopt;
}

std::optional<Word> find_barbell(const NAutomaton& a, const std::string& q, const std::string& qp)
{
    if (q == qp) throw ModelError("barbell needs two distinct states");
    auto idx = indices(a.states);
    Support s(a);
    return barbell_idx(s, idx.at(q), idx.at(qp));
}

BarbellGraph barbell_graph(const NAutomaton& a)
{
    if (has_heavy_cycle(a)) throw ModelError("heavy cycle present");
    Support s(a);
    BarbellGraph g;
    g.vertices = a.states;
    std::size_t n = s.n;
    for (std::size_t q = 0; q < n; ++q)
        for (std::size_t qp = 0; qp < n; ++qp) {
            if (q == qp || !s.reach[q][qp]) continue;
            auto v = barbell_idx(s, static_cast<int>(q), static_cast<int>(qp));
            if (!v) continue;
            for (std::size_t q1 = 0; q1 < n; ++q1) {
                if (!s.reach[q1][q]) continue;
                for (std::size_t q2 = 0; q2 < n; ++q2) {
                    if (!s.reach[qp][q2]) continue;
                    auto key = std::make_pair(a.states[q1], a.states[q2]);
                    if (g.edges.count(key)) continue;
                    g.edges[key] = {a.states[q], a.states[qp], *v,
                                    *s.path(static_cast<int>(q1), static_cast<int>(q)),
                                    *s.path(static_cast<int>(qp), static_cast<int>(q2))};
                }
            }
        }
    for (const auto& [k, e] : g.edges)
        if (k.first == k.second) throw ModelError("heavy cycle missed: barbell graph has a loop");
    return g;
}

Word PolynomialWitness::instance(std::size_t l) const
{
    Word w = left;
    for (std::size_t i = 0; i < loops.size(); ++i) {
        for (std::size_t r = 0; r < l; ++r) w.insert(w.end(), loops[i].begin(), loops[i].end());
        if (i < connectors.size()) w.insert(w.end(), connectors[i].begin(), connectors[i].end());
    }
    w.insert(w.end(), right.begin(), right.end());
    return w;
}

Word GrowthReport::exponential_instance(std::size_t l) const
{
    Word w = u;
    for (std::size_t r = 0; r < l; ++r) w.insert(w.end(), v.begin(), v.end());
    w.insert(w.end(), z.begin(), z.end());
    return w;
}

GrowthReport classify(const NAutomaton& a0)
{
    GrowthReport r;
    auto tr = trim_with_report(a0);
    r.trim_removed = tr.removed;
    const NAutomaton& a = tr.automaton;
    Support s(a);
    std::size_t n = s.n;
    if (n == 0) return r;

    std::vector<int> init;
    std::vector<char> fin(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (a.alpha[i]) init.push_back(static_cast<int>(i));
        if (a.beta[i]) fin[i] = 1;
    }
    auto to_state = [&](int q) {
        std::vector<char> t(n, 0);
        t[q] = 1;
        return *s.path(init, t);
    };
    auto from_state = [&](int q) { return *s.path(std::vector<int>{q}, fin); };

    for (std::size_t q = 0; q < n; ++q) {
        if (auto v = heavy_on(s, static_cast<int>(q))) {
            r.cls = GrowthReport::Class::Exponential;
            r.q = a.states[q];
            r.u = to_state(static_cast<int>(q));
            r.v = *v;
            r.z = from_state(static_cast<int>(q));
            return r;
        }
    }

    auto g = barbell_graph(a);
    auto idx = indices(a.states);
    std::vector<std::vector<int>> out(n);
    std::vector<int> indeg(n, 0);
    for (const auto& [k, e] : g.edges) {
        out[idx.at(k.first)].push_back(idx.at(k.second));
        ++indeg[idx.at(k.second)];
    }
    std::vector<int> order;
    std::deque<int> q;
    for (std::size_t i = 0; i < n; ++i)
        if (!indeg[i]) q.push_back(static_cast<int>(i));
    while (!q.empty()) {
        int i = q.front();
        q.pop_front();
        order.push_back(i);
        for (int j : out[i])
            if (--indeg[j] == 0) q.push_back(j);
    }
    if (order.size() != n) throw ModelError("heavy cycle missed: barbell graph is cyclic");
    std::vector<int> height(n, 0), pred(n, -1);
    for (int i : order)
        for (int j : out[i])
            if (height[i] + 1 > height[j]) {
                height[j] = height[i] + 1;
                pred[j] = i;
            }
    int top = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (height[i] > height[top]) top = static_cast<int>(i);
    r.degree = height[top];
    r.partition.assign(r.degree + 1, {});
    for (std::size_t i = 0; i < n; ++i) r.partition[height[i]].push_back(a.states[i]);

    std::vector<int> chain;
    for (int c = top; c >= 0; c = pred[c]) chain.insert(chain.begin(), c);
    if (r.degree == 0) {
        r.family.left = to_state(chain.front());
        r.family.right = from_state(chain.front());
        return r;
    }
    std::vector<const BarbellEdge*> es;
    for (std::size_t i = 0; i + 1 < chain.size(); ++i)
        es.push_back(&g.edges.at({a.states[chain[i]], a.states[chain[i + 1]]}));
    r.family.left = to_state(idx.at(es.front()->q));
    for (std::size_t i = 0; i < es.size(); ++i) {
        r.family.loops.push_back(es[i]->v);
        if (i + 1 < es.size())
            r.family.connectors.push_back(*s.path(idx.at(es[i]->qp), idx.at(es[i + 1]->q)));
    }
    r.family.right = from_state(idx.at(es.back()->qp));
    return r;
}

FunctionGrowth classify_function(const SST& m)
{
    auto [total, dom] = make_total(m);
    (void)dom;
    FunctionGrowth f;
    f.report = classify(flow_automaton(to_simple(total)));
    if (!f.report.exponential()) f.minimal_marbles = std::max(f.report.degree - 1, 0);
    return f;
}

}  // namespace xducer
