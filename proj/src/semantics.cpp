#include "xducer/semantics.hpp"

#include <cstdlib>
#include <functional>
#include <memory>
#include <sstream>
#include <unordered_set>

namespace xducer {

std::string verdict_name(Verdict v)
{
    switch (v) {
    case Verdict::Accept: return "accept";
    case Verdict::Reject: return "reject";
    case Verdict::BudgetExceeded: return "budget-exceeded";
    case Verdict::LoopDetected: return "loop-detected";
    }
    return "?";
}

std::uint64_t default_budget(std::size_t n, std::size_t q)
{
    const std::uint64_t cap = 10'000'000;
    std::uint64_t e = std::min<std::size_t>(n + 2, 20);
    long double b = 10.0L * (n + 2) * std::max<std::size_t>(q, 1) * static_cast<long double>(1ULL << e);
    return b > cap ? cap : static_cast<std::uint64_t>(b);
}

std::uint64_t effective_budget(const RunOptions& o, std::size_t n, std::size_t q)
{
    if (o.budget) return *o.budget;
    if (const char* env = std::getenv("XDUCER_BUDGET")) {
        char* end = nullptr;
        unsigned long long v = std::strtoull(env, &end, 10);
        if (end && *end == '\0' && end != env) return v;
    }
    return default_budget(n, q);
}

void check_word(const Alphabet& a, const Word& w)
{
    for (const auto& s : w)
        if (std::find(a.begin(), a.end(), s) == a.end())
            throw ModelError("alphabet mismatch: symbol " + s + " not in input alphabet");
}

CompiledMarble::CompiledMarble(const MarbleTransducer& t) : m_(&t)
{
    sym_[LEFT_END] = 0;
    for (std::size_t i = 0; i < t.input.size(); ++i) sym_[t.input[i]] = static_cast<int>(i + 1);
    sym_[RIGHT_END] = static_cast<int>(t.input.size() + 1);
    nsym_ = t.input.size() + 2;
    ncol_ = t.colors.size() + 1;
    std::map<std::string, int> sidx, cidx;
    for (std::size_t i = 0; i < t.states.size(); ++i) sidx[t.states[i]] = static_cast<int>(i);
    for (std::size_t i = 0; i < t.colors.size(); ++i) cidx[t.colors[i]] = static_cast<int>(i + 1);
    table_.assign(t.states.size() * nsym_ * ncol_, Entry{});
    final_.assign(t.states.size(), 0);
    for (const auto& f : t.finals) final_[sidx.at(f)] = 1;
    initial_ = sidx.at(t.initial);
    for (const auto& [k, e] : t.delta) {
        const auto& [q, a, c] = k;
        Entry en;
        en.target = sidx.at(e.target);
        en.kind = e.action.kind;
        if (e.action.kind == MarbleAction::Kind::Drop) en.drop = cidx.at(e.action.color);
        if (!e.output.empty()) {
            en.out = static_cast<int>(outputs_.size());
            outputs_.push_back(e.output);
        }
        std::size_t ci = c ? cidx.at(*c) : 0;
        table_[(static_cast<std::size_t>(sidx.at(q)) * nsym_ + sym_.at(a)) * ncol_ + ci] = en;
    }
}

int CompiledMarble::sym_index(const Sym& s) const
{
    auto it = sym_.find(s);
    if (it == sym_.end() || s == LEFT_END || s == RIGHT_END)
        throw ModelError("alphabet mismatch: symbol " + s + " not in input alphabet");
    return it->second;
}

namespace {

struct ConfigHash {
    std::size_t operator()(const std::vector<int>& v) const
    {
        std::size_t h = 1469598103934665603ULL;
        for (int x : v) h = (h ^ static_cast<std::size_t>(x)) * 1099511628211ULL;
        return h;
    }
};

}  // namespace

RunResult CompiledMarble::run(const Word& w, const RunOptions& o) const
{
    std::vector<int> syms;
    syms.reserve(w.size() + 2);
    syms.push_back(0);
    for (const auto& s : w) syms.push_back(sym_index(s));
    syms.push_back(static_cast<int>(nsym_ - 1));
    const std::size_t last = w.size() + 1;
    const std::uint64_t budget = effective_budget(o, w.size(), m_->states.size());

    RunResult r;
    int q = initial_;
    std::size_t head = 0;
    std::vector<std::pair<int, std::size_t>> stack;  // bottom first
    std::unordered_set<std::vector<int>, ConfigHash> seen;

    auto snapshot = [&](const Word& emitted) {
        TraceStep t{r.steps, m_->states[q], head, {}, emitted};
        for (auto it = stack.rbegin(); it != stack.rend(); ++it)
            t.stack.push_back({m_->colors[it->first - 1], it->second});
        r.trace.push_back(std::move(t));
    };
    if (o.trace) snapshot({});

    while (true) {
        if (head == last && stack.empty() && final_[q]) {
            r.verdict = Verdict::Accept;
            return r;
        }
        if (o.detect_loops) {
            std::vector<int> key{q, static_cast<int>(head)};
            for (auto& [c, p] : stack) {
                key.push_back(c);
                key.push_back(static_cast<int>(p));
            }
            if (!seen.insert(std::move(key)).second) {
                r.verdict = Verdict::LoopDetected;
                r.output.clear();
                return r;
            }
        }
        if (r.steps >= budget) {
            r.verdict = Verdict::BudgetExceeded;
            r.output.clear();
            return r;
        }
        int color = (!stack.empty() && stack.back().second == head) ? stack.back().first : 0;
        const Entry& e = at(q, syms[head], color);
        if (e.target < 0) {
            r.verdict = Verdict::Reject;
            r.detail = "undefined transition";
            r.output.clear();
            return r;
        }
        using K = MarbleAction::Kind;
        switch (e.kind) {
        case K::Left:
            if (head == 0) {
                r.verdict = Verdict::Reject;
                r.detail = "move left of the left endmarker";
                r.output.clear();
                return r;
            }
            --head;
            break;
        case K::Right:
            if (color) throw ModelError("invalid machine: move right over a marble");
            if (head == last) {
                r.verdict = Verdict::Reject;
                r.detail = "move right of the right endmarker";
                r.output.clear();
                return r;
            }
            ++head;
            break;
        case K::Lift:
            if (!color) throw ModelError("invalid machine: lift without a marble");
            stack.pop_back();
            break;
        case K::Drop:
            if (color) throw ModelError("invalid machine: drop on a marbled position");
            stack.push_back({e.drop, head});
            r.max_stack_depth = std::max(r.max_stack_depth, stack.size());
            break;
        }
        q = e.target;
        ++r.steps;
        if (e.out >= 0) {
            const Word& out = outputs_[e.out];
            r.output.insert(r.output.end(), out.begin(), out.end());
        }
        // Stack discipline: positions strictly increase toward the bottom, all >= head.
        if (!stack.empty() && stack.back().second < head)
            throw ModelError("stack discipline violated");
        if (o.trace) snapshot(e.out >= 0 ? outputs_[e.out] : Word{});
    }
}

RunResult run_marble(const MarbleTransducer& t, const Word& w, const RunOptions& o)
{
    return CompiledMarble(t).run(w, o);
}

RunResult run_two_way(const TwoWayTransducer& t, const Word& w, const RunOptions& o)
{
    auto m = as_marble(t);
    RunOptions oo = o;
    oo.detect_loops = true;
    return CompiledMarble(m).run(w, oo);
}

namespace {

// Runs the deterministic SST, calling `fun(f, m)` for f(w[1:m]) when needed.
std::optional<std::pair<std::string, Valuation>> sst_walk(
    const SST& m, const Word& w, const std::function<Word(const std::string&, std::size_t)>& fun)
{
    check_word(m.input, w);
    std::string q = m.initial;
    Valuation v = m.init;
    for (std::size_t i = 0; i < w.size(); ++i) {
        auto it = m.delta.find({q, w[i]});
        if (it == m.delta.end()) return std::nullopt;
        Valuation nv;
        for (const auto& [x, rhs] : it->second.update) {
            Word val;
            for (const auto& t : rhs) {
                if (t.is_letter()) val.push_back(t.name);
                else if (t.is_reg()) {
                    const auto& src = v.at(t.name);
                    val.insert(val.end(), src.begin(), src.end());
                } else {
                    auto fv = fun(t.name, i + 1);
                    val.insert(val.end(), fv.begin(), fv.end());
                }
            }
            nv[x] = std::move(val);
        }
        v = std::move(nv);
        q = it->second.target;
    }
    return std::make_pair(q, std::move(v));
}

RunResult finish(const SST& m, const std::optional<std::pair<std::string, Valuation>>& end,
                 std::size_t n)
{
    RunResult r;
    r.steps = n;
    if (!end) {
        r.detail = "undefined transition";
        return r;
    }
    auto it = m.out.find(end->first);
    if (it == m.out.end()) {
        r.detail = "final output undefined";
        return r;
    }
    r.verdict = Verdict::Accept;
    r.output = evaluate(it->second, end->second);
    return r;
}

std::function<Word(const std::string&, std::size_t)> registry_oracle(const FunctionRegistry& reg,
                                                                      const Word& w)
{
    auto cache = std::make_shared<std::map<std::pair<std::string, std::size_t>, Word>>();
    return [&reg, &w, cache](const std::string& f, std::size_t m) -> Word {
        auto key = std::make_pair(f, m);
        auto c = cache->find(key);
        if (c != cache->end()) return c->second;
        auto it = reg.find(f);
        if (it == reg.end()) throw ModelError("unresolved function name " + f);
        Word prefix(w.begin(), w.begin() + static_cast<long>(m));
        auto r = run_machine(it->second, prefix, reg);
        if (!r.accepted())
            throw ModelError("registry function " + f + " is not total: " + verdict_name(r.verdict) +
                             " on prefix '" + to_string(prefix) + "'");
        (*cache)[key] = r.output;
        return r.output;
    };
}

}  // namespace

RunResult run_sst(const SST& m, const Word& w)
{
    auto end = sst_walk(m, w, [](const std::string& f, std::size_t) -> Word {
        throw ModelError("unresolved function name " + f);
    });
    return finish(m, end, w.size());
}

std::optional<Valuation> register_values(const SST& m, const Word& prefix)
{
    auto end = sst_walk(m, prefix, [](const std::string& f, std::size_t) -> Word {
        throw ModelError("unresolved function name " + f);
    });
    if (!end) return std::nullopt;
    return end->second;
}

RunResult run_sstf(const SST& m, const Word& w, const FunctionRegistry& reg)
{
    return finish(m, sst_walk(m, w, registry_oracle(reg, w)), w.size());
}

std::optional<Valuation> sstf_register_values(const SST& m, const Word& prefix,
                                              const FunctionRegistry& reg)
{
    auto end = sst_walk(m, prefix, registry_oracle(reg, prefix));
    if (!end) return std::nullopt;
    return end->second;
}

std::vector<NRun> enumerate_nsstf_runs(const NSSTF& m, const Word& w, const FunctionRegistry& reg,
                                       std::size_t branch_limit)
{
    check_word(m.input, w);
    auto fun = registry_oracle(reg, w);
    // Successors indexed by (state, letter).
    std::map<std::pair<std::string, Sym>, std::vector<std::pair<std::string, const Substitution*>>> succ;
    for (const auto& [k, s] : m.delta) {
        const auto& [p, a, q] = k;
        succ[{p, a}].push_back({q, &s});
    }
    std::vector<NRun> runs;
    std::size_t explored = 0;
    std::vector<std::string> path;
    std::function<void(const std::string&, const Valuation&, std::size_t)> dfs =
        [&](const std::string& q, const Valuation& v, std::size_t i) {
            if (++explored > branch_limit) throw ModelError("branching limit exceeded");
            path.push_back(q);
            if (i == w.size()) {
                auto it = m.out.find(q);
                if (it != m.out.end()) runs.push_back({path, evaluate(it->second, v)});
            } else {
                auto it = succ.find({q, w[i]});
                if (it != succ.end()) {
                    for (const auto& [q2, s] : it->second) {
                        Valuation nv;
                        for (const auto& [x, rhs] : *s) {
                            Word val;
                            for (const auto& t : rhs) {
                                if (t.is_letter()) val.push_back(t.name);
                                else if (t.is_reg()) {
                                    const auto& src = v.at(t.name);
                                    val.insert(val.end(), src.begin(), src.end());
                                } else {
                                    auto fv = fun(t.name, i + 1);
                                    val.insert(val.end(), fv.begin(), fv.end());
                                }
                            }
                            nv[x] = std::move(val);
                        }
                        dfs(q2, nv, i + 1);
                    }
                }
            }
            path.pop_back();
        };
    for (const auto& [q, v] : m.init) dfs(q, v, 0);
    return runs;
}

RunResult run_nsstf(const NSSTF& m, const Word& w, const FunctionRegistry& reg)
{
    auto runs = enumerate_nsstf_runs(m, w, reg);
    RunResult r;
    r.steps = w.size();
    if (runs.size() > 1) throw ModelError("ambiguous NSST-F: several accepting runs");
    if (runs.empty()) {
        r.detail = "no accepting run";
        return r;
    }
    r.verdict = Verdict::Accept;
    r.output = runs.front().output;
    return r;
}

mpz_class eval_nautomaton(const NAutomaton& a, const Word& w)
{
    check_word(a.input, w);
    std::size_t n = a.states.size();
    std::vector<mpz_class> row(n);
    for (std::size_t i = 0; i < n; ++i) row[i] = static_cast<unsigned long>(a.alpha[i]);
    for (const auto& s : w) {
        const Matrix& M = a.mu.at(s);
        std::vector<mpz_class> next(n, 0);
        for (std::size_t i = 0; i < n; ++i) {
            if (row[i] == 0) continue;
            for (std::size_t j = 0; j < n; ++j)
                if (M[i][j]) next[j] += row[i] * static_cast<unsigned long>(M[i][j]);
        }
        row = std::move(next);
    }
    mpz_class total = 0;
    for (std::size_t i = 0; i < n; ++i) total += row[i] * static_cast<unsigned long>(a.beta[i]);
    return total;
}

RunResult run_machine(const Machine& m, const Word& w, const FunctionRegistry& reg,
                      const RunOptions& o)
{
    struct V {
        const Word& w;
        const FunctionRegistry& reg;
        const RunOptions& o;
        RunResult operator()(const TwoWayTransducer& t) const { return run_two_way(t, w, o); }
        RunResult operator()(const MarbleTransducer& t) const { return run_marble(t, w, o); }
        RunResult operator()(const SST& s) const
        {
            return s.functions.empty() ? run_sst(s, w) : run_sstf(s, w, reg);
        }
        RunResult operator()(const NSSTF& s) const { return run_nsstf(s, w, reg); }
        RunResult operator()(const NAutomaton&) const
        {
            throw ModelError("an N-automaton computes a number, not a word");
        }
    };
    return std::visit(V{w, reg, o}, m);
}

std::string format_trace(const std::vector<TraceStep>& trace)
{
    std::ostringstream os;
    for (const auto& t : trace) {
        os << t.step << '\t' << t.state << '\t' << t.head << '\t';
        for (std::size_t i = 0; i < t.stack.size(); ++i)
            os << (i ? "," : "") << t.stack[i].color << '@' << t.stack[i].pos;
        os << '\t' << to_string(t.emitted) << '\n';
    }
    return os.str();
}

}  // namespace xducer
