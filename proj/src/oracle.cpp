#include "xducer/oracle.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <cmath>
#include <thread>

namespace xducer {

std::vector<Word> enumerate_words(const Alphabet& a, std::size_t maxlen, std::size_t cap)
{
    std::vector<Word> out{{}};
    std::size_t begin = 0;
    for (std::size_t l = 1; l <= maxlen; ++l) {
        std::size_t end = out.size();
        for (std::size_t i = begin; i < end; ++i)
            for (const auto& s : a) {
                if (out.size() >= cap) throw ModelError("word enumeration exceeds the cap");
                Word v = out[i];
                v.push_back(s);
                out.push_back(std::move(v));
            }
        begin = end;
    }
    return out;
}

namespace {

const Alphabet& input_of(const Machine& m)
{
    return std::visit([](const auto& x) -> const Alphabet& { return x.input; }, m);
}

std::string render(const Word& w)
{
    std::string s;
    for (const auto& c : w) s += c;
    return s;
}

}  // namespace

EquivalenceVerdict equiv_check(const Machine& m1, const Machine& m2, std::size_t maxlen, const OracleOptions& o)
{
    auto a1 = input_of(m1), a2 = input_of(m2);
    std::sort(a1.begin(), a1.end());
    std::sort(a2.begin(), a2.end());
    if (a1 != a2) throw ModelError("machines read different input alphabets");
    const auto words = enumerate_words(input_of(m1), maxlen, o.word_cap);

    // Per-word verdicts are independent; the least mismatching index wins.
    std::atomic<std::size_t> next{0}, worst{words.size()};
    std::vector<EquivalenceVerdict> found(words.size() ? 1 : 0);
    std::mutex lock;
    auto work = [&] {
        for (;;) {
            std::size_t i = next++;
            if (i >= words.size() || i > worst) return;
            auto r1 = run_machine(m1, words[i], o.registry, o.run);
            auto r2 = run_machine(m2, words[i], o.registry, o.run);
            EquivalenceVerdict v;
            v.maxlen = maxlen;
            auto decided = [](const RunResult& r) {
                return r.verdict == Verdict::Accept || r.verdict == Verdict::Reject;
            };
            if (!decided(r1) || !decided(r2)) {
                v.status = EquivalenceVerdict::Status::Inconclusive;
                v.detail = "run undecided on " + render(words[i]) + ": " + verdict_name(r1.verdict) + " / " +
                           verdict_name(r2.verdict);
            } else if (r1.accepted() != r2.accepted() || (r1.accepted() && r1.output != r2.output)) {
                v.status = EquivalenceVerdict::Status::Counterexample;
            } else {
                continue;
            }
            v.word = words[i];
            if (r1.accepted()) v.first = r1.output;
            if (r2.accepted()) v.second = r2.output;
            std::lock_guard g(lock);
            if (i < worst) {
                worst = i;
                found[0] = std::move(v);
            }
        }
    };
    unsigned n = o.threads ? o.threads : std::max(1u, std::thread::hardware_concurrency());
    n = static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(words.size() / 64, 1)));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n; ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    if (worst < words.size()) return found[0];
    EquivalenceVerdict v;
    v.maxlen = maxlen;
    return v;
}

namespace {

using BigMatrix = std::vector<std::vector<mpz_class>>;

BigMatrix identity(std::size_t n)
{
    BigMatrix m(n, std::vector<mpz_class>(n, 0));
    for (std::size_t i = 0; i < n; ++i) m[i][i] = 1;
    return m;
}

BigMatrix times(const BigMatrix& x, const Matrix& y)
{
    std::size_t n = x.size();
    BigMatrix r(n, std::vector<mpz_class>(n, 0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k) {
            if (x[i][k] == 0) continue;
            for (std::size_t j = 0; j < n; ++j)
                if (y[k][j]) r[i][j] += x[i][k] * mpz_class(static_cast<unsigned long>(y[k][j]));
        }
    return r;
}

// Calls f(v, mu(v)) for every nonempty v with |v| <= maxlen.
template <class F>
void each_power(const NAutomaton& a, std::size_t maxlen, F f)
{
    std::vector<std::pair<Word, BigMatrix>> layer{{{}, identity(a.states.size())}};
    for (std::size_t l = 1; l <= maxlen; ++l) {
        std::vector<std::pair<Word, BigMatrix>> next;
        for (const auto& [w, m] : layer)
            for (const auto& s : a.input) {
                Word v = w;
                v.push_back(s);
                auto p = times(m, a.mu.at(s));
                f(v, p);
                next.emplace_back(std::move(v), std::move(p));
            }
        layer = std::move(next);
    }
}

}  // namespace

PatternReport brute_pattern_search(const NAutomaton& a, std::size_t maxlen)
{
    PatternReport r;
    const std::size_t n = a.states.size();
    each_power(a, maxlen, [&](const Word& v, const BigMatrix& m) {
        for (std::size_t q = 0; q < n; ++q) {
            if (m[q][q] >= 2) r.heavy.emplace_back(a.states[q], v);
            for (std::size_t p = 0; p < n; ++p)
                if (p != q && m[q][q] >= 1 && m[q][p] >= 1 && m[p][p] >= 1)
                    r.barbells.emplace_back(a.states[q], a.states[p], v);
        }
    });
    return r;
}

int brute_degree(const NAutomaton& a, std::size_t maxlen)
{
    const std::size_t n = a.states.size();
    std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0)), bar(n, std::vector<char>(n, 0));
    for (std::size_t q = 0; q < n; ++q) reach[q][q] = 1;
    each_power(a, maxlen, [&](const Word&, const BigMatrix& m) {
        for (std::size_t q = 0; q < n; ++q)
            for (std::size_t p = 0; p < n; ++p) {
                if (m[q][p] >= 1) reach[q][p] = 1;
                if (p != q && m[q][q] >= 1 && m[q][p] >= 1 && m[p][p] >= 1) bar[q][p] = 1;
            }
    });
    // Without heavy cycles barbells strictly descend, so n rounds of relaxation suffice.
    std::vector<int> best(n, 0);
    for (std::size_t round = 0; round <= n; ++round)
        for (std::size_t s = 0; s < n; ++s)
            for (std::size_t q = 0; q < n; ++q)
                for (std::size_t p = 0; p < n; ++p)
                    if (reach[s][q] && bar[q][p]) best[s] = std::max(best[s], std::min<int>(1 + best[p], n));
    return n ? *std::max_element(best.begin(), best.end()) : 0;
}

GrowthProbe probe_growth(const Machine& m, const std::function<Word(std::size_t)>& family, std::size_t from,
                         std::size_t to, const OracleOptions& o)
{
    GrowthProbe g;
    for (std::size_t l = from; l <= to; ++l) {
        auto r = run_machine(m, family(l), o.registry, o.run);
        if (!r.accepted()) throw ModelError("machine does not accept family member " + std::to_string(l));
        g.points.emplace_back(l, r.output.size());
    }
    auto lg = [](double x) { return std::log(std::max(x, 1.0)); };
    const auto& p = g.points;
    if (p.size() >= 2) {
        const auto& [l1, s1] = p[p.size() - 2];
        const auto& [l2, s2] = p[p.size() - 1];
        if (l1 > 0) g.slope = (lg(s2) - lg(s1)) / (lg(l2) - lg(l1));
    }
    if (p.size() >= 3) {
        double r1 = lg(p[p.size() - 2].second) - lg(p[p.size() - 3].second);
        double r2 = lg(p[p.size() - 1].second) - lg(p[p.size() - 2].second);
        g.exponential = r1 > 0.1 && std::abs(r2 - r1) <= 0.05 * r1;
    }
    return g;
}

GrowthProbe probe_growth(const Machine& m, std::size_t from, std::size_t to, const OracleOptions& o)
{
    const auto& in = input_of(m);
    if (in.empty()) throw ModelError("empty input alphabet");
    return probe_growth(m, [&](std::size_t l) { return Word(l, in.front()); }, from, to, o);
}

}  // namespace xducer
