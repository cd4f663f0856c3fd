#include "xducer/mt2sst.hpp"

#include <deque>

namespace xducer {

Derivation crossing_fixpoint(const MarbleTransducer& t, const std::map<std::string, MaybeState>& f, const Sym& a,
                             bool at_end)
{
    using K = MarbleAction::Kind;
    using Entry = std::pair<std::string, std::optional<std::string>>;
    std::vector<std::optional<std::string>> modes{std::nullopt};
    for (const auto& c : t.colors) modes.push_back(c);

    Derivation d;
    for (const auto& q0 : t.states)
        for (const auto& c0 : modes) {
            // The unfolding is deterministic; a repeated (state, colour) pair means it never exits.
            Entry cur{q0, c0};
            std::set<Entry> seen;
            DerivationEntry e;
            bool done = false;
            while (!done) {
                if (!seen.insert(cur).second) break;
                const auto& [q, c] = cur;
                if (at_end && !c && t.finals.count(q)) {
                    e.result = q;
                    done = true;
                    break;
                }
                auto it = t.delta.find({q, a, c});
                if (it == t.delta.end()) break;
                const auto& edge = it->second;
                if (!edge.output.empty()) e.tokens.push_back({false, edge.output, {}});
                switch (edge.action.kind) {
                case K::Right:
                    if (c || at_end) {
                        done = true;
                        e.tokens.clear();
                        break;
                    }
                    e.result = edge.target;
                    done = true;
                    break;
                case K::Left: {
                    auto n = f.find(edge.target);
                    if (n == f.end() || !n->second) {
                        done = true;
                        break;
                    }
                    e.tokens.push_back({true, {}, edge.target});
                    cur = {*n->second, c};
                    break;
                }
                case K::Lift:
                    if (!c) {
                        done = true;
                        break;
                    }
                    cur = {edge.target, std::nullopt};
                    break;
                case K::Drop:
                    if (c) {
                        done = true;
                        break;
                    }
                    cur = {edge.target, edge.action.color};
                    break;
                }
            }
            if (!e.result) e.tokens.clear();
            d[{q0, c0}] = std::move(e);
        }
    return d;
}

namespace {

std::string show(const MaybeState& s) { return s ? *s : "⊥"; }

std::string state_name(const CrossingState& c)
{
    std::string n = show(c.first) + "|";
    bool sep = false;
    for (const auto& [q, r] : c.next) {
        n += (sep ? "," : "") + show(r);
        sep = true;
    }
    return n;
}

}  // namespace

SST marble_to_sst(const MarbleTransducer& t, std::size_t state_cap)
{
    auto problems = validate(t);
    if (!problems.empty()) throw ModelError("invalid marble transducer: " + problems.front());

    SST m;
    m.input = t.input;
    m.output = t.output;
    std::set<std::string> used(t.states.begin(), t.states.end());
    const std::string first = fresh_name("first", used);
    used.insert(first);
    std::map<std::string, std::string> nreg;
    m.registers.push_back(first);
    for (const auto& q : t.states) {
        nreg[q] = fresh_name("next." + q, used);
        used.insert(nreg[q]);
        m.registers.push_back(nreg[q]);
    }
    auto transcribe = [&](const std::vector<DerivationToken>& ts) {
        Expr e;
        for (const auto& tok : ts) {
            if (tok.call) e.push_back(Token::reg(nreg.at(tok.state)));
            else
                for (const auto& b : tok.word) e.push_back(Token::letter(b));
        }
        return e;
    };

    std::map<std::string, MaybeState> none;
    for (const auto& q : t.states) none[q] = std::nullopt;
    auto d0 = crossing_fixpoint(t, none, LEFT_END);
    CrossingState c0;
    const auto& fe = d0.at({t.initial, std::nullopt});
    c0.first = fe.result;
    m.init[first] = evaluate(transcribe(fe.tokens), {});
    for (const auto& q : t.states) {
        const auto& e = d0.at({q, std::nullopt});
        c0.next[q] = e.result;
        m.init[nreg.at(q)] = evaluate(transcribe(e.tokens), {});
    }

    std::map<CrossingState, std::string> names;
    std::deque<CrossingState> queue;
    auto name_of = [&](const CrossingState& c) {
        auto it = names.find(c);
        if (it != names.end()) return it->second;
        if (names.size() >= state_cap) throw ModelError("crossing-state construction exceeds the state cap");
        auto n = state_name(c);
        names[c] = n;
        m.states.push_back(n);
        queue.push_back(c);
        return n;
    };
    m.initial = name_of(c0);
    while (!queue.empty()) {
        CrossingState c = queue.front();
        queue.pop_front();
        const std::string from = names.at(c);
        if (!c.first) continue;
        auto fin = crossing_fixpoint(t, c.next, RIGHT_END, true).at({*c.first, std::nullopt});
        if (fin.result) {
            Expr out{Token::reg(first)};
            auto tail = transcribe(fin.tokens);
            out.insert(out.end(), tail.begin(), tail.end());
            m.out[from] = out;
        }
        for (const auto& a : t.input) {
            auto d = crossing_fixpoint(t, c.next, a);
            const auto& fe2 = d.at({*c.first, std::nullopt});
            if (!fe2.result) continue;
            CrossingState n;
            n.first = fe2.result;
            Substitution u;
            u[first] = {Token::reg(first)};
            auto tail = transcribe(fe2.tokens);
            u[first].insert(u[first].end(), tail.begin(), tail.end());
            for (const auto& q : t.states) {
                const auto& e = d.at({q, std::nullopt});
                n.next[q] = e.result;
                u[nreg.at(q)] = transcribe(e.tokens);
            }
            m.delta[{from, a}] = {name_of(n), u};
        }
    }
    return m;
}

}  // namespace xducer
