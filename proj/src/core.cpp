#include "xducer/core.hpp"

namespace xducer {

Expr letters(const Word& w)
{
    Expr e;
    e.reserve(w.size());
    for (const auto& s : w) e.push_back(Token::letter(s));
    return e;
}

std::vector<std::string> code_points(const std::string& text)
{
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        unsigned char c = static_cast<unsigned char>(text[i]);
        std::size_t len = 1;
        if (c >= 0xF0) len = 4;
        else if (c >= 0xE0) len = 3;
        else if (c >= 0xC0) len = 2;
        out.push_back(text.substr(i, len));
        i += len;
    }
    return out;
}

Word word_of(const std::string& text) { return code_points(text); }

Expr parse_expr(const std::string& text, const std::set<std::string>& regs,
                const std::set<std::string>& funs)
{
    Expr e;
    for (auto& cp : code_points(text)) {
        if (regs.count(cp)) e.push_back(Token::reg(cp));
        else if (funs.count(cp)) e.push_back(Token::fun(cp));
        else e.push_back(Token::letter(cp));
    }
    return e;
}

std::string to_string(const Expr& e)
{
    std::string s;
    for (const auto& t : e) {
        switch (t.kind) {
        case Token::Kind::Letter: s += t.name; break;
        case Token::Kind::Reg: s += "{" + t.name + "}"; break;
        case Token::Kind::Fun: s += "{@" + t.name + "}"; break;
        }
    }
    return s;
}

std::string to_string(const Word& w)
{
    std::string s;
    for (const auto& x : w) s += x;
    return s;
}

Substitution identity_substitution(const std::vector<std::string>& regs)
{
    Substitution s;
    for (const auto& r : regs) s[r] = {Token::reg(r)};
    return s;
}

Expr apply(const Substitution& s, const Expr& e)
{
    Expr out;
    for (const auto& t : e) {
        if (!t.is_reg()) {
            out.push_back(t);
            continue;
        }
        auto it = s.find(t.name);
        if (it == s.end()) throw ModelError("substitution undefined on register " + t.name);
        out.insert(out.end(), it->second.begin(), it->second.end());
    }
    return out;
}

Substitution compose(const Substitution& s1, const Substitution& s2)
{
    if (s1.size() != s2.size())
        throw ModelError("register mismatch in composition");
    for (auto a = s1.begin(), b = s2.begin(); a != s1.end(); ++a, ++b)
        if (a->first != b->first) throw ModelError("register mismatch in composition");
    Substitution r;
    for (const auto& [x, e] : s2) r[x] = apply(s1, e);
    return r;
}

Word evaluate(const Expr& e, const Valuation& v)
{
    Word out;
    for (const auto& t : e) {
        switch (t.kind) {
        case Token::Kind::Letter: out.push_back(t.name); break;
        case Token::Kind::Reg: {
            auto it = v.find(t.name);
            if (it == v.end()) throw ModelError("valuation undefined on register " + t.name);
            out.insert(out.end(), it->second.begin(), it->second.end());
            break;
        }
        case Token::Kind::Fun: throw ModelError("unresolved function token " + t.name);
        }
    }
    return out;
}

std::size_t occurrences(const Expr& e, const std::string& reg)
{
    std::size_t n = 0;
    for (const auto& t : e)
        if (t.is_reg() && t.name == reg) ++n;
    return n;
}

std::map<std::string, std::size_t> register_counts(const Substitution& s)
{
    std::map<std::string, std::size_t> c;
    for (const auto& [x, e] : s)
        for (const auto& t : e)
            if (t.is_reg()) ++c[t.name];
    return c;
}

std::string fresh_name(const std::string& base, const std::set<std::string>& used)
{
    if (!used.count(base)) return base;
    for (int i = 1;; ++i) {
        auto cand = base + "'" + std::to_string(i);
        if (!used.count(cand)) return cand;
    }
}

}  // namespace xducer
