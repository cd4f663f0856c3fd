#pragma once

#include <compare>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace xducer {

using Sym = std::string;
using Word = std::vector<Sym>;

inline const Sym LEFT_END = "⊢";
inline const Sym RIGHT_END = "⊣";

struct Token {
    enum class Kind { Letter, Reg, Fun };
    Kind kind = Kind::Letter;
    std::string name;

    static Token letter(std::string s) { return {Kind::Letter, std::move(s)}; }
    static Token reg(std::string s) { return {Kind::Reg, std::move(s)}; }
    static Token fun(std::string s) { return {Kind::Fun, std::move(s)}; }

    bool is_letter() const { return kind == Kind::Letter; }
    bool is_reg() const { return kind == Kind::Reg; }
    bool is_fun() const { return kind == Kind::Fun; }

    auto operator<=>(const Token&) const = default;
    bool operator==(const Token&) const = default;
};

using Expr = std::vector<Token>;
using Substitution = std::map<std::string, Expr>;
using Valuation = std::map<std::string, Word>;

struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Expr letters(const Word& w);
// One token per UTF-8 code point; members of regs/funs become Reg/Fun tokens.
Expr parse_expr(const std::string& text, const std::set<std::string>& regs,
                const std::set<std::string>& funs = {});
std::string to_string(const Expr& e);
std::string to_string(const Word& w);
std::vector<std::string> code_points(const std::string& text);
Word word_of(const std::string& text);

Substitution identity_substitution(const std::vector<std::string>& regs);

// s1 o s2: registers of s2(x) replaced by their s1 images; letters and Fun tokens fixed.
Substitution compose(const Substitution& s1, const Substitution& s2);
Expr apply(const Substitution& s, const Expr& e);

// Fun tokens raise ModelError.
Word evaluate(const Expr& e, const Valuation& v);

std::size_t occurrences(const Expr& e, const std::string& reg);
std::map<std::string, std::size_t> register_counts(const Substitution& s);

std::string fresh_name(const std::string& base, const std::set<std::string>& used);

}  // namespace xducer
