#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

// Single-line function-call command language spoken by the assistant:
//
//   Name(k1="v1", k2=42, ...)
//
// Keyword-only arguments; values are double-quoted strings (with
// escapes, backslash-quote and double backslash) or bare decimal numerals.
namespace chainforge {

enum class LiteralKind { String, Number };

struct Literal {
    LiteralKind kind = LiteralKind::String;
    // Unescaped string contents, or the numeral exactly as written.
    std::string text;

    static Literal string(std::string s) { return {LiteralKind::String, std::move(s)}; }
    static Literal number(std::string s) { return {LiteralKind::Number, std::move(s)}; }

    friend bool operator==(const Literal&, const Literal&) = default;
};

struct Argument {
    std::string keyword;
    Literal value;

    friend bool operator==(const Argument&, const Argument&) = default;
};

struct FunctionCall {
    std::string name;
    std::vector<Argument> args;

    // nullptr when the keyword is absent.
    const Literal* find(std::string_view keyword) const;

    friend bool operator==(const FunctionCall&, const FunctionCall&) = default;
};

struct SyntaxFault {
    std::string raw;

    friend bool operator==(const SyntaxFault&, const SyntaxFault&) = default;
};

using ParseOutcome = std::variant<FunctionCall, SyntaxFault>;

bool is_identifier(std::string_view s);
// Identifier name and keywords, unique keywords, well-formed numerals, and
// no line breaks inside string values (the language is line-oriented).
bool is_valid(const FunctionCall& call);
bool is_decimal_numeral(std::string_view s);

// First non-empty line of an assistant message, surrounding whitespace removed.
std::string_view command_line(std::string_view text);

// Total: every input yields a call or a fault carrying command_line(text).
ParseOutcome parse_call(std::string_view text);

std::string render_error(const SyntaxFault& fault);

// Canonical text; parse_call(render_call(c)) == c for every valid call.
std::string render_call(const FunctionCall& call);

}  // namespace chainforge
