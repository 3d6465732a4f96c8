#include "chainforge/command.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <unordered_set>

namespace chainforge {
namespace {

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v';
}

bool is_ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

// Recursive-descent cursor over one command line. Each method either consumes
// its production and returns a value, or returns nullopt/false leaving the
// caller to report a fault; no partial state escapes.
class Cursor {
public:
    explicit Cursor(std::string_view text) : text_(text) {}

    bool done() const { return pos_ >= text_.size(); }
    char peek() const { return done() ? '\0' : text_[pos_]; }

    void skip_space() {
        while (!done() && is_space(text_[pos_])) ++pos_;
    }

    bool accept(char c) {
        if (peek() != c) return false;
        ++pos_;
        return true;
    }

    std::optional<std::string> identifier() {
        if (done() || !is_ident_start(peek())) return std::nullopt;
        const std::size_t start = pos_;
        while (!done() && is_ident_char(peek())) ++pos_;
        return std::string(text_.substr(start, pos_ - start));
    }

    std::optional<Literal> literal() {
        if (peek() == '"') return quoted();
        return numeral();
    }

private:
    std::optional<Literal> quoted() {
        ++pos_;  // opening quote
        std::string out;
        while (!done()) {
            const char c = text_[pos_++];
            if (c == '"') return Literal::string(std::move(out));
            if (c == '\\' && !done()) {
                const char next = text_[pos_];
                if (next == '"' || next == '\\') {
                    out.push_back(next);
                    ++pos_;
                    continue;
                }
            }
            out.push_back(c);
        }
        return std::nullopt;  // unterminated
    }

    std::optional<Literal> numeral() {
        const std::size_t start = pos_;
        if (peek() == '-') ++pos_;
        while (!done() && (is_digit(peek()) || peek() == '.')) ++pos_;
        const auto text = text_.substr(start, pos_ - start);
        if (!is_decimal_numeral(text)) return std::nullopt;
        return Literal::number(std::string(text));
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

std::optional<FunctionCall> parse_strict(std::string_view line) {
    Cursor cur(line);
    cur.skip_space();
    auto name = cur.identifier();
    if (!name) return std::nullopt;
    cur.skip_space();
    if (!cur.accept('(')) return std::nullopt;

    FunctionCall call{std::move(*name), {}};
    std::unordered_set<std::string> seen;
    cur.skip_space();
    if (!cur.accept(')')) {
        for (;;) {
            cur.skip_space();
            auto keyword = cur.identifier();
            if (!keyword) return std::nullopt;
            cur.skip_space();
            if (!cur.accept('=')) return std::nullopt;
            cur.skip_space();
            auto value = cur.literal();
            if (!value) return std::nullopt;
            if (!seen.insert(*keyword).second) return std::nullopt;
            call.args.push_back({std::move(*keyword), std::move(*value)});
            cur.skip_space();
            if (cur.accept(')')) break;
            if (!cur.accept(',')) return std::nullopt;
        }
    }
    cur.skip_space();
    if (!cur.done()) return std::nullopt;
    return call;
}

}  // namespace

const Literal* FunctionCall::find(std::string_view keyword) const {
    auto it = std::find_if(args.begin(), args.end(),
                           [&](const Argument& a) { return a.keyword == keyword; });
    return it == args.end() ? nullptr : &it->value;
}

bool is_identifier(std::string_view s) {
    if (s.empty() || !is_ident_start(s.front())) return false;
    return std::all_of(s.begin(), s.end(), is_ident_char);
}

bool is_valid(const FunctionCall& call) {
    if (!is_identifier(call.name)) return false;
    std::unordered_set<std::string_view> seen;
    for (const auto& arg : call.args) {
        if (!is_identifier(arg.keyword) || !seen.insert(arg.keyword).second) return false;
        if (arg.value.kind == LiteralKind::Number) {
            if (!is_decimal_numeral(arg.value.text)) return false;
        } else if (arg.value.text.find_first_of("\r\n") != std::string::npos) {
            return false;
        }
    }
    return true;
}

bool is_decimal_numeral(std::string_view s) {
    if (!s.empty() && s.front() == '-') s.remove_prefix(1);
    const auto dot = s.find('.');
    const auto int_part = s.substr(0, dot);
    if (int_part.empty() || !std::all_of(int_part.begin(), int_part.end(), is_digit)) return false;
    if (dot == std::string_view::npos) return true;
    const auto frac = s.substr(dot + 1);
    return !frac.empty() && std::all_of(frac.begin(), frac.end(), is_digit);
}

std::string_view command_line(std::string_view text) {
    while (!text.empty()) {
        const auto nl = text.find('\n');
        const auto line = trim(text.substr(0, nl));
        if (!line.empty()) return line;
        if (nl == std::string_view::npos) break;
        text.remove_prefix(nl + 1);
    }
    return {};
}

ParseOutcome parse_call(std::string_view text) {
    const auto line = command_line(text);
    if (auto call = parse_strict(line)) return std::move(*call);
    return SyntaxFault{std::string(line)};
}

std::string render_error(const SyntaxFault& fault) {
    return "Error: syntax error in command " + fault.raw + ". Please try again.";
}

std::string render_call(const FunctionCall& call) {
    std::string out = call.name;
    out.push_back('(');
    for (std::size_t i = 0; i < call.args.size(); ++i) {
        const auto& arg = call.args[i];
        if (i > 0) out += ", ";
        out += arg.keyword;
        out.push_back('=');
        if (arg.value.kind == LiteralKind::Number) {
            out += arg.value.text;
            continue;
        }
        out.push_back('"');
        for (char c : arg.value.text) {
            if (c == '"' || c == '\\') out.push_back('\\');
            out.push_back(c);
        }
        out.push_back('"');
    }
    out.push_back(')');
    return out;
}

}  // namespace chainforge
