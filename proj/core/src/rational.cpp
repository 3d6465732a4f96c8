#include "chainforge/rational.hpp"

#include "chainforge/command.hpp"

#include <algorithm>
#include <cctype>

namespace chainforge {
namespace {

using boost::multiprecision::cpp_int;

bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

// cpp_int reads a leading 0 as an octal prefix, so feed it decimal digits only.
cpp_int decimal(std::string_view digits) {
    const auto first = digits.find_first_not_of('0');
    return first == std::string_view::npos ? cpp_int(0) : cpp_int{std::string(digits.substr(first))};
}

std::optional<cpp_int> parse_integer(std::string_view s) {
    bool negative = false;
    if (!s.empty() && s.front() == '-') {
        negative = true;
        s.remove_prefix(1);
    }
    if (!all_digits(s)) return std::nullopt;
    const cpp_int v = decimal(s);
    return negative ? cpp_int(-v) : v;
}

}  // namespace

std::optional<Rational> parse_rational(std::string_view text) {
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);

    if (const auto slash = text.find('/'); slash != std::string_view::npos) {
        auto num = parse_integer(text.substr(0, slash));
        auto den = parse_integer(text.substr(slash + 1));
        if (!num || !den || *den == 0) return std::nullopt;
        return Rational(*num, *den);
    }
    if (!is_decimal_numeral(text)) return std::nullopt;

    bool negative = false;
    if (text.front() == '-') {
        negative = true;
        text.remove_prefix(1);
    }
    const auto dot = text.find('.');
    std::string digits(text.substr(0, dot));
    cpp_int scale = 1;
    if (dot != std::string_view::npos) {
        const auto frac = text.substr(dot + 1);
        digits += frac;
        for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
    }
    Rational value(decimal(digits), scale);
    return negative ? Rational(-value) : value;
}

std::string format_rational(const Rational& value) {
    const cpp_int num = boost::multiprecision::numerator(value);
    const cpp_int den = boost::multiprecision::denominator(value);
    if (den == 1) return num.str();

    // Terminating iff den = 2^a * 5^b; then den divides 10^max(a,b).
    cpp_int rest = den;
    unsigned twos = 0, fives = 0;
    while (rest % 2 == 0) { rest /= 2; ++twos; }
    while (rest % 5 == 0) { rest /= 5; ++fives; }
    if (rest != 1) return num.str() + "/" + den.str();

    const unsigned places = std::max(twos, fives);
    cpp_int scale = 1;
    for (unsigned i = 0; i < places; ++i) scale *= 10;
    const bool negative = num < 0;
    const cpp_int scaled = (negative ? cpp_int(-num) : num) * (scale / den);
    std::string digits = scaled.str();
    if (digits.size() <= places) digits.insert(0, places - digits.size() + 1, '0');
    std::string out = digits.substr(0, digits.size() - places) + "." + digits.substr(digits.size() - places);
    return negative ? "-" + out : out;
}

}  // namespace chainforge
