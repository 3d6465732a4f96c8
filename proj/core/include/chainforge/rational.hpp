#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <optional>
#include <string>
#include <string_view>

namespace chainforge {

using Rational = boost::multiprecision::cpp_rational;

// Accepts "42", "-3.75", "1/3", "-7/2". Returns nullopt on anything else,
// including a zero denominator.
std::optional<Rational> parse_rational(std::string_view text);

// Exact rendering: terminating decimals print as decimals ("0.2", "-12.5",
// "42"); anything else prints as a reduced fraction ("1/3").
std::string format_rational(const Rational& value);

}  // namespace chainforge
