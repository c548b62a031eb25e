#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace locport {

/// Shortest decimal text that parses back to the same double. Infinities are
/// written as "inf" / "-inf".
std::string format_double(double value);

/// Six significant digits, for human-facing output.
std::string format_sig6(double value);

/// Strict parse of a whole field; accepts "inf", "-inf", "+inf".
std::optional<double> parse_double(std::string_view text);

} // namespace locport
