#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace plugcast {

// Shortest decimal form that round-trips the exact double. All numeric
// file output funnels through this so rewrites are byte-stable.
std::string format_double(double x);
void append_double(std::string& out, double x);

std::optional<double> parse_double(std::string_view text);
std::optional<std::int64_t> parse_int(std::string_view text);

// Splits on the delimiter without collapsing empty fields.
std::vector<std::string_view> split(std::string_view line, char delim);

std::string_view trim(std::string_view s);

}  // namespace plugcast
