#pragma once

#include <charconv>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace trafficproc {

std::vector<std::string> split(std::string_view line, char sep);
std::string_view trim(std::string_view s);

std::optional<long long> parse_ll(std::string_view s);
std::optional<double> parse_double(std::string_view s);

// "%.6f"-style fixed formatting without locale surprises.
std::string format_fixed(double v, int decimals);

}  // namespace trafficproc
