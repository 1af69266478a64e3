#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace synsem {

/// Shortest round-trip decimal form; "nan" for NaN.
std::string format_double(double v);

/// Splits one unquoted CSV line on commas; trailing '\r' is dropped.
std::vector<std::string> split_csv_line(std::string_view line);

/// Parses a decimal or "nan"; throws ValidationError naming `where`.
double parse_double(std::string_view text, const std::string& where);
long long parse_int(std::string_view text, const std::string& where);

}  // namespace synsem
