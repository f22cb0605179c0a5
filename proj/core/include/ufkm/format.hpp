#pragma once

#include <string>

namespace ufkm {

/// Shortest decimal string that parses back to exactly the same double,
/// always carrying a '.' or exponent so integral values read as reals
/// ("100" -> "100.0"). Used wherever doubles round-trip through text.
std::string format_double(double value);

/// strtod with full-string validation; throws IoError on trailing garbage.
double parse_double(const std::string& text);

std::size_t parse_size(const std::string& text);
std::uint64_t parse_u64(const std::string& text);
bool parse_bool(const std::string& text);

}  // namespace ufkm
