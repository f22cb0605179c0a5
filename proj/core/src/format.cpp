#include "ufkm/format.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>

#include "ufkm/error.hpp"

namespace ufkm {

std::string format_double(double value) {
    char buf[64];
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, value);
        if (std::strtod(buf, nullptr) == value) break;
    }
    std::string s(buf);
    if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
        s.find("inf") == std::string::npos && s.find("nan") == std::string::npos)
        s += ".0";
    return s;
}

double parse_double(const std::string& text) {
    if (text == "nan") return std::nan("");
    const char* begin = text.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0') throw IoError("not a real number: '" + text + "'");
    return v;
}

std::uint64_t parse_u64(const std::string& text) {
    const char* begin = text.c_str();
    char* end = nullptr;
    const unsigned long long v = std::strtoull(begin, &end, 10);
    if (end == begin || *end != '\0' || text.find('-') != std::string::npos)
        throw IoError("not an unsigned integer: '" + text + "'");
    return v;
}

std::size_t parse_size(const std::string& text) {
    return static_cast<std::size_t>(parse_u64(text));
}

bool parse_bool(const std::string& text) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw IoError("not a boolean (expected true/false/1/0): '" + text + "'");
}

}  // namespace ufkm
