#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace millibot {

// Shortest round-trip decimal form of v (std::to_chars). Used everywhere a
// float is serialized so that emitted files are byte-stable.
std::string format_double(double v);

std::vector<std::string_view> split(std::string_view line, char sep);

// Strict float/int parsers: the whole token must be consumed.
double parse_double(std::string_view token);     // throws ParseError
long long parse_int(std::string_view token);     // throws ParseError

std::string read_file(const std::string& path);                    // throws IoError
void write_file(const std::string& path, std::string_view body);   // throws IoError

}  // namespace millibot
