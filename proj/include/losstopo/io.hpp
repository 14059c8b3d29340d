#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace losstopo::io {

// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);

// Parses the whole token as a double; throws ParseError on failure.
double parse_double(std::string_view token, std::size_t line);

// Writes through a sibling temp file and renames it over the target.
void write_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace losstopo::io
