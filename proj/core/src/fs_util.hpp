#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace focal::detail {

// Writes to `<path>.tmp` and renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

// Shortest representation that parses back to the identical double.
std::string format_double(double value);

}  // namespace focal::detail
