#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace finkg::io {

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`, so readers
/// never observe a partially written artifact.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Splits on '\n', dropping a trailing empty line.
std::vector<std::string> split_lines(std::string_view text);

}  // namespace finkg::io
