#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace hact {

/// Whole-file read; throws DataError if the file cannot be opened.
std::string read_text_file(const std::filesystem::path& path);
/// Writes bytes verbatim (binary mode), creating parent directories.
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace hact
