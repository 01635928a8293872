#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace adamf {

/// Whole-file read; throws IoError when the file cannot be opened.
std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`, so readers
/// see either the old or the new content, never a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Logs a warning line to stderr.
void log_warning(std::string_view message);

}  // namespace adamf
