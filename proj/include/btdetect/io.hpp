#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace btdetect::io {

std::vector<std::string> read_lines(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

// Writes to a temporary sibling file and renames it into place, so readers
// never observe a partially written file.
void write_atomic(const std::filesystem::path& path, const std::string& content);

void ensure_parent_dir(const std::filesystem::path& path);

// Replaces characters that are awkward in filenames with '_'.
std::string sanitize_filename(const std::string& name);

}  // namespace btdetect::io
