#pragma once

#include <filesystem>
#include <string>

namespace kolmo::util {

/// Writes `content` to a temporary sibling of `path`, then renames it over
/// `path`, so readers never observe a partial file. Creates parent directories.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

}  // namespace kolmo::util
