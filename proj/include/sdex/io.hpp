#pragma once

#include <filesystem>
#include <string>

namespace sdex {

// Creates the directory (and parents) or throws IoError naming it.
void ensure_directory(const std::filesystem::path& dir);

// Writes the whole file at once; IoError names the path on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace sdex
