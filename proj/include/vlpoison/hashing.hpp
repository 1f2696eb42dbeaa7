#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace vlpoison {

std::string sha256_hex(std::string_view bytes);
std::string sha256_hex(std::span<const unsigned char> bytes);
std::string sha256_file(const std::filesystem::path& path);

// Whole-file helpers shared by the dataset and CLI code.
std::string read_file(const std::filesystem::path& path);
// Writes through a temporary file and renames, so readers never see a
// partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace vlpoison
