#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mmsc {

std::string read_text_file(const std::filesystem::path& path);
std::vector<uint8_t> read_binary_file(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, std::string_view content);
void write_binary_file(const std::filesystem::path& path, const std::vector<uint8_t>& bytes);

// Write to a temp file in the same directory, then rename over the target.
// Concurrent writers of the same key end up last-writer-wins with no torn reads.
void atomic_write_file(const std::filesystem::path& path, std::string_view content);

} // namespace mmsc
