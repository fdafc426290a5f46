#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace radiomap {

// Writes to a sibling temp file and renames it over the target.
void write_file_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_text_atomic(const std::filesystem::path& path, std::string_view text);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);

// 64-bit FNV-1a, rendered as 16 hex digits. Used for run-manifest input hashes.
std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t size, std::uint64_t seed = 0xcbf29ce484222325ull);
std::string hex64(std::uint64_t v);
std::string hash_file(const std::filesystem::path& path);

// Deterministic sub-seed derivation (splitmix64 over the mixed inputs).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

} // namespace radiomap
