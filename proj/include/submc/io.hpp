#ifndef SUBMC_IO_HPP
#define SUBMC_IO_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace submc
{

std::uint64_t fnv1a(std::span<const std::byte> bytes, std::uint64_t seed = 0xcbf29ce484222325ull);
std::uint64_t fnv1a(std::string_view text);
std::string hex64(std::uint64_t value);

/// FNV-1a of the file contents as 16 hex digits.
std::string file_hash(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

} // namespace submc

#endif
