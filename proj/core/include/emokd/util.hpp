#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace emokd {

// FNV-1a over raw bytes; used for content digests in manifests and for
// run ids. Not cryptographic.
uint64_t fnv1a64(std::span<const unsigned char> bytes);
uint64_t fnv1a64(const std::string& s);
std::string to_hex(uint64_t v);

// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);
double parse_double(const std::string& s, std::size_t line_for_error);

std::string read_file(const std::filesystem::path& path);
std::vector<std::string> read_lines(const std::filesystem::path& path);

// write-temp-then-rename, so readers never observe a partial file
void atomic_write_file(const std::filesystem::path& path,
                       const std::string& content);

uint64_t digest_file(const std::filesystem::path& path);
uint64_t digest_doubles(std::span<const double> values);

std::string trim(const std::string& s);
std::string to_lower(std::string s);
std::vector<std::string> split_ws(const std::string& s);

}  // namespace emokd
