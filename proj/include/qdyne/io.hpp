#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace qdyne::io {

// shortest round-trip decimal form (std::to_chars), locale-free
std::string format_double(double v);
void append_double(std::string& out, double v);

// strict parsers: entire token must be consumed
double parse_double(std::string_view token, const std::string& context);
std::uint64_t parse_u64(std::string_view token, const std::string& context);

// split one CSV line on commas (no quoting; none of our formats need it)
std::vector<std::string_view> split_csv_line(std::string_view line);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

// little-endian scalar append / read (validated at startup on the host)
void put_u32(std::string& buf, std::uint32_t v);
void put_u64(std::string& buf, std::uint64_t v);
void put_f64(std::string& buf, double v);
std::uint32_t get_u32(const char* p);
std::uint64_t get_u64(const char* p);
double get_f64(const char* p);

std::uint64_t fnv1a64(std::string_view data);

}  // namespace qdyne::io
