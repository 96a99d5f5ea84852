#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ddkit::io {

namespace fs = std::filesystem;

std::vector<std::uint8_t> read_bytes(const fs::path& path);
std::string read_text(const fs::path& path);

// Writes to a temporary sibling and renames it over `path`, so readers never
// observe a partially written file.
void write_atomic(const fs::path& path, std::string_view contents);
void write_atomic(const fs::path& path, const std::vector<std::uint8_t>& contents);

// Shortest round-trippable-enough rendering used for every numeric output.
std::string fmt9(double v);

// Minimal CSV: comma separated, no quoting, LF or CRLF line endings.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;  // throws format error
};

CsvTable read_csv(const fs::path& path);
CsvTable parse_csv(std::string_view text, const std::string& origin);
std::string to_csv(const CsvTable& table);

double parse_double(std::string_view s, std::string_view what);
long long parse_int(std::string_view s, std::string_view what);

// Little-endian f32 / u32 buffers.
std::vector<std::uint8_t> encode_f32(const std::vector<float>& values);
std::vector<float> decode_f32(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_u32(const std::vector<std::uint32_t>& values);
std::vector<std::uint32_t> decode_u32(const std::vector<std::uint8_t>& bytes);

}  // namespace ddkit::io
