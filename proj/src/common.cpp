#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <unistd.h>

#include "ddkit/error.hpp"
#include "ddkit/fnv.hpp"
#include "ddkit/io.hpp"
#include "ddkit/random.hpp"

namespace ddkit {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::validation: return "validation";
    case ErrorKind::io: return "io";
    case ErrorKind::missing_file: return "missing_file";
    case ErrorKind::checksum_mismatch: return "checksum_mismatch";
    case ErrorKind::shape_mismatch: return "shape_mismatch";
    case ErrorKind::normalization: return "normalization";
    case ErrorKind::format: return "format";
    case ErrorKind::conflict: return "conflict";
    case ErrorKind::numerical: return "numerical";
  }
  return "unknown";
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io:
    case ErrorKind::missing_file:
      return 2;
    case ErrorKind::numerical:
      return 3;
    default:
      return 1;
  }
}

std::string to_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw Error(ErrorKind::validation, "Rng::below: zero bound");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double m = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * m;
  has_spare_ = true;
  return u * m;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view key) {
  std::uint64_t h = kFnvOffset;
  for (int i = 0; i < 8; ++i) {
    h ^= (seed >> (8 * i)) & 0xffu;
    h *= kFnvPrime;
  }
  return fnv1a64(key, h);
}

}  // namespace ddkit

namespace ddkit::io {

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    if (!fs::exists(path))
      throw Error(ErrorKind::missing_file, "missing file: " + path.string());
    throw Error(ErrorKind::io, "cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_text(const fs::path& path) {
  auto bytes = read_bytes(path);
  return {bytes.begin(), bytes.end()};
}

namespace {

void write_raw_atomic(const fs::path& path, const char* data, std::size_t size) {
  const auto dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  std::error_code ec;
  if (!dir.empty() && !fs::exists(dir)) fs::create_directories(dir, ec);
  auto tmp = dir / ("." + path.filename().string() + ".tmp" + std::to_string(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
    out.write(data, static_cast<std::streamsize>(size));
    out.flush();
    if (!out) {
      fs::remove(tmp, ec);
      throw Error(ErrorKind::io, "short write to " + path.string());
    }
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorKind::io, "cannot rename into " + path.string());
  }
}

}  // namespace

void write_atomic(const fs::path& path, std::string_view contents) {
  write_raw_atomic(path, contents.data(), contents.size());
}

void write_atomic(const fs::path& path, const std::vector<std::uint8_t>& contents) {
  write_raw_atomic(path, reinterpret_cast<const char*>(contents.data()), contents.size());
}

std::string fmt9(double v) {
  if (v == 0.0) return "0";  // also folds -0
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw Error(ErrorKind::format, "CSV is missing column '" + std::string(name) + "'");
}

CsvTable parse_csv(std::string_view text, const std::string& origin) {
  CsvTable table;
  std::size_t pos = 0;
  bool first = true;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t p = 0;
    while (true) {
      auto c = line.find(',', p);
      cells.emplace_back(line.substr(p, c == std::string_view::npos ? line.npos : c - p));
      if (c == std::string_view::npos) break;
      p = c + 1;
    }
    if (first) {
      table.header = std::move(cells);
      first = false;
    } else {
      if (cells.size() != table.header.size())
        throw Error(ErrorKind::format, origin + ": row " + std::to_string(table.rows.size() + 1) +
                                           " has " + std::to_string(cells.size()) +
                                           " fields, expected " +
                                           std::to_string(table.header.size()));
      table.rows.push_back(std::move(cells));
    }
  }
  if (first) throw Error(ErrorKind::format, origin + ": empty CSV");
  return table;
}

CsvTable read_csv(const fs::path& path) { return parse_csv(read_text(path), path.string()); }

std::string to_csv(const CsvTable& table) {
  std::string out;
  auto emit = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  emit(table.header);
  for (const auto& r : table.rows) emit(r);
  return out;
}

double parse_double(std::string_view s, std::string_view what) {
  std::string tmp(s);
  char* end = nullptr;
  errno = 0;
  double v = std::strtod(tmp.c_str(), &end);
  if (tmp.empty() || end != tmp.c_str() + tmp.size() || errno == ERANGE)
    throw Error(ErrorKind::format, "cannot parse " + std::string(what) + " from '" + tmp + "'");
  return v;
}

long long parse_int(std::string_view s, std::string_view what) {
  std::string tmp(s);
  char* end = nullptr;
  errno = 0;
  long long v = std::strtoll(tmp.c_str(), &end, 10);
  if (tmp.empty() || end != tmp.c_str() + tmp.size() || errno == ERANGE)
    throw Error(ErrorKind::format, "cannot parse " + std::string(what) + " from '" + tmp + "'");
  return v;
}

namespace {

template <typename T>
std::vector<std::uint8_t> encode_le(const std::vector<T>& values) {
  static_assert(sizeof(T) == 4);
  std::vector<std::uint8_t> out(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t u;
    std::memcpy(&u, &values[i], 4);
    out[4 * i + 0] = static_cast<std::uint8_t>(u);
    out[4 * i + 1] = static_cast<std::uint8_t>(u >> 8);
    out[4 * i + 2] = static_cast<std::uint8_t>(u >> 16);
    out[4 * i + 3] = static_cast<std::uint8_t>(u >> 24);
  }
  return out;
}

template <typename T>
std::vector<T> decode_le(const std::vector<std::uint8_t>& bytes) {
  static_assert(sizeof(T) == 4);
  if (bytes.size() % 4 != 0)
    throw Error(ErrorKind::shape_mismatch, "byte length is not a multiple of 4");
  std::vector<T> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t u = std::uint32_t(bytes[4 * i]) | std::uint32_t(bytes[4 * i + 1]) << 8 |
                      std::uint32_t(bytes[4 * i + 2]) << 16 | std::uint32_t(bytes[4 * i + 3]) << 24;
    std::memcpy(&out[i], &u, 4);
  }
  return out;
}

}  // namespace

std::vector<std::uint8_t> encode_f32(const std::vector<float>& v) { return encode_le(v); }
std::vector<float> decode_f32(const std::vector<std::uint8_t>& b) { return decode_le<float>(b); }
std::vector<std::uint8_t> encode_u32(const std::vector<std::uint32_t>& v) { return encode_le(v); }
std::vector<std::uint32_t> decode_u32(const std::vector<std::uint8_t>& b) {
  return decode_le<std::uint32_t>(b);
}

}  // namespace ddkit::io
