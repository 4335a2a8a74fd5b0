#pragma once

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "minsurf/grid.hpp"
#include "minsurf/solvers.hpp"

namespace minsurf {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

constexpr char kGridMagic[] = "F64GRID\n";

inline std::vector<char> read_all_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  return bytes;
}

inline void write_all_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out) throw IoError("short write to " + path);
}

inline double load_le_f64(const char* p) {
  std::uint64_t bits = 0;
  for (int b = 7; b >= 0; --b) bits = (bits << 8) | std::uint8_t(p[b]);
  return std::bit_cast<double>(bits);
}

inline void store_le_f64(double v, std::string& out) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) out.push_back(char(std::uint8_t(bits >> (8 * b))));
}

} // namespace detail

/// Full-precision interchange format: "F64GRID\n", then "width height\n" in
/// ASCII, then row-major little-endian binary64 samples.
inline std::string encode_grid(const ImageGrid& u) {
  if (!u.all_finite()) throw IoError("grid contains non-finite values");
  std::string out = detail::kGridMagic;
  out += std::to_string(u.width()) + " " + std::to_string(u.height()) + "\n";
  out.reserve(out.size() + std::size_t(u.pixel_count()) * 8);
  for (double v : u.values()) detail::store_le_f64(v, out);
  return out;
}

inline ImageGrid decode_grid(const std::vector<char>& bytes, const std::string& origin) {
  const std::size_t magic_len = 8;
  if (bytes.size() < magic_len ||
      std::memcmp(bytes.data(), detail::kGridMagic, magic_len) != 0)
    throw IoError(origin + ": not a grid file (bad magic)");
  std::size_t pos = magic_len;
  const auto header_end = std::find(bytes.begin() + long(pos), bytes.end(), '\n');
  if (header_end == bytes.end()) throw IoError(origin + ": truncated header");
  std::istringstream header(std::string(bytes.begin() + long(pos), header_end));
  long w = 0, h = 0;
  if (!(header >> w >> h) || w < 2 || h < 2)
    throw IoError(origin + ": bad dimensions in header");
  std::string trailing;
  if (header >> trailing) throw IoError(origin + ": malformed header");
  pos = std::size_t(header_end - bytes.begin()) + 1;
  const std::size_t expected = std::size_t(w) * std::size_t(h) * 8;
  if (bytes.size() - pos != expected)
    throw IoError(origin + ": payload length mismatch");
  ImageGrid u(static_cast<int>(w), static_cast<int>(h));
  for (long k = 0; k < u.pixel_count(); ++k) {
    const double v = detail::load_le_f64(bytes.data() + pos + std::size_t(k) * 8);
    if (!std::isfinite(v)) throw IoError(origin + ": non-finite sample in payload");
    u.values()[k] = v;
  }
  return u;
}

inline void write_grid(const std::string& path, const ImageGrid& u) {
  detail::write_all_bytes(path, encode_grid(u));
}

inline ImageGrid read_grid(const std::string& path) {
  return decode_grid(detail::read_all_bytes(path), path);
}

namespace detail {

inline int pgm_next_value(const std::vector<char>& bytes, std::size_t& pos,
                          const std::string& origin) {
  // Skip whitespace and '#' comment lines between header tokens.
  while (pos < bytes.size()) {
    if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
      ++pos;
    } else if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
  long value = 0;
  bool any = false;
  while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
    value = value * 10 + (bytes[pos] - '0');
    if (value > std::numeric_limits<int>::max())
      throw IoError(origin + ": header value out of range");
    ++pos;
    any = true;
  }
  if (!any) throw IoError(origin + ": malformed header");
  return int(value);
}

} // namespace detail

/// Binary PGM (P5) ingest. Pixel byte b becomes the real value b exactly;
/// only maxval 255 is accepted.
inline ImageGrid read_pgm(const std::vector<char>& bytes, const std::string& origin) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
    throw IoError(origin + ": not a binary PGM (P5) file");
  std::size_t pos = 2;
  const int w = detail::pgm_next_value(bytes, pos, origin);
  const int h = detail::pgm_next_value(bytes, pos, origin);
  const int maxval = detail::pgm_next_value(bytes, pos, origin);
  if (maxval != 255)
    throw IoError(origin + ": PGM maxval must be 255, got " + std::to_string(maxval));
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos])))
    throw IoError(origin + ": malformed header");
  ++pos; // single whitespace byte separates header from payload
  if (w < 2 || h < 2) throw IoError(origin + ": image dimensions must be >= 2");
  if (bytes.size() - pos != std::size_t(w) * std::size_t(h))
    throw IoError(origin + ": payload length mismatch");
  ImageGrid u(w, h);
  for (long k = 0; k < u.pixel_count(); ++k)
    u.values()[k] = double(std::uint8_t(bytes[pos + std::size_t(k)]));
  return u;
}

/// 8-bit preview: clamp to [0,255], round half to even, write as P5.
inline void write_pgm_preview(const std::string& path, const ImageGrid& u) {
  std::string out = "P5\n" + std::to_string(u.width()) + " " +
                    std::to_string(u.height()) + "\n255\n";
  out.reserve(out.size() + std::size_t(u.pixel_count()));
  for (double v : u.values()) {
    const double clamped = std::min(255.0, std::max(0.0, v));
    out.push_back(char(std::uint8_t(std::nearbyint(clamped))));
  }
  detail::write_all_bytes(path, out);
}

/// Loads either format, sniffing the leading bytes.
inline ImageGrid load_image(const std::string& path) {
  const std::vector<char> bytes = detail::read_all_bytes(path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5')
    return read_pgm(bytes, path);
  return decode_grid(bytes, path);
}

/// FNV-1a over a grid's exact byte encoding; used to assert that solver
/// inputs are shared bit-for-bit.
inline std::uint64_t grid_hash(const ImageGrid& u) {
  const std::string bytes = encode_grid(u);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    hash ^= std::uint8_t(c);
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

/// Run report: method, config echo, convergence data, optional metrics.
/// JSON-structured so the benchmark reader can parse it back.
inline nlohmann::json report_to_json(const std::string& method,
                                     const SolverConfig& config,
                                     const SolveReport& report) {
  nlohmann::json j;
  j["method"] = method;
  j["config"] = {
      {"lambda", config.params.lambda}, {"alpha", config.params.alpha},
      {"tau", config.tau},              {"sigma_step", config.sigma_step},
      {"dt", config.effective_dt()},    {"rel_tol", config.stop.rel_tol},
      {"max_iter", config.stop.max_iter},
  };
  j["iterations"] = report.iterations;
  j["converged"] = report.converged;
  j["energy_trace"] = report.energy_trace;
  j["wall_time_seconds"] = report.wall_time_seconds;
  if (!report.warnings.empty()) j["warnings"] = report.warnings;
  return j;
}

inline void write_report(const std::string& path, const nlohmann::json& j) {
  detail::write_all_bytes(path, j.dump(2) + "\n");
}

} // namespace minsurf
