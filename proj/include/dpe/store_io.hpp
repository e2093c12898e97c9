#pragma once

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "dpe/common.hpp"
#include "dpe/feature_store.hpp"

namespace dpe {

// DPEF feature-store file, little-endian, no compression:
//
//   magic        "DPEF"                     4 bytes
//   version      u32 = 1
//   flags        u32, bit 0 = has_groups
//   n_samples    u64
//   dim          u32
//   K            u32
//   G            u32 (0 when has_groups is unset)
//   features     f32, row-major, n_samples*dim
//   class_labels i32 * n_samples
//   group_labels i32 * n_samples, only when has_groups
//
// The binary format is canonical: save followed by load is the identity on
// every field. CSV (below) exists for interoperability and re-loads values
// exactly because features are f32-precision and printed with 9 significant
// digits.

enum class StoreFormat { binary, csv };

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_f32(std::string& out, float v) {
  put_u32(out, std::bit_cast<std::uint32_t>(v));
}
inline void put_i32(std::string& out, std::int32_t v) {
  put_u32(out, static_cast<std::uint32_t>(v));
}
inline void put_f64(std::string& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

/// Cursor over a loaded byte buffer; every read checks bounds and reports
/// the byte offset of the failure.
class ByteReader {
 public:
  ByteReader(const std::string& buf, std::string file)
      : buf_(buf), file_(std::move(file)) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return buf_.size() - pos_; }

  void need(std::size_t n, const char* what) {
    if (remaining() < n)
      fail(file_ + ": truncated file, need " + std::to_string(n) +
           " bytes for " + what + " at byte offset " + std::to_string(pos_) +
           " but only " + std::to_string(remaining()) + " remain");
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf_[pos_ + static_cast<std::size_t>(i)])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + static_cast<std::size_t>(i)])) << (8 * i);
    pos_ += 8;
    return v;
  }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
  std::int32_t i32(const char* what) {
    return static_cast<std::int32_t>(u32(what));
  }
  void raw(char* dst, std::size_t n, const char* what) {
    need(n, what);
    std::memcpy(dst, buf_.data() + pos_, n);
    pos_ += n;
  }
  const std::string& file() const { return file_; }

 private:
  const std::string& buf_;
  std::string file_;
  std::size_t pos_ = 0;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path + ": cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (!in.good() && !in.eof()) fail(path + ": read failure");
  return std::move(ss).str();
}

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(path + ": cannot open for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out.good()) fail(path + ": write failure");
}

inline std::string format_f32(float v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
  return buf;
}

}  // namespace detail

inline std::string encode_store_binary(const FeatureStore& s) {
  std::string out;
  out.reserve(32 + s.n_samples * (s.dim * 4 + 8));
  out += "DPEF";
  detail::put_u32(out, 1);
  detail::put_u32(out, s.has_groups() ? 1u : 0u);
  detail::put_u64(out, s.n_samples);
  detail::put_u32(out, static_cast<std::uint32_t>(s.dim));
  detail::put_u32(out, static_cast<std::uint32_t>(s.class_count));
  detail::put_u32(out, static_cast<std::uint32_t>(s.group_count));
  for (double v : s.features)
    detail::put_f32(out, static_cast<float>(v));
  for (std::int32_t y : s.class_labels) detail::put_i32(out, y);
  if (s.has_groups())
    for (std::int32_t g : s.group_labels) detail::put_i32(out, g);
  return out;
}

inline FeatureStore decode_store_binary(const std::string& bytes,
                                        const std::string& origin) {
  detail::ByteReader r(bytes, origin);
  char magic[4];
  r.raw(magic, 4, "magic");
  if (std::memcmp(magic, "DPEF", 4) != 0)
    fail(origin + ": bad magic at byte offset 0, expected \"DPEF\"");
  const std::uint32_t version = r.u32("version");
  if (version != 1)
    fail(origin + ": unsupported version " + std::to_string(version) +
         " at byte offset 4");
  const std::uint32_t flags = r.u32("flags");
  if (flags > 1)
    fail(origin + ": unknown flag bits 0x" + hex64(flags) +
         " at byte offset 8");
  const bool has_groups = (flags & 1) != 0;
  const std::uint64_t n = r.u64("n_samples");
  const std::uint32_t dim = r.u32("dim");
  const std::uint32_t K = r.u32("K");
  const std::uint32_t G = r.u32("G");
  if (n == 0) fail(origin + ": n_samples is 0 (header at byte offset 12)");
  if (dim == 0) fail(origin + ": dim is 0 (header at byte offset 20)");
  if (K < 2) fail(origin + ": K must be >= 2, got " + std::to_string(K));
  if (has_groups && G == 0)
    fail(origin + ": has_groups flag set but G == 0");
  if (!has_groups && G != 0)
    fail(origin + ": G nonzero without has_groups flag");
  if (K > 1u << 24 || G > 1u << 24)
    fail(origin + ": implausible class/group count");

  // Validate the payload size before allocating anything.
  const std::uint64_t expect =
      n * (static_cast<std::uint64_t>(dim) * 4 + 4 + (has_groups ? 4 : 0));
  if (r.remaining() != expect)
    fail(origin + ": payload size mismatch at byte offset " +
         std::to_string(r.offset()) + ": header implies " +
         std::to_string(expect) + " bytes, file has " +
         std::to_string(r.remaining()));

  FeatureStore s;
  s.n_samples = static_cast<std::size_t>(n);
  s.dim = dim;
  s.class_count = static_cast<std::int32_t>(K);
  s.group_count = static_cast<std::int32_t>(G);
  s.features.resize(s.n_samples * s.dim);
  for (std::size_t i = 0; i < s.features.size(); ++i) {
    const std::size_t off = r.offset();
    const float v = r.f32("feature");
    if (!std::isfinite(v))
      fail(origin + ": non-finite feature value for sample " +
           std::to_string(i / s.dim) + " at byte offset " +
           std::to_string(off));
    s.features[i] = static_cast<double>(v);
  }
  s.class_labels.resize(s.n_samples);
  for (std::size_t i = 0; i < s.n_samples; ++i) {
    const std::size_t off = r.offset();
    const std::int32_t y = r.i32("class label");
    if (y < 0 || y >= s.class_count)
      fail(origin + ": class label " + std::to_string(y) + " of sample " +
           std::to_string(i) + " out of range [0, " + std::to_string(K) +
           ") at byte offset " + std::to_string(off));
    s.class_labels[i] = y;
  }
  if (has_groups) {
    s.group_labels.resize(s.n_samples);
    for (std::size_t i = 0; i < s.n_samples; ++i) {
      const std::size_t off = r.offset();
      const std::int32_t g = r.i32("group label");
      if (g < 0 || g >= s.group_count)
        fail(origin + ": group label " + std::to_string(g) + " of sample " +
             std::to_string(i) + " out of range [0, " + std::to_string(G) +
             ") at byte offset " + std::to_string(off));
      s.group_labels[i] = g;
    }
  }
  validate(s);  // covers the per-class coverage invariant
  return s;
}

inline std::string encode_store_csv(const FeatureStore& s) {
  std::string out;
  for (std::size_t j = 0; j < s.dim; ++j) {
    out += "f" + std::to_string(j) + ",";
  }
  out += s.has_groups() ? "label,group\n" : "label\n";
  for (std::size_t i = 0; i < s.n_samples; ++i) {
    for (std::size_t j = 0; j < s.dim; ++j) {
      out += detail::format_f32(static_cast<float>(s.features[i * s.dim + j]));
      out += ',';
    }
    out += std::to_string(s.class_labels[i]);
    if (s.has_groups()) {
      out += ',';
      out += std::to_string(s.group_labels[i]);
    }
    out += '\n';
  }
  return out;
}

inline FeatureStore decode_store_csv(const std::string& text,
                                     const std::string& origin) {
  // K and G are not carried by CSV; they are inferred as max label + 1 and
  // the loader rejects label gaps via the coverage invariant.
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(std::move(line));
    start = end + 1;
  }
  if (lines.empty()) fail(origin + ": empty CSV file");

  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::size_t s0 = 0;
    while (true) {
      std::size_t c = line.find(',', s0);
      if (c == std::string::npos) {
        cells.push_back(line.substr(s0));
        break;
      }
      cells.push_back(line.substr(s0, c - s0));
      s0 = c + 1;
    }
    return cells;
  };

  const auto header = split(lines[0]);
  bool has_groups = false;
  std::size_t dim = 0;
  if (header.size() >= 2 && header.back() == "group" &&
      header[header.size() - 2] == "label") {
    has_groups = true;
    dim = header.size() - 2;
  } else if (!header.empty() && header.back() == "label") {
    dim = header.size() - 1;
  } else {
    fail(origin + ": line 1: header must end with 'label' or 'label,group'");
  }
  if (dim == 0) fail(origin + ": line 1: header has no feature columns");
  for (std::size_t j = 0; j < dim; ++j)
    if (header[j] != "f" + std::to_string(j))
      fail(origin + ": line 1: expected column 'f" + std::to_string(j) +
           "', got '" + header[j] + "'");

  FeatureStore s;
  s.dim = dim;
  s.n_samples = lines.size() - 1;
  if (s.n_samples == 0) fail(origin + ": CSV has a header but no samples");
  s.features.reserve(s.n_samples * dim);
  s.class_labels.reserve(s.n_samples);
  if (has_groups) s.group_labels.reserve(s.n_samples);

  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::string lineno = std::to_string(li + 1);
    const auto cells = split(lines[li]);
    const std::size_t expect = dim + 1 + (has_groups ? 1 : 0);
    if (cells.size() != expect)
      fail(origin + ": line " + lineno + ": expected " +
           std::to_string(expect) + " columns per header, got " +
           std::to_string(cells.size()));
    for (std::size_t j = 0; j < dim; ++j) {
      double v = 0.0;
      const auto& c = cells[j];
      const auto res = std::from_chars(c.data(), c.data() + c.size(), v);
      if (res.ec != std::errc{} || res.ptr != c.data() + c.size())
        fail(origin + ": line " + lineno + ": cannot parse feature '" + c +
             "'");
      if (!std::isfinite(v))
        fail(origin + ": line " + lineno + ": non-finite feature value");
      s.features.push_back(static_cast<double>(static_cast<float>(v)));
    }
    auto parse_label = [&](const std::string& c,
                           const char* what) -> std::int32_t {
      std::int32_t v = 0;
      const auto res = std::from_chars(c.data(), c.data() + c.size(), v);
      if (res.ec != std::errc{} || res.ptr != c.data() + c.size() || v < 0)
        fail(origin + ": line " + lineno + ": cannot parse " + what + " '" +
             c + "'");
      return v;
    };
    s.class_labels.push_back(parse_label(cells[dim], "label"));
    if (has_groups)
      s.group_labels.push_back(parse_label(cells[dim + 1], "group"));
  }
  std::int32_t maxy = 0;
  for (std::int32_t y : s.class_labels) maxy = std::max(maxy, y);
  s.class_count = maxy + 1;
  if (has_groups) {
    std::int32_t maxg = 0;
    for (std::int32_t g : s.group_labels) maxg = std::max(maxg, g);
    s.group_count = maxg + 1;
  }
  validate(s);
  return s;
}

inline void save_store(const FeatureStore& s, const std::string& path,
                       StoreFormat format) {
  validate(s);
  detail::write_file(path, format == StoreFormat::binary
                               ? encode_store_binary(s)
                               : encode_store_csv(s));
}

inline FeatureStore load_store(const std::string& path, StoreFormat format) {
  const std::string bytes = detail::read_file(path);
  FeatureStore s = format == StoreFormat::binary
                       ? decode_store_binary(bytes, path)
                       : decode_store_csv(bytes, path);
  s.name = std::filesystem::path(path).stem().string();
  return s;
}

}  // namespace dpe
