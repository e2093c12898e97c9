#pragma once

#include <cstdint>
#include <string>

#include "dpe/common.hpp"
#include "dpe/ensemble.hpp"
#include "dpe/store_io.hpp"

namespace dpe {

// DPEM model file, little-endian:
//
//   magic      "DPEM"            4 bytes
//   version    u32 = 1
//   K          u32
//   dim        u32
//   N          u32
//   members    N times: d_s f64, then prototypes f64 row-major (K*dim)
//   digest     u32 length, then that many bytes (config digest text)
//
// Parameters are stored at full f64 width, so save followed by load is
// bit-exact and a reloaded model replays identical evaluations.

inline std::string encode_model(const EnsembleModel& m) {
  std::string out;
  out.reserve(24 + m.n_members() * (1 + m.class_count * m.dim) * 8 +
              m.config_digest.size());
  out += "DPEM";
  detail::put_u32(out, 1);
  detail::put_u32(out, static_cast<std::uint32_t>(m.class_count));
  detail::put_u32(out, static_cast<std::uint32_t>(m.dim));
  detail::put_u32(out, static_cast<std::uint32_t>(m.n_members()));
  for (const auto& ps : m.members) {
    detail::put_f64(out, ps.scale);
    for (double v : ps.prototypes) detail::put_f64(out, v);
  }
  detail::put_u32(out, static_cast<std::uint32_t>(m.config_digest.size()));
  out += m.config_digest;
  return out;
}

inline EnsembleModel decode_model(const std::string& bytes,
                                  const std::string& origin) {
  detail::ByteReader r(bytes, origin);
  char magic[4];
  r.raw(magic, 4, "magic");
  if (std::memcmp(magic, "DPEM", 4) != 0)
    fail(origin + ": bad magic at byte offset 0, expected \"DPEM\"");
  const std::uint32_t version = r.u32("version");
  if (version != 1)
    fail(origin + ": unsupported version " + std::to_string(version) +
         " at byte offset 4");
  const std::uint32_t K = r.u32("K");
  const std::uint32_t dim = r.u32("dim");
  const std::uint32_t N = r.u32("N");
  if (K == 0) fail(origin + ": K is 0 (header at byte offset 8)");
  if (dim == 0) fail(origin + ": dim is 0 (header at byte offset 12)");
  if (N == 0) fail(origin + ": N is 0 (header at byte offset 16)");
  if (K > 1u << 24 || dim > 1u << 24 || N > 1u << 24)
    fail(origin + ": implausible header sizes");

  const std::uint64_t member_bytes =
      (1 + static_cast<std::uint64_t>(K) * dim) * 8;
  if (r.remaining() < static_cast<std::uint64_t>(N) * member_bytes + 4)
    fail(origin + ": truncated member payload at byte offset " +
         std::to_string(r.offset()) + ": need " +
         std::to_string(static_cast<std::uint64_t>(N) * member_bytes + 4) +
         " bytes, have " + std::to_string(r.remaining()));

  EnsembleModel m;
  m.class_count = K;
  m.dim = dim;
  m.members.reserve(N);
  for (std::uint32_t j = 0; j < N; ++j) {
    PrototypeSet ps;
    ps.class_count = K;
    ps.dim = dim;
    const std::size_t scale_off = r.offset();
    ps.scale = r.f64("member scale");
    if (!std::isfinite(ps.scale) || ps.scale == 0.0)
      fail(origin + ": member " + std::to_string(j) +
           " scale is not finite and nonzero (byte offset " +
           std::to_string(scale_off) + ")");
    ps.prototypes.resize(static_cast<std::size_t>(K) * dim);
    for (std::size_t i = 0; i < ps.prototypes.size(); ++i) {
      const std::size_t off = r.offset();
      ps.prototypes[i] = r.f64("prototype value");
      if (!std::isfinite(ps.prototypes[i]))
        fail(origin + ": non-finite prototype value in member " +
             std::to_string(j) + " at byte offset " + std::to_string(off));
    }
    for (std::size_t k = 0; k < K; ++k)
      if (norm2(ps.prototype(k)) == 0.0)
        fail(origin + ": member " + std::to_string(j) + " prototype " +
             std::to_string(k) + " is the zero vector");
    m.members.push_back(std::move(ps));
  }
  const std::uint32_t digest_len = r.u32("digest length");
  if (digest_len > 1u << 20)
    fail(origin + ": implausible digest length " + std::to_string(digest_len));
  if (r.remaining() != digest_len)
    fail(origin + ": digest payload mismatch at byte offset " +
         std::to_string(r.offset()) + ": header says " +
         std::to_string(digest_len) + " bytes, file has " +
         std::to_string(r.remaining()));
  m.config_digest.resize(digest_len);
  if (digest_len > 0) r.raw(m.config_digest.data(), digest_len, "digest");
  validate(m);
  return m;
}

inline void save_model(const EnsembleModel& m, const std::string& path) {
  validate(m);
  detail::write_file(path, encode_model(m));
}

inline EnsembleModel load_model(const std::string& path) {
  return decode_model(detail::read_file(path), path);
}

}  // namespace dpe
