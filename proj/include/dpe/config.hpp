#pragma once

#include <charconv>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dpe/common.hpp"
#include "dpe/ensemble.hpp"
#include "dpe/store_io.hpp"

namespace dpe {

// Line-oriented key=value config files: one `key=value` per line, `#` starts
// a comment, blank lines ignored, whitespace around key and value trimmed.
// Unknown keys are an error that names the key. Command-line flags override
// file values.

inline std::vector<std::pair<std::string, std::string>> parse_kv_text(
    const std::string& text, const std::string& origin) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(origin + ": line " + std::to_string(lineno) +
           ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      fail(origin + ": line " + std::to_string(lineno) + ": empty key");
    out.emplace_back(key, value);
  }
  return out;
}

inline std::vector<std::pair<std::string, std::string>> parse_kv_file(
    const std::string& path) {
  return parse_kv_text(detail::read_file(path), path);
}

namespace detail {

inline double parse_double(const std::string& v, const std::string& what) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
    fail(what + ": cannot parse number '" + v + "'");
  return out;
}

inline std::uint64_t parse_u64(const std::string& v, const std::string& what) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
    fail(what + ": cannot parse non-negative integer '" + v + "'");
  return out;
}

}  // namespace detail

inline SamplingMode::Kind parse_sampling_kind(const std::string& v,
                                              const std::string& what) {
  if (v == "class") return SamplingMode::Kind::class_balanced;
  if (v == "group") return SamplingMode::Kind::group_balanced;
  if (v == "fixed") return SamplingMode::Kind::fixed_full;
  fail(what + ": expected one of class|group|fixed, got '" + v + "'");
}

inline TrainConfig::Diversification parse_diversification(
    const std::string& v, const std::string& what) {
  if (v == "none") return TrainConfig::Diversification::none;
  if (v == "sampling") return TrainConfig::Diversification::sampling_only;
  if (v == "sampling+ips")
    return TrainConfig::Diversification::sampling_plus_ips;
  fail(what + ": expected one of none|sampling|sampling+ips, got '" + v + "'");
}

/// Applies key=value pairs onto a TrainConfig; later pairs win.
inline void apply_config_pairs(
    TrainConfig& cfg,
    const std::vector<std::pair<std::string, std::string>>& pairs,
    const std::string& origin) {
  for (const auto& [key, value] : pairs) {
    const std::string what = origin + ": " + key;
    if (key == "n_members") {
      cfg.n_members = static_cast<std::size_t>(detail::parse_u64(value, what));
    } else if (key == "inv_temperature") {
      cfg.inv_temperature = detail::parse_double(value, what);
    } else if (key == "ips_weight") {
      cfg.ips_weight = detail::parse_double(value, what);
    } else if (key == "learning_rate") {
      cfg.learning_rate = detail::parse_double(value, what);
    } else if (key == "epochs") {
      cfg.epochs = static_cast<std::size_t>(detail::parse_u64(value, what));
    } else if (key == "batch_size") {
      cfg.batch_size = static_cast<std::size_t>(detail::parse_u64(value, what));
    } else if (key == "sampling") {
      cfg.sampling.kind = parse_sampling_kind(value, what);
    } else if (key == "per_cell_size") {
      if (value == "min")
        cfg.sampling.per_cell_size.reset();
      else
        cfg.sampling.per_cell_size =
            static_cast<std::size_t>(detail::parse_u64(value, what));
    } else if (key == "diversification") {
      cfg.diversification = parse_diversification(value, what);
    } else if (key == "seed") {
      cfg.seed = detail::parse_u64(value, what);
    } else {
      fail(origin + ": unknown config key '" + key + "'");
    }
  }
}

inline TrainConfig load_train_config(const std::string& path) {
  TrainConfig cfg;
  apply_config_pairs(cfg, parse_kv_file(path), path);
  return cfg;
}

/// Run manifest written next to every CLI command's outputs: the resolved
/// configuration, digests of the input files and the output paths, enough
/// to reproduce the run bit-for-bit.
struct RunManifest {
  std::string command;
  std::vector<std::pair<std::string, std::string>> entries;

  void add(const std::string& key, const std::string& value) {
    entries.emplace_back(key, value);
  }
  void add_input_digest(const std::string& label, const std::string& path) {
    entries.emplace_back("input." + label,
                         path + ":fnv64=" + hex64(fnv1a64(detail::read_file(path))));
  }

  std::string to_text(double duration_seconds) const {
    char dur[40];
    std::snprintf(dur, sizeof(dur), "%.3f", duration_seconds);
    std::string out;
    out += "command=" + command + "\n";
    out += std::string("artifact_version=") + kArtifactVersion + "\n";
    for (const auto& [k, v] : entries) out += k + "=" + v + "\n";
    out += std::string("duration_seconds=") + dur + "\n";
    return out;
  }
};

inline void write_manifest(const RunManifest& m, const std::string& path,
                           double duration_seconds) {
  detail::write_file(path, m.to_text(duration_seconds));
}

}  // namespace dpe
