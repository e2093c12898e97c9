#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "dpe/common.hpp"
#include "dpe/feature_store.hpp"
#include "dpe/rng.hpp"

namespace dpe {

/// How each ensemble member's training subset is drawn. class_balanced and
/// group_balanced draw the same number of samples per cell, without
/// replacement; fixed_full always returns every index (the no-implicit-
/// diversification ablation arm).
struct SamplingMode {
  enum class Kind { class_balanced, group_balanced, fixed_full };
  Kind kind = Kind::class_balanced;
  // Samples per cell; defaults to the smallest cell count, the largest size
  // that still admits exact balance.
  std::optional<std::size_t> per_cell_size;
};

inline const char* to_string(SamplingMode::Kind k) {
  switch (k) {
    case SamplingMode::Kind::class_balanced: return "class";
    case SamplingMode::Kind::group_balanced: return "group";
    case SamplingMode::Kind::fixed_full: return "fixed";
  }
  return "?";
}

/// One balanced subset, deterministic in (store, mode, seed); indices are
/// returned sorted ascending. Cells are visited in ascending id order and
/// share a single RNG stream seeded by `seed`.
inline std::vector<std::size_t> draw_subset(const FeatureStore& store,
                                            const SamplingMode& mode,
                                            std::uint64_t seed) {
  if (mode.kind == SamplingMode::Kind::fixed_full) {
    std::vector<std::size_t> all(store.n_samples);
    std::iota(all.begin(), all.end(), std::size_t{0});
    return all;
  }
  const auto cells = mode.kind == SamplingMode::Kind::class_balanced
                         ? class_index(store)
                         : group_index(store);
  std::size_t min_cell = store.n_samples;
  for (const auto& c : cells) min_cell = std::min(min_cell, c.size());
  const std::size_t m = mode.per_cell_size.value_or(min_cell);
  require(m >= 1, "draw_subset: per_cell_size must be >= 1");
  for (std::size_t c = 0; c < cells.size(); ++c)
    if (m > cells[c].size())
      fail("draw_subset: per_cell_size " + std::to_string(m) + " exceeds " +
           std::to_string(cells[c].size()) + " samples in cell " +
           std::to_string(c));

  Rng rng(seed);
  std::vector<std::size_t> subset;
  subset.reserve(m * cells.size());
  for (const auto& cell : cells) {
    auto picked = rng.sample_without_replacement(cell, m);
    subset.insert(subset.end(), picked.begin(), picked.end());
  }
  std::sort(subset.begin(), subset.end());
  return subset;
}

/// Per-member subsets for an N-member ensemble. Member j draws with seed
/// derive_seed(base_seed, Stream::subset, j), so the subset of member j is
/// independent of N — prefixes of a longer ensemble reuse the same subsets.
inline std::vector<std::vector<std::size_t>> subset_sequence(
    const FeatureStore& store, const SamplingMode& mode,
    std::uint64_t base_seed, std::size_t n_members) {
  require(n_members >= 1, "subset_sequence: member count must be >= 1");
  std::vector<std::vector<std::size_t>> subsets;
  subsets.reserve(n_members);
  for (std::size_t j = 0; j < n_members; ++j)
    subsets.push_back(
        draw_subset(store, mode, derive_seed(base_seed, Stream::subset, j)));
  return subsets;
}

}  // namespace dpe
