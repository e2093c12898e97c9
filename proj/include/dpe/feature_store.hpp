#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dpe/common.hpp"

namespace dpe {

/// Identity of an evaluation subgroup when group labels encode a
/// class x attribute cell: group id = class_label * attr_count + attribute.
struct GroupKey {
  std::int32_t class_label = 0;
  std::int32_t attribute_label = 0;

  static GroupKey from_group_id(std::int32_t group_id,
                                std::int32_t attr_count) {
    require(attr_count > 0, "GroupKey: attr_count must be positive");
    require(group_id >= 0, "GroupKey: group id must be non-negative");
    return {group_id / attr_count, group_id % attr_count};
  }
  std::int32_t group_id(std::int32_t attr_count) const {
    return class_label * attr_count + attribute_label;
  }
  bool operator==(const GroupKey&) const = default;
};

/// Frozen feature embeddings with class labels and optional group labels.
/// Immutable after construction/validation; safe to share across threads.
/// Feature values are held in 64-bit; the canonical on-disk precision is
/// 32-bit (see store_io.hpp), so loaded stores always hold values that are
/// exactly representable in f32.
struct FeatureStore {
  std::size_t n_samples = 0;
  std::size_t dim = 0;
  std::int32_t class_count = 0;           // K
  std::int32_t group_count = 0;           // G; 0 means no group labels
  std::vector<double> features;           // n_samples x dim, row-major
  std::vector<std::int32_t> class_labels; // length n_samples
  std::vector<std::int32_t> group_labels; // empty or length n_samples
  std::string name;

  bool has_groups() const { return group_count > 0; }

  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * dim, dim};
  }
};

/// Checks every FeatureStore invariant; throws Error naming the first
/// violation. No partially constructed store should escape a loader
/// without passing this.
inline void validate(const FeatureStore& s) {
  require(s.n_samples >= 1, "FeatureStore: n_samples must be >= 1");
  require(s.dim >= 1, "FeatureStore: dim must be >= 1");
  require(s.class_count >= 2, "FeatureStore: class_count must be >= 2");
  require(s.features.size() == s.n_samples * s.dim,
          "FeatureStore: features size != n_samples*dim");
  require(s.class_labels.size() == s.n_samples,
          "FeatureStore: class_labels size != n_samples");
  if (s.group_count > 0) {
    require(s.group_labels.size() == s.n_samples,
            "FeatureStore: group_labels size != n_samples");
  } else {
    require(s.group_labels.empty(),
            "FeatureStore: group_labels present but group_count == 0");
  }
  for (std::size_t i = 0; i < s.features.size(); ++i) {
    if (!std::isfinite(s.features[i]))
      fail("FeatureStore: non-finite feature at sample " +
           std::to_string(i / s.dim) + " coordinate " +
           std::to_string(i % s.dim));
  }
  std::vector<bool> seen(static_cast<std::size_t>(s.class_count), false);
  for (std::size_t i = 0; i < s.n_samples; ++i) {
    const std::int32_t y = s.class_labels[i];
    if (y < 0 || y >= s.class_count)
      fail("FeatureStore: class label " + std::to_string(y) + " of sample " +
           std::to_string(i) + " out of range [0, " +
           std::to_string(s.class_count) + ")");
    seen[static_cast<std::size_t>(y)] = true;
  }
  for (std::int32_t k = 0; k < s.class_count; ++k)
    if (!seen[static_cast<std::size_t>(k)])
      fail("FeatureStore: class " + std::to_string(k) + " has no samples");
  for (std::size_t i = 0; i < s.group_labels.size(); ++i) {
    const std::int32_t g = s.group_labels[i];
    if (g < 0 || g >= s.group_count)
      fail("FeatureStore: group label " + std::to_string(g) + " of sample " +
           std::to_string(i) + " out of range [0, " +
           std::to_string(s.group_count) + ")");
  }
}

/// Per-class sample indices, ascending within each class. The lists
/// partition [0, n_samples).
inline std::vector<std::vector<std::size_t>> class_index(
    const FeatureStore& s) {
  std::vector<std::vector<std::size_t>> idx(
      static_cast<std::size_t>(s.class_count));
  for (std::size_t i = 0; i < s.n_samples; ++i)
    idx[static_cast<std::size_t>(s.class_labels[i])].push_back(i);
  return idx;
}

/// Per-group sample indices; requires group labels.
inline std::vector<std::vector<std::size_t>> group_index(
    const FeatureStore& s) {
  require(s.has_groups(), "group_index: store has no group labels");
  std::vector<std::vector<std::size_t>> idx(
      static_cast<std::size_t>(s.group_count));
  for (std::size_t i = 0; i < s.n_samples; ++i)
    idx[static_cast<std::size_t>(s.group_labels[i])].push_back(i);
  return idx;
}

inline bool equal_stores(const FeatureStore& a, const FeatureStore& b) {
  return a.n_samples == b.n_samples && a.dim == b.dim &&
         a.class_count == b.class_count && a.group_count == b.group_count &&
         a.features == b.features && a.class_labels == b.class_labels &&
         a.group_labels == b.group_labels;
}

}  // namespace dpe
