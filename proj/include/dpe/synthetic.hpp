#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "dpe/common.hpp"
#include "dpe/feature_store.hpp"
#include "dpe/rng.hpp"

namespace dpe {

/// Synthetic subpopulation-shift benchmark: two (or more) classes, each a
/// mixture of one majority and several minority attribute modes. Samples
/// are drawn from isotropic Gaussians at mean(class) + offset(attribute);
/// the group label encodes the (class, attribute) cell. The training split
/// follows group_fractions, the test split is group-balanced so worst-group
/// accuracy stresses the minorities.
///
/// The default geometry lives in the first two coordinates (higher
/// dimensions carry pure noise, like the bulk of a real embedding):
/// a class axis along u with a conflicted minority mode placed deep on the
/// wrong side of it, and a second minority mode angularly squeezed between
/// the class regions. A linear head on the raw coordinates leans on the
/// class axis and sacrifices the conflicted modes; the angular geometry that
/// the normalized-distance classifiers see remains class-separable only
/// through a union of regions that no single prototype pair can express.
struct SynthSpec {
  std::size_t dim = 128;
  double noise_sigma = 0.5;
  // Per class, the mean vector; entries beyond the given length are 0.
  std::vector<std::vector<double>> class_means = {{-4.0, 0.0}, {4.0, 0.0}};
  // Per attribute, the shared offset vector; attribute 0 is the majority.
  std::vector<std::vector<double>> attr_offsets = {
      {0.0, 0.0}, {8.5, 5.0}, {1.2, -2.6}};
  // Fractions of the training split per (class, attribute) cell, row-major
  // by class; must sum to 1.
  std::vector<double> group_fractions = {0.3, 0.1, 0.1, 0.3, 0.1, 0.1};
  std::size_t n_train = 3000;
  std::size_t n_test = 1800;
  std::uint64_t seed = 0;

  std::size_t class_count() const { return class_means.size(); }
  std::size_t attr_count() const { return attr_offsets.size(); }
  std::size_t group_count() const { return class_count() * attr_count(); }
};

inline void validate(const SynthSpec& spec) {
  require(spec.dim >= 2, "SynthSpec: dim must be >= 2");
  require(std::isfinite(spec.noise_sigma) && spec.noise_sigma > 0.0,
          "SynthSpec: noise_sigma must be positive");
  require(spec.class_count() >= 2, "SynthSpec: need at least 2 classes");
  require(spec.attr_count() >= 2, "SynthSpec: need at least 2 attributes");
  require(spec.n_train >= spec.group_count(),
          "SynthSpec: n_train smaller than the number of groups");
  require(spec.n_test >= spec.group_count(),
          "SynthSpec: n_test smaller than the number of groups");
  for (const auto& m : spec.class_means)
    require(m.size() <= spec.dim, "SynthSpec: class mean longer than dim");
  for (const auto& o : spec.attr_offsets)
    require(o.size() <= spec.dim, "SynthSpec: attr offset longer than dim");
  require(spec.group_fractions.size() == spec.group_count(),
          "SynthSpec: group_fractions must have class_count*attr_count "
          "entries");
  double sum = 0.0;
  for (double f : spec.group_fractions) {
    require(std::isfinite(f) && f > 0.0,
            "SynthSpec: group fractions must be positive");
    sum += f;
  }
  require(std::abs(sum - 1.0) <= 1e-9,
          "SynthSpec: group fractions must sum to 1, got " +
              std::to_string(sum));
  // Each class needs a majority and at least one minority attribute.
  for (std::size_t c = 0; c < spec.class_count(); ++c) {
    double lo = 1.0, hi = 0.0;
    for (std::size_t a = 0; a < spec.attr_count(); ++a) {
      const double f = spec.group_fractions[c * spec.attr_count() + a];
      lo = std::min(lo, f);
      hi = std::max(hi, f);
    }
    require(hi > lo, "SynthSpec: class " + std::to_string(c) +
                         " has no majority/minority attribute split");
  }
}

/// Largest-remainder allocation of `total` into integer counts proportional
/// to `fractions`; ties go to the lower cell index. Every cell gets at
/// least one sample.
inline std::vector<std::size_t> largest_remainder_counts(
    std::span<const double> fractions, std::size_t total) {
  const std::size_t n = fractions.size();
  std::vector<std::size_t> counts(n);
  std::vector<std::pair<double, std::size_t>> rema(n);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ideal = fractions[i] * static_cast<double>(total);
    counts[i] = static_cast<std::size_t>(ideal);
    rema[i] = {-(ideal - std::floor(ideal)), i};  // negated for ascending sort
    assigned += counts[i];
  }
  std::sort(rema.begin(), rema.end());
  for (std::size_t r = 0; assigned < total; ++r, ++assigned)
    counts[rema[r % n].second]++;
  for (std::size_t i = 0; i < n; ++i)
    require(counts[i] >= 1, "allocation: cell " + std::to_string(i) +
                                " received no samples; increase n");
  return counts;
}

namespace detail {

inline FeatureStore generate_split(const SynthSpec& spec,
                                   std::span<const std::size_t> group_counts,
                                   Stream stream, const std::string& name) {
  const std::size_t A = spec.attr_count();
  std::size_t n = 0;
  for (std::size_t c : group_counts) n += c;

  FeatureStore s;
  s.n_samples = n;
  s.dim = spec.dim;
  s.class_count = static_cast<std::int32_t>(spec.class_count());
  s.group_count = static_cast<std::int32_t>(spec.group_count());
  s.features.reserve(n * spec.dim);
  s.class_labels.reserve(n);
  s.group_labels.reserve(n);
  s.name = name;

  std::vector<double> center(spec.dim);
  for (std::size_t g = 0; g < spec.group_count(); ++g) {
    const std::size_t cls = g / A;
    const std::size_t attr = g % A;
    std::fill(center.begin(), center.end(), 0.0);
    const auto& mean = spec.class_means[cls];
    const auto& off = spec.attr_offsets[attr];
    for (std::size_t j = 0; j < mean.size(); ++j) center[j] += mean[j];
    for (std::size_t j = 0; j < off.size(); ++j) center[j] += off[j];

    // One stream per (seed, split, group): counts of other groups do not
    // perturb this group's draws.
    Rng rng(derive_seed(spec.seed, stream, g));
    for (std::size_t i = 0; i < group_counts[g]; ++i) {
      for (std::size_t j = 0; j < spec.dim; ++j) {
        const double v = center[j] + spec.noise_sigma * rng.next_gaussian();
        // Quantize to f32, the canonical on-disk precision, so generated
        // stores round-trip bit-exactly through DPEF files.
        s.features.push_back(static_cast<double>(static_cast<float>(v)));
      }
      s.class_labels.push_back(static_cast<std::int32_t>(cls));
      s.group_labels.push_back(static_cast<std::int32_t>(g));
    }
  }
  validate(s);
  return s;
}

}  // namespace detail

/// Train and test stores for the synthetic benchmark. Deterministic in
/// spec.seed; the test split is group-balanced.
inline std::pair<FeatureStore, FeatureStore> generate_synthetic(
    const SynthSpec& spec) {
  validate(spec);
  const auto train_counts =
      largest_remainder_counts(spec.group_fractions, spec.n_train);
  const std::vector<double> equal(spec.group_count(),
                                  1.0 / static_cast<double>(spec.group_count()));
  const auto test_counts = largest_remainder_counts(equal, spec.n_test);
  return {detail::generate_split(spec, train_counts, Stream::synth_train,
                                 "synth-train"),
          detail::generate_split(spec, test_counts, Stream::synth_test,
                                 "synth-test")};
}

}  // namespace dpe
