#pragma once

// Straight-line reference implementations used as oracles. These are
// deliberately independent of the library's code paths: no shared helpers,
// no log-sum-exp stabilization, direct translations of the defining
// formulas. Tests freeze expected values computed by these.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "dpe/ensemble.hpp"
#include "dpe/feature_store.hpp"
#include "dpe/metrics.hpp"

namespace ref {

inline double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double scaled_distance(std::span<const double> x,
                              std::span<const double> p, double d_s) {
  const double nx = norm(x), np = norm(p);
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double d = x[j] / nx - p[j] / np;
    s += d * d;
  }
  return std::abs(d_s) * std::sqrt(s);
}

inline std::vector<double> class_probabilities(std::span<const double> x,
                                               const dpe::PrototypeSet& ps) {
  std::vector<double> e(ps.class_count);
  double z = 0.0;
  for (std::size_t k = 0; k < ps.class_count; ++k) {
    e[k] = std::exp(-scaled_distance(x, ps.prototype(k), ps.scale));
    z += e[k];
  }
  for (double& v : e) v /= z;
  return e;
}

inline double sample_loss(std::span<const double> x, std::int32_t y,
                          const dpe::PrototypeSet& ps, double tau) {
  double z = 0.0;
  for (std::size_t k = 0; k < ps.class_count; ++k)
    z += std::exp(-scaled_distance(x, ps.prototype(k), ps.scale) / tau);
  const double py =
      std::exp(-scaled_distance(x, ps.prototype(static_cast<std::size_t>(y)),
                                ps.scale) /
               tau) /
      z;
  return -std::log(py);
}

inline std::vector<double> ensemble_probabilities(
    std::span<const double> x, const dpe::EnsembleModel& model) {
  std::vector<double> mean(model.class_count, 0.0);
  for (const auto& ps : model.members) {
    const auto p = ref::class_probabilities(x, ps);
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += p[k];
  }
  for (double& v : mean) v /= static_cast<double>(model.members.size());
  return mean;
}

/// Literal triple sum of the similarity loss over stages 1..n, stage n
/// being `current`.
inline double ips_loss(const dpe::PrototypeSet& current,
                       std::span<const dpe::PrototypeSet> frozen) {
  std::vector<const dpe::PrototypeSet*> stages;
  for (const auto& f : frozen) stages.push_back(&f);
  stages.push_back(&current);
  const double n = static_cast<double>(stages.size());
  const double d = static_cast<double>(current.dim);
  if (stages.size() == 1) return 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k < current.class_count; ++k)
    for (std::size_t i = 0; i < stages.size(); ++i)
      for (std::size_t j = 0; j < stages.size(); ++j) {
        if (i == j) continue;
        double ip = 0.0;
        const auto pi = stages[i]->prototype(k);
        const auto pj = stages[j]->prototype(k);
        for (std::size_t t = 0; t < current.dim; ++t) ip += pi[t] * pj[t];
        total += std::abs(ip) / (n * d);
      }
  return total;
}

/// Brute-force recount of every metric in an EvalReport from raw
/// predictions.
inline dpe::EvalReport evaluate_recount(const dpe::FeatureStore& store,
                                        std::span<const std::int32_t> preds) {
  dpe::EvalReport rep;
  rep.groups_are_classes = !store.has_groups();
  const std::size_t G = rep.groups_are_classes
                            ? static_cast<std::size_t>(store.class_count)
                            : static_cast<std::size_t>(store.group_count);
  rep.per_group_accuracy.resize(G);
  rep.n_per_group.resize(G);
  for (std::size_t g = 0; g < G; ++g) {
    std::size_t n = 0, ok = 0;
    for (std::size_t i = 0; i < store.n_samples; ++i) {
      const std::size_t gi =
          rep.groups_are_classes
              ? static_cast<std::size_t>(store.class_labels[i])
              : static_cast<std::size_t>(store.group_labels[i]);
      if (gi != g) continue;
      ++n;
      if (preds[i] == store.class_labels[i]) ++ok;
    }
    rep.n_per_group[g] = n;
    rep.per_group_accuracy[g] =
        static_cast<double>(ok) / static_cast<double>(n);
  }
  rep.worst_group_accuracy =
      *std::min_element(rep.per_group_accuracy.begin(),
                        rep.per_group_accuracy.end());
  double ba = 0.0;
  for (std::int32_t c = 0; c < store.class_count; ++c) {
    std::size_t n = 0, ok = 0;
    for (std::size_t i = 0; i < store.n_samples; ++i) {
      if (store.class_labels[i] != c) continue;
      ++n;
      if (preds[i] == store.class_labels[i]) ++ok;
    }
    ba += static_cast<double>(ok) / static_cast<double>(n);
  }
  rep.balanced_accuracy = ba / static_cast<double>(store.class_count);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < store.n_samples; ++i)
    if (preds[i] == store.class_labels[i]) ++ok;
  rep.overall_accuracy =
      static_cast<double>(ok) / static_cast<double>(store.n_samples);
  return rep;
}

/// Full-sort nearest-sample oracle.
inline std::vector<std::size_t> nearest_samples(const dpe::EnsembleModel& model,
                                                std::size_t member,
                                                std::size_t cls,
                                                const dpe::FeatureStore& store,
                                                std::size_t top_k) {
  const auto& ps = model.members[member];
  std::vector<std::pair<double, std::size_t>> all;
  for (std::size_t i = 0; i < store.n_samples; ++i)
    all.emplace_back(
        scaled_distance(store.row(i), ps.prototype(cls), ps.scale), i);
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> out(top_k);
  for (std::size_t i = 0; i < top_k; ++i) out[i] = all[i].second;
  return out;
}

/// Deterministic random instance helpers shared by gradient-check tests.
struct Instance {
  dpe::FeatureStore store;
  dpe::PrototypeSet ps;
};

inline Instance random_instance(std::uint64_t seed, std::size_t dim_lo = 2,
                                std::size_t dim_hi = 8, std::size_t k_lo = 2,
                                std::size_t k_hi = 5,
                                std::size_t batch = 12) {
  dpe::Rng rng(seed);
  Instance inst;
  const std::size_t dim =
      dim_lo + static_cast<std::size_t>(rng.next_below(dim_hi - dim_lo + 1));
  const std::size_t K =
      k_lo + static_cast<std::size_t>(rng.next_below(k_hi - k_lo + 1));
  inst.store.dim = dim;
  inst.store.n_samples = batch;
  inst.store.class_count = static_cast<std::int32_t>(K);
  for (std::size_t i = 0; i < batch; ++i) {
    for (std::size_t j = 0; j < dim; ++j)
      inst.store.features.push_back(rng.next_gaussian());
    inst.store.class_labels.push_back(
        static_cast<std::int32_t>(i % K));  // covers every class
  }
  inst.ps.class_count = K;
  inst.ps.dim = dim;
  for (std::size_t i = 0; i < K * dim; ++i)
    inst.ps.prototypes.push_back(rng.next_gaussian());
  inst.ps.scale = 0.5 + 2.0 * rng.next_unit();
  if (rng.next_unit() < 0.3) inst.ps.scale = -inst.ps.scale;
  return inst;
}

}  // namespace ref
