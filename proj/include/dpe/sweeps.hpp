#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "dpe/common.hpp"
#include "dpe/ensemble.hpp"
#include "dpe/feature_store.hpp"
#include "dpe/metrics.hpp"

namespace dpe {

namespace detail {

/// Evaluates nested member prefixes in one pass over the store. Members are
/// frozen and ordered, so the prefix of a trained ensemble is bit-identical
/// to an ensemble trained with the smaller member count; per-sample
/// probability sums are accumulated member by member and the argmax is
/// recorded at every requested size.
inline std::vector<EvalReport> evaluate_prefixes(
    const EnsembleModel& model, const FeatureStore& store,
    std::span<const std::size_t> sizes) {
  validate(model);
  validate(store);
  require(store.dim == model.dim, "evaluate_prefixes: dimension mismatch");
  for (std::size_t s : sizes)
    require(s >= 1 && s <= model.n_members(),
            "evaluate_prefixes: size out of range");
  const auto pe = prepare(model);
  const auto x_hat = normalize_features(store);
  const std::size_t K = model.class_count;

  std::vector<std::vector<std::int32_t>> preds(
      sizes.size(), std::vector<std::int32_t>(store.n_samples));
  std::vector<double> accum(K), prob(K), r(K);
  for (std::size_t i = 0; i < store.n_samples; ++i) {
    const std::span<const double> xu{x_hat.data() + i * store.dim, store.dim};
    std::fill(accum.begin(), accum.end(), 0.0);
    std::size_t next = 0;
    for (std::size_t j = 0; j < model.n_members() && next < sizes.size();
         ++j) {
      unit_distances(xu, pe.members[j], r);
      scaled_softmax_from_units(r, pe.members[j].abs_scale, prob);
      for (std::size_t k = 0; k < K; ++k) accum[k] += prob[k];
      while (next < sizes.size() && sizes[next] == j + 1) {
        preds[next][i] = argmax_lowest(accum);  // argmax of sum == of mean
        ++next;
      }
    }
  }
  std::vector<EvalReport> reports;
  reports.reserve(sizes.size());
  for (const auto& p : preds)
    reports.push_back(evaluate_predictions(store, p));
  return reports;
}

inline double prefix_mean_abs_cos(const EnsembleModel& model, std::size_t n) {
  EnsembleModel head;
  head.class_count = model.class_count;
  head.dim = model.dim;
  head.members.assign(model.members.begin(),
                      model.members.begin() + static_cast<std::ptrdiff_t>(n));
  return mean_offdiag_abs_cosine(head);
}

}  // namespace detail

struct SizeSweepRow {
  std::size_t n_members = 0;
  double wga = 0.0;
  double balanced_accuracy = 0.0;
  double overall_accuracy = 0.0;
  double delta_percent = 0.0;  // (WGA_N - WGA_1) / WGA_1 * 100
};

/// Ensemble-size ablation: trains once at max(sizes) and evaluates nested
/// prefixes (exact, by sequential determinism). Delta is the percentage
/// improvement of WGA over the single-member model.
inline std::vector<SizeSweepRow> sweep_ensemble_size(
    const FeatureStore& train, const FeatureStore& test,
    const TrainConfig& cfg, std::span<const std::size_t> sizes) {
  require(!sizes.empty(), "sweep_ensemble_size: empty size list");
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i)
    require(sizes[i] < sizes[i + 1],
            "sweep_ensemble_size: sizes must be strictly ascending");
  require(sizes.front() >= 1, "sweep_ensemble_size: sizes must be >= 1");

  TrainConfig full = cfg;
  full.n_members = sizes.back();
  const EnsembleModel model = train_ensemble(train, full);

  // WGA_1 anchors delta even when 1 is not in the requested list.
  const bool anchor_added = sizes.front() != 1;
  std::vector<std::size_t> eval_sizes(sizes.begin(), sizes.end());
  if (anchor_added) eval_sizes.insert(eval_sizes.begin(), 1);
  const auto reports = detail::evaluate_prefixes(model, test, eval_sizes);
  const double wga1 = reports.front().worst_group_accuracy;
  require(wga1 > 0.0,
          "sweep_ensemble_size: single-member WGA is zero; the relative "
          "improvement is undefined on this data");

  std::vector<SizeSweepRow> rows;
  rows.reserve(sizes.size());
  for (std::size_t i = anchor_added ? 1u : 0u; i < eval_sizes.size(); ++i) {
    const auto& rep = reports[i];
    rows.push_back({eval_sizes[i], rep.worst_group_accuracy,
                    rep.balanced_accuracy, rep.overall_accuracy,
                    (rep.worst_group_accuracy - wga1) / wga1 * 100.0});
  }
  return rows;
}

struct SensitivityRow {
  double inv_temperature = 0.0;
  double ips_weight = 0.0;
  double wga = 0.0;
  double overall_accuracy = 0.0;
};

/// Hyperparameter sensitivity harness: one full train+eval per grid point,
/// all other knobs and the seed held fixed. Rows appear in grid order
/// (inv_temperature outer, ips_weight inner).
inline std::vector<SensitivityRow> sweep_sensitivity(
    const FeatureStore& train, const FeatureStore& test,
    const TrainConfig& cfg, std::span<const double> inv_temperatures,
    std::span<const double> ips_weights) {
  require(!inv_temperatures.empty() && !ips_weights.empty(),
          "sweep_sensitivity: empty grid");
  std::vector<SensitivityRow> rows;
  rows.reserve(inv_temperatures.size() * ips_weights.size());
  for (double it : inv_temperatures) {
    for (double alpha : ips_weights) {
      TrainConfig point = cfg;
      point.inv_temperature = it;
      point.ips_weight = alpha;
      const EnsembleModel model = train_ensemble(train, point);
      const EvalReport rep = evaluate(model, test);
      rows.push_back({it, alpha, rep.worst_group_accuracy,
                      rep.overall_accuracy});
    }
  }
  return rows;
}

struct AblationRow {
  TrainConfig::Diversification arm{};
  std::uint64_t seed = 0;
  std::size_t n_members = 0;
  double wga = 0.0;
  double balanced_accuracy = 0.0;
  double overall_accuracy = 0.0;
  double mean_abs_cos = 0.0;  // over the first n_members members
};

/// Diversification ablation: for each arm (none / sampling_only /
/// sampling_plus_ips) and each seed, trains at max(sizes) and reports the
/// nested prefix metrics plus the prototype-similarity summary.
inline std::vector<AblationRow> run_ablation(
    const FeatureStore& train, const FeatureStore& test,
    const TrainConfig& base, std::span<const std::uint64_t> seeds,
    std::span<const std::size_t> sizes) {
  require(!seeds.empty(), "run_ablation: no seeds");
  require(!sizes.empty(), "run_ablation: no sizes");
  std::vector<std::size_t> eval_sizes(sizes.begin(), sizes.end());
  std::sort(eval_sizes.begin(), eval_sizes.end());
  eval_sizes.erase(std::unique(eval_sizes.begin(), eval_sizes.end()),
                   eval_sizes.end());

  static constexpr TrainConfig::Diversification kArms[] = {
      TrainConfig::Diversification::none,
      TrainConfig::Diversification::sampling_only,
      TrainConfig::Diversification::sampling_plus_ips};

  std::vector<AblationRow> rows;
  rows.reserve(3 * seeds.size() * eval_sizes.size());
  for (const auto arm : kArms) {
    for (std::uint64_t seed : seeds) {
      TrainConfig cfg = base;
      cfg.diversification = arm;
      cfg.seed = seed;
      cfg.n_members = eval_sizes.back();
      const EnsembleModel model = train_ensemble(train, cfg);
      const auto reports = detail::evaluate_prefixes(model, test, eval_sizes);
      for (std::size_t i = 0; i < eval_sizes.size(); ++i)
        rows.push_back({arm, seed, eval_sizes[i],
                        reports[i].worst_group_accuracy,
                        reports[i].balanced_accuracy,
                        reports[i].overall_accuracy,
                        detail::prefix_mean_abs_cos(model, eval_sizes[i])});
    }
  }
  return rows;
}

inline std::string ablation_table_csv(std::span<const AblationRow> rows) {
  auto fmt = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return std::string(buf);
  };
  std::string out =
      "arm,seed,n_members,wga,balanced_accuracy,overall_accuracy,"
      "mean_abs_cos\n";
  for (const auto& r : rows) {
    out += std::string(to_string(r.arm)) + "," + std::to_string(r.seed) + "," +
           std::to_string(r.n_members) + "," + fmt(r.wga) + "," +
           fmt(r.balanced_accuracy) + "," + fmt(r.overall_accuracy) + "," +
           fmt(r.mean_abs_cos) + "\n";
  }
  return out;
}

}  // namespace dpe
