#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "dpe/common.hpp"
#include "dpe/ensemble.hpp"
#include "dpe/feature_store.hpp"

namespace dpe {

/// Subpopulation-shift evaluation report. When the store carries no group
/// labels the per-group view degrades to per-class accuracy and
/// `groups_are_classes` says so; balanced accuracy is always the mean of
/// per-class accuracies.
struct EvalReport {
  std::vector<double> per_group_accuracy;  // indexed by group id
  std::vector<std::size_t> n_per_group;
  double worst_group_accuracy = 0.0;
  double balanced_accuracy = 0.0;
  double overall_accuracy = 0.0;
  bool groups_are_classes = false;

  bool operator==(const EvalReport&) const = default;
};

namespace detail {

inline EvalReport evaluate_predictions(const FeatureStore& store,
                                       std::span<const std::int32_t> preds) {
  EvalReport rep;
  rep.groups_are_classes = !store.has_groups();
  const std::size_t G = rep.groups_are_classes
                            ? static_cast<std::size_t>(store.class_count)
                            : static_cast<std::size_t>(store.group_count);
  const std::size_t K = static_cast<std::size_t>(store.class_count);
  std::vector<std::size_t> group_n(G, 0), group_ok(G, 0);
  std::vector<std::size_t> class_n(K, 0), class_ok(K, 0);
  std::size_t total_ok = 0;
  for (std::size_t i = 0; i < store.n_samples; ++i) {
    const auto y = static_cast<std::size_t>(store.class_labels[i]);
    const std::size_t g =
        rep.groups_are_classes ? y
                               : static_cast<std::size_t>(store.group_labels[i]);
    const bool ok = preds[i] == store.class_labels[i];
    group_n[g]++;
    class_n[y]++;
    if (ok) {
      group_ok[g]++;
      class_ok[y]++;
      total_ok++;
    }
  }
  for (std::size_t g = 0; g < G; ++g)
    if (group_n[g] == 0)
      fail("evaluate: group " + std::to_string(g) + " is empty");

  rep.per_group_accuracy.resize(G);
  rep.n_per_group = group_n;
  rep.worst_group_accuracy = 1.0;
  for (std::size_t g = 0; g < G; ++g) {
    rep.per_group_accuracy[g] =
        static_cast<double>(group_ok[g]) / static_cast<double>(group_n[g]);
    rep.worst_group_accuracy =
        std::min(rep.worst_group_accuracy, rep.per_group_accuracy[g]);
  }
  double ba = 0.0;
  for (std::size_t k = 0; k < K; ++k)
    ba += static_cast<double>(class_ok[k]) / static_cast<double>(class_n[k]);
  rep.balanced_accuracy = ba / static_cast<double>(K);
  rep.overall_accuracy =
      static_cast<double>(total_ok) / static_cast<double>(store.n_samples);
  return rep;
}

}  // namespace detail

/// Per-group accuracy of the ensemble's predict() over the store, plus the
/// worst-group / balanced / overall summaries.
inline EvalReport evaluate(const EnsembleModel& model,
                           const FeatureStore& store) {
  validate(model);
  validate(store);
  require(store.dim == model.dim, "evaluate: dimension mismatch");
  require(static_cast<std::size_t>(store.class_count) == model.class_count,
          "evaluate: class count mismatch");
  const auto pe = detail::prepare(model);
  const auto x_hat = detail::normalize_features(store);
  std::vector<std::int32_t> preds(store.n_samples);
  std::vector<double> prob(model.class_count);
  for (std::size_t i = 0; i < store.n_samples; ++i) {
    const std::span<const double> xu{x_hat.data() + i * store.dim, store.dim};
    detail::ensemble_probabilities_prenormalized(xu, pe, prob);
    preds[i] = detail::argmax_lowest(prob);
  }
  return detail::evaluate_predictions(store, preds);
}

/// Line-oriented key=value rendering of a report (External Interfaces).
inline std::string report_to_kv(const EvalReport& r) {
  auto fmt = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return std::string(buf);
  };
  std::string out;
  out += "worst_group_accuracy=" + fmt(r.worst_group_accuracy) + "\n";
  out += "balanced_accuracy=" + fmt(r.balanced_accuracy) + "\n";
  out += "overall_accuracy=" + fmt(r.overall_accuracy) + "\n";
  out += "n_groups=" + std::to_string(r.per_group_accuracy.size()) + "\n";
  out += std::string("groups_are_classes=") +
         (r.groups_are_classes ? "true" : "false") + "\n";
  for (std::size_t g = 0; g < r.per_group_accuracy.size(); ++g) {
    out += "group." + std::to_string(g) +
           ".n=" + std::to_string(r.n_per_group[g]) + "\n";
    out += "group." + std::to_string(g) +
           ".accuracy=" + fmt(r.per_group_accuracy[g]) + "\n";
  }
  return out;
}

/// Tabular rendering: header `group,count,accuracy`, one row per group,
/// then summary rows with group ids `worst`, `balanced`, `overall`.
inline std::string report_to_csv(const EvalReport& r) {
  auto fmt = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return std::string(buf);
  };
  std::string out = "group,count,accuracy\n";
  for (std::size_t g = 0; g < r.per_group_accuracy.size(); ++g)
    out += std::to_string(g) + "," + std::to_string(r.n_per_group[g]) + "," +
           fmt(r.per_group_accuracy[g]) + "\n";
  out += "worst,," + fmt(r.worst_group_accuracy) + "\n";
  out += "balanced,," + fmt(r.balanced_accuracy) + "\n";
  out += "overall,," + fmt(r.overall_accuracy) + "\n";
  return out;
}

}  // namespace dpe
