#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "dpe/common.hpp"
#include "dpe/feature_store.hpp"
#include "dpe/metrics.hpp"
#include "dpe/optimizer.hpp"
#include "dpe/rng.hpp"

namespace dpe {

/// Multinomial logistic head on the raw (unnormalized) features: the
/// ERM-style reference classifier for ablation reports. Weights and biases
/// start at zero and train with the same SGD loop as the prototype members,
/// no similarity penalty.
struct LinearProbe {
  std::size_t class_count = 0;
  std::size_t dim = 0;
  std::vector<double> weights;  // K x (dim + 1), bias last per row

  std::int32_t predict(std::span<const double> x) const {
    double best = 0.0;
    std::int32_t arg = 0;
    for (std::size_t k = 0; k < class_count; ++k) {
      const double* row = weights.data() + k * (dim + 1);
      double s = row[dim];
      for (std::size_t j = 0; j < dim; ++j) s += row[j] * x[j];
      if (k == 0 || s > best) {
        best = s;
        arg = static_cast<std::int32_t>(k);
      }
    }
    return arg;
  }
};

namespace detail {

inline double probe_loss_and_grad(const FeatureStore& store,
                                  std::span<const std::size_t> batch,
                                  std::span<const double> params,
                                  std::span<double> grad, std::size_t K,
                                  std::size_t dim) {
  std::fill(grad.begin(), grad.end(), 0.0);
  std::vector<double> logits(K), prob(K);
  double total = 0.0;
  for (std::size_t i : batch) {
    const auto x = store.row(i);
    for (std::size_t k = 0; k < K; ++k) {
      const double* row = params.data() + k * (dim + 1);
      double s = row[dim];
      for (std::size_t j = 0; j < dim; ++j) s += row[j] * x[j];
      logits[k] = s;
    }
    const double m = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      prob[k] = std::exp(logits[k] - m);
      z += prob[k];
    }
    for (std::size_t k = 0; k < K; ++k) prob[k] /= z;
    const auto y = static_cast<std::size_t>(store.class_labels[i]);
    total += -(logits[y] - m) + std::log(z);
    for (std::size_t k = 0; k < K; ++k) {
      const double err = prob[k] - (k == y ? 1.0 : 0.0);
      double* grow = grad.data() + k * (dim + 1);
      for (std::size_t j = 0; j < dim; ++j) grow[j] += err * x[j];
      grow[dim] += err;
    }
  }
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (double& v : grad) v *= inv_n;
  return total * inv_n;
}

}  // namespace detail

/// Trains the probe on the full train store and returns it together with
/// its loss trace.
inline LinearProbe train_linear_probe(const FeatureStore& train,
                                      const SgdSchedule& sched,
                                      std::vector<double>* loss_trace = nullptr) {
  validate(train);
  LinearProbe probe;
  probe.class_count = static_cast<std::size_t>(train.class_count);
  probe.dim = train.dim;
  probe.weights.assign(probe.class_count * (train.dim + 1), 0.0);

  std::vector<std::size_t> all(train.n_samples);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const LossAndGrad fn = [&](std::span<const std::size_t> batch,
                             std::span<const double> p,
                             std::span<double> g) -> double {
    return detail::probe_loss_and_grad(train, batch, p, g, probe.class_count,
                                       train.dim);
  };
  const SgdResult res = run_sgd(probe.weights, fn, all, sched);
  if (loss_trace) *loss_trace = res.epoch_mean_loss;
  return probe;
}

inline EvalReport evaluate_probe(const LinearProbe& probe,
                                 const FeatureStore& store) {
  validate(store);
  require(store.dim == probe.dim, "evaluate_probe: dimension mismatch");
  std::vector<std::int32_t> preds(store.n_samples);
  for (std::size_t i = 0; i < store.n_samples; ++i)
    preds[i] = probe.predict(store.row(i));
  return detail::evaluate_predictions(store, preds);
}

/// Reference classifier run: fit on train, report on test. The schedule
/// mirrors the prototype members' optimizer defaults; the probe's seed only
/// drives the epoch shuffles (weights start at zero).
inline EvalReport linear_probe(const FeatureStore& train,
                               const FeatureStore& test, std::uint64_t seed,
                               const SgdSchedule& base = SgdSchedule{}) {
  require(train.dim == test.dim, "linear_probe: dimension mismatch");
  require(train.class_count == test.class_count,
          "linear_probe: class count mismatch");
  SgdSchedule sched = base;
  sched.shuffle_seed = derive_seed(seed, Stream::probe, 0);
  const LinearProbe probe = train_linear_probe(train, sched);
  return evaluate_probe(probe, test);
}

}  // namespace dpe
