#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "dpe/common.hpp"
#include "dpe/rng.hpp"

namespace dpe {

/// Constant-rate mini-batch SGD schedule. The final partial batch of an
/// epoch is kept and mean-normalized like any other batch.
struct SgdSchedule {
  double learning_rate = 1e-3;
  std::size_t epochs = 100;
  std::size_t batch_size = 256;
  std::uint64_t shuffle_seed = 0;
};

inline void validate(const SgdSchedule& s) {
  require(std::isfinite(s.learning_rate) && s.learning_rate >= 0.0,
          "SgdSchedule: learning_rate must be finite and non-negative");
  require(s.epochs >= 1, "SgdSchedule: epochs must be >= 1");
  require(s.batch_size >= 1, "SgdSchedule: batch_size must be >= 1");
}

/// Batch objective contract: fills `grad` (same length as `params`) and
/// returns the batch-mean loss. Must be deterministic for a fixed batch.
using LossAndGrad = std::function<double(
    std::span<const std::size_t> batch, std::span<const double> params,
    std::span<double> grad)>;

struct SgdResult {
  std::vector<double> epoch_mean_loss;  // sample-weighted mean per epoch
};

/// Last-iterate SGD: epochs * ceil(|data|/batch_size) updates of
/// theta <- theta - lr * g, with a fresh data shuffle each epoch seeded by
/// (shuffle_seed, epoch). Aborts with coordinates on a non-finite loss or
/// gradient.
inline SgdResult run_sgd(std::span<double> params,
                         const LossAndGrad& loss_and_grad,
                         std::span<const std::size_t> data,
                         const SgdSchedule& sched) {
  validate(sched);
  require(!data.empty(), "run_sgd: empty data");
  SgdResult result;
  result.epoch_mean_loss.reserve(sched.epochs);
  std::vector<std::size_t> order(data.begin(), data.end());
  std::vector<double> grad(params.size());

  for (std::size_t epoch = 0; epoch < sched.epochs; ++epoch) {
    Rng rng(derive_seed(sched.shuffle_seed, Stream::member_shuffle, epoch));
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    for (std::size_t start = 0, b = 0; start < order.size();
         start += sched.batch_size, ++b) {
      const std::size_t len = std::min(sched.batch_size, order.size() - start);
      const std::span<const std::size_t> batch{order.data() + start, len};
      const double loss = loss_and_grad(batch, params, grad);
      bool finite = std::isfinite(loss);
      for (std::size_t i = 0; finite && i < grad.size(); ++i)
        finite = std::isfinite(grad[i]);
      if (!finite)
        fail("run_sgd: non-finite loss or gradient at epoch " +
             std::to_string(epoch) + " batch " + std::to_string(b));
      loss_sum += loss * static_cast<double>(len);
      for (std::size_t i = 0; i < params.size(); ++i)
        params[i] -= sched.learning_rate * grad[i];
    }
    result.epoch_mean_loss.push_back(loss_sum /
                                     static_cast<double>(order.size()));
  }
  return result;
}

/// Central-difference gradient oracle: (L(x+h e_i) - L(x-h e_i)) / 2h.
/// Test-side counterpart of every analytic gradient in the library.
inline std::vector<double> finite_diff_gradient(
    const std::function<double(std::span<const double>)>& loss,
    std::span<const double> params, double step) {
  require(step > 0.0, "finite_diff_gradient: step must be positive");
  std::vector<double> point(params.begin(), params.end());
  std::vector<double> grad(params.size());
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double saved = point[i];
    point[i] = saved + step;
    const double up = loss(point);
    point[i] = saved - step;
    const double down = loss(point);
    point[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down))
      fail("finite_diff_gradient: non-finite loss at coordinate " +
           std::to_string(i));
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

}  // namespace dpe
