#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dpe/common.hpp"
#include "dpe/feature_store.hpp"

namespace dpe {

/// One ensemble member: K prototype vectors and a learnable distance scale.
/// The classifier is scale-invariant in both inputs and prototypes because
/// the distance normalizes its arguments; what a prototype encodes is a
/// direction in embedding space. Every operation in this header is a pure
/// function over its (immutable) inputs and safe to call concurrently.
struct PrototypeSet {
  std::size_t class_count = 0;  // K
  std::size_t dim = 0;
  std::vector<double> prototypes;  // K x dim, row-major
  double scale = 1.0;              // d_s

  std::span<const double> prototype(std::size_t k) const {
    return {prototypes.data() + k * dim, dim};
  }
  std::span<double> prototype_mut(std::size_t k) {
    return {prototypes.data() + k * dim, dim};
  }
};

struct LossParams {
  double temperature = 1.0;  // tau > 0
};

inline void validate(const PrototypeSet& ps) {
  require(ps.class_count >= 1, "PrototypeSet: class_count must be >= 1");
  require(ps.dim >= 1, "PrototypeSet: dim must be >= 1");
  require(ps.prototypes.size() == ps.class_count * ps.dim,
          "PrototypeSet: prototype matrix size != K*dim");
  require(std::isfinite(ps.scale) && ps.scale != 0.0,
          "PrototypeSet: scale must be finite and nonzero");
  for (std::size_t k = 0; k < ps.class_count; ++k) {
    const auto p = ps.prototype(k);
    if (!all_finite(p))
      fail("PrototypeSet: prototype " + std::to_string(k) + " is not finite");
    if (norm2(p) == 0.0)
      fail("PrototypeSet: prototype " + std::to_string(k) +
           " is the zero vector");
  }
}

inline void validate(const LossParams& lp) {
  require(std::isfinite(lp.temperature) && lp.temperature > 0.0,
          "LossParams: temperature must be positive");
}

namespace detail {

inline void check_input_vector(std::span<const double> x, const char* what) {
  if (!all_finite(x)) fail(std::string(what) + ": non-finite input vector");
  if (norm2(x) == 0.0) fail(std::string(what) + ": zero input vector");
}

inline std::vector<double> unit_vector(std::span<const double> x) {
  std::vector<double> u(x.begin(), x.end());
  const double n = norm2(x);
  for (double& v : u) v /= n;
  return u;
}

/// Prototype data pre-normalized for repeated distance evaluation.
struct PreparedPrototypes {
  std::size_t class_count = 0;
  std::size_t dim = 0;
  std::vector<double> unit;   // K x dim unit rows
  std::vector<double> norms;  // ||p_k||
  double abs_scale = 0.0;
  double sign_scale = 0.0;

  std::span<const double> row(std::size_t k) const {
    return {unit.data() + k * dim, dim};
  }
};

inline PreparedPrototypes prepare(const PrototypeSet& ps) {
  PreparedPrototypes w;
  w.class_count = ps.class_count;
  w.dim = ps.dim;
  w.unit.resize(ps.prototypes.size());
  w.norms.resize(ps.class_count);
  w.abs_scale = std::abs(ps.scale);
  w.sign_scale = ps.scale > 0 ? 1.0 : (ps.scale < 0 ? -1.0 : 0.0);
  for (std::size_t k = 0; k < ps.class_count; ++k) {
    const auto p = ps.prototype(k);
    const double n = norm2(p);
    if (n == 0.0)
      fail("prototype " + std::to_string(k) + " is the zero vector");
    w.norms[k] = n;
    for (std::size_t j = 0; j < ps.dim; ++j) w.unit[k * ps.dim + j] = p[j] / n;
  }
  return w;
}

/// Distance between unit vectors through the cosine: ||a - b|| on the unit
/// sphere equals sqrt(2 - 2 a.b). The max(0, .) guards the collinear case
/// against a negative round-off argument. cos_out may be null.
inline double unit_distance(std::span<const double> x_hat,
                            std::span<const double> p_hat, double* cos_out) {
  const double c = dot(x_hat, p_hat);
  if (cos_out) *cos_out = c;
  return std::sqrt(std::max(0.0, 2.0 - 2.0 * c));
}

/// Distances from one unit input to every prototype, scaled by |d_s|.
inline void scaled_distances(std::span<const double> x_hat,
                             const PreparedPrototypes& w,
                             std::span<double> dist_out,
                             std::span<double> cos_out) {
  for (std::size_t k = 0; k < w.class_count; ++k) {
    double c = 0.0;
    const double r = unit_distance(x_hat, w.row(k), &c);
    dist_out[k] = w.abs_scale * r;
    if (!cos_out.empty()) cos_out[k] = c;
  }
}

/// Unscaled unit-sphere distances to every prototype.
inline void unit_distances(std::span<const double> x_hat,
                           const PreparedPrototypes& w,
                           std::span<double> r_out) {
  for (std::size_t k = 0; k < w.class_count; ++k)
    r_out[k] = unit_distance(x_hat, w.row(k), nullptr);
}

/// Softmax of -dist/tau with max-subtraction; returns the normalizer of the
/// shifted exponentials so callers can reconstruct the log-sum-exp.
inline double tempered_softmax(std::span<const double> dist, double tau,
                               std::span<double> prob_out) {
  const double dmin = *std::min_element(dist.begin(), dist.end());
  double z = 0.0;
  for (std::size_t k = 0; k < dist.size(); ++k) {
    prob_out[k] = std::exp(-(dist[k] - dmin) / tau);
    z += prob_out[k];
  }
  for (std::size_t k = 0; k < dist.size(); ++k) prob_out[k] /= z;
  return z;
}

/// Softmax of -scale * r with min-subtraction applied to the unscaled
/// distances before the multiply: the stabilization shift stays exact and
/// no intermediate overflows for any scale magnitude (a product that
/// saturates to infinity only drives its exponential to zero; the minimal
/// term contributes exp(0) so the normalizer never vanishes).
inline double scaled_softmax_from_units(std::span<const double> r,
                                        double scale,
                                        std::span<double> prob_out) {
  const double rmin = *std::min_element(r.begin(), r.end());
  double z = 0.0;
  for (std::size_t k = 0; k < r.size(); ++k) {
    const double t = r[k] - rmin;
    prob_out[k] = std::exp(t == 0.0 ? 0.0 : -scale * t);
    z += prob_out[k];
  }
  for (std::size_t k = 0; k < r.size(); ++k) prob_out[k] /= z;
  return z;
}

/// Unit-normalized copies of every store row; rejects zero rows.
inline std::vector<double> normalize_features(const FeatureStore& s) {
  std::vector<double> out(s.features.size());
  for (std::size_t i = 0; i < s.n_samples; ++i) {
    const auto x = s.row(i);
    const double n = norm2(x);
    if (n == 0.0)
      fail("sample " + std::to_string(i) + " is the zero vector; the "
           "normalized distance is undefined");
    if (!all_finite(x))
      fail("sample " + std::to_string(i) + " has non-finite features");
    for (std::size_t j = 0; j < s.dim; ++j)
      out[i * s.dim + j] = x[j] / n;
  }
  return out;
}

}  // namespace detail

/// |d_s| * || x/||x|| - p/||p|| ||_2. Symmetric, invariant under positive
/// rescaling of either argument, bounded by 2|d_s|.
inline double scaled_distance(std::span<const double> x,
                              std::span<const double> p, double d_s) {
  require(x.size() == p.size(), "scaled_distance: dimension mismatch");
  detail::check_input_vector(x, "scaled_distance");
  detail::check_input_vector(p, "scaled_distance");
  const auto xu = detail::unit_vector(x);
  const auto pu = detail::unit_vector(p);
  return std::abs(d_s) * detail::unit_distance(xu, pu, nullptr);
}

/// P(y|x) of the single prototype classifier: softmax over classes of the
/// negated (untempered) scaled distances.
inline std::vector<double> class_probabilities(std::span<const double> x,
                                               const PrototypeSet& ps) {
  validate(ps);
  require(x.size() == ps.dim, "class_probabilities: dimension mismatch");
  detail::check_input_vector(x, "class_probabilities");
  const auto w = detail::prepare(ps);
  const auto xu = detail::unit_vector(x);
  std::vector<double> r(ps.class_count), prob(ps.class_count);
  detail::unit_distances(xu, w, r);
  detail::scaled_softmax_from_units(r, w.abs_scale, prob);
  return prob;
}

/// Cross-entropy of the tau-tempered distance softmax against label y.
inline double sample_loss(std::span<const double> x, std::int32_t y,
                          const PrototypeSet& ps, const LossParams& lp) {
  validate(ps);
  validate(lp);
  require(y >= 0 && static_cast<std::size_t>(y) < ps.class_count,
          "sample_loss: label out of range");
  require(x.size() == ps.dim, "sample_loss: dimension mismatch");
  detail::check_input_vector(x, "sample_loss");
  const auto w = detail::prepare(ps);
  const auto xu = detail::unit_vector(x);
  std::vector<double> r(ps.class_count);
  detail::unit_distances(xu, w, r);
  const double rmin = *std::min_element(r.begin(), r.end());
  const double sot = w.abs_scale / lp.temperature;
  auto arg = [&](double rk) {
    const double t = rk - rmin;
    return t == 0.0 ? 0.0 : sot * t;
  };
  double z = 0.0;
  for (double rk : r) z += std::exp(-arg(rk));
  return arg(r[static_cast<std::size_t>(y)]) + std::log(z);
}

/// Mean of sample_loss over the indexed rows of the store.
inline double batch_loss(const FeatureStore& store,
                         std::span<const std::size_t> indices,
                         const PrototypeSet& ps, const LossParams& lp) {
  require(!indices.empty(), "batch_loss: empty batch");
  require(store.dim == ps.dim, "batch_loss: dimension mismatch");
  double total = 0.0;
  for (std::size_t i : indices)
    total += sample_loss(store.row(i), store.class_labels[i], ps, lp);
  return total / static_cast<double>(indices.size());
}

struct LossGradients {
  std::vector<double> prototypes;  // K x dim
  double scale = 0.0;              // d/d(d_s), via sign(d_s) subgradient
  double loss = 0.0;               // batch_loss value from the same pass
};

namespace detail {

/// Fused batch loss + gradient over pre-normalized inputs. x_hat holds unit
/// rows of the full store; `indices` selects the batch. Gradients use the
/// chain rule through the softmax, the |d_s| subgradient (sign(d_s), 0 at 0)
/// and the input/prototype normalizations. Accumulation order is fixed
/// (batch order, then class order) so results are reproducible bit-for-bit.
inline LossGradients loss_gradients_prenormalized(
    std::span<const double> x_hat, std::size_t dim,
    std::span<const std::int32_t> labels,
    std::span<const std::size_t> indices, const PreparedPrototypes& w,
    double tau) {
  const std::size_t K = w.class_count;
  LossGradients g;
  g.prototypes.assign(K * dim, 0.0);
  std::vector<double> dist(K), cosv(K), prob(K);
  double total = 0.0;
  for (std::size_t i : indices) {
    const std::span<const double> xu{x_hat.data() + i * dim, dim};
    scaled_distances(xu, w, dist, cosv);
    const double dmin = *std::min_element(dist.begin(), dist.end());
    double z = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      prob[k] = std::exp(-(dist[k] - dmin) / tau);
      z += prob[k];
    }
    for (std::size_t k = 0; k < K; ++k) prob[k] /= z;
    const auto y = static_cast<std::size_t>(labels[i]);
    total += (dist[y] - dmin) / tau + std::log(z);

    for (std::size_t k = 0; k < K; ++k) {
      const double dldd = ((k == y ? 1.0 : 0.0) - prob[k]) / tau;
      // d dist / d d_s = sign(d_s) * r_k, with r_k = dist_k / |d_s|.
      const double r = dist[k] / (w.abs_scale > 0 ? w.abs_scale : 1.0);
      g.scale += dldd * w.sign_scale * r;
      if (r == 0.0) continue;  // collinear: distance subgradient taken as 0
      const double coef = -dldd * w.abs_scale / (r * w.norms[k]);
      const auto pu = w.row(k);
      double* gk = g.prototypes.data() + k * dim;
      const double c = cosv[k];
      for (std::size_t j = 0; j < dim; ++j)
        gk[j] += coef * (xu[j] - c * pu[j]);
    }
  }
  const double inv_n = 1.0 / static_cast<double>(indices.size());
  for (double& v : g.prototypes) v *= inv_n;
  g.scale *= inv_n;
  g.loss = total * inv_n;
  return g;
}

}  // namespace detail

/// Analytic gradient of batch_loss with respect to the prototype matrix and
/// the distance scale d_s.
inline LossGradients loss_gradients(const FeatureStore& store,
                                    std::span<const std::size_t> indices,
                                    const PrototypeSet& ps,
                                    const LossParams& lp) {
  require(!indices.empty(), "loss_gradients: empty batch");
  require(store.dim == ps.dim, "loss_gradients: dimension mismatch");
  validate(ps);
  validate(lp);
  const auto w = detail::prepare(ps);
  const auto x_hat = detail::normalize_features(store);
  return detail::loss_gradients_prenormalized(
      x_hat, store.dim, store.class_labels, indices, w, lp.temperature);
}

}  // namespace dpe
