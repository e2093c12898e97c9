#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "dpe/common.hpp"
#include "dpe/feature_store.hpp"
#include "dpe/optimizer.hpp"
#include "dpe/prototype.hpp"
#include "dpe/rng.hpp"
#include "dpe/sampling.hpp"

namespace dpe {

/// Ordered sequence of frozen prototype sets sharing (K, dim). Members are
/// appended once at the end of their training stage and never modified.
struct EnsembleModel {
  std::size_t class_count = 0;
  std::size_t dim = 0;
  std::vector<PrototypeSet> members;
  std::string config_digest;

  std::size_t n_members() const { return members.size(); }
};

inline void validate(const EnsembleModel& m) {
  require(!m.members.empty(), "EnsembleModel: no members");
  for (const auto& ps : m.members) {
    validate(ps);
    require(ps.class_count == m.class_count && ps.dim == m.dim,
            "EnsembleModel: member shape mismatch");
  }
}

/// FNV-1a digest over a member's exact parameter bits; used to verify the
/// freezing contract across training stages.
inline std::uint64_t member_digest(const PrototypeSet& ps) {
  std::uint64_t h =
      fnv1a64(ps.prototypes.data(), ps.prototypes.size() * sizeof(double));
  return fnv1a64(&ps.scale, sizeof(double), h);
}

/// Stage-2 hyperparameters. Temperature is configured as the inverse 1/tau.
/// The three diversification arms mirror the ablation: `none` trains every
/// member on the full data with no similarity penalty, `sampling_only` adds
/// per-member bootstrap subsets, `sampling_plus_ips` adds the
/// inter-prototype similarity loss on top.
struct TrainConfig {
  std::size_t n_members = 15;
  double inv_temperature = 30.0;
  double ips_weight = 1e5;  // alpha
  double learning_rate = 1e-3;
  std::size_t epochs = 100;
  std::size_t batch_size = 256;
  SamplingMode sampling{};
  std::uint64_t seed = 0;
  enum class Diversification { none, sampling_only, sampling_plus_ips };
  Diversification diversification = Diversification::sampling_plus_ips;
};

inline const char* to_string(TrainConfig::Diversification d) {
  switch (d) {
    case TrainConfig::Diversification::none: return "none";
    case TrainConfig::Diversification::sampling_only: return "sampling";
    case TrainConfig::Diversification::sampling_plus_ips: return "sampling+ips";
  }
  return "?";
}

inline void validate(const TrainConfig& c) {
  require(c.n_members >= 1, "TrainConfig: n_members must be >= 1");
  require(std::isfinite(c.inv_temperature) && c.inv_temperature > 0.0,
          "TrainConfig: inv_temperature must be positive");
  require(std::isfinite(c.ips_weight) && c.ips_weight >= 0.0,
          "TrainConfig: ips_weight must be non-negative");
  require(std::isfinite(c.learning_rate) && c.learning_rate > 0.0,
          "TrainConfig: learning_rate must be positive");
  require(c.epochs >= 1, "TrainConfig: epochs must be >= 1");
  require(c.batch_size >= 1, "TrainConfig: batch_size must be >= 1");
}

/// Applies the diversification arm's forcing rules: `none` pins the fixed
/// full subset and a zero similarity weight, `sampling_only` pins the zero
/// similarity weight.
inline TrainConfig resolve(const TrainConfig& c) {
  validate(c);
  TrainConfig r = c;
  switch (r.diversification) {
    case TrainConfig::Diversification::none:
      r.sampling.kind = SamplingMode::Kind::fixed_full;
      r.sampling.per_cell_size.reset();
      r.ips_weight = 0.0;
      break;
    case TrainConfig::Diversification::sampling_only:
      r.ips_weight = 0.0;
      break;
    case TrainConfig::Diversification::sampling_plus_ips:
      break;
  }
  return r;
}

inline std::string canonical_config_text(const TrainConfig& c) {
  auto fmt = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  std::string out;
  out += "n_members=" + std::to_string(c.n_members) + "\n";
  out += "inv_temperature=" + fmt(c.inv_temperature) + "\n";
  out += "ips_weight=" + fmt(c.ips_weight) + "\n";
  out += "learning_rate=" + fmt(c.learning_rate) + "\n";
  out += "epochs=" + std::to_string(c.epochs) + "\n";
  out += "batch_size=" + std::to_string(c.batch_size) + "\n";
  out += std::string("sampling=") + to_string(c.sampling.kind) + "\n";
  out += "per_cell_size=" +
         (c.sampling.per_cell_size
              ? std::to_string(*c.sampling.per_cell_size)
              : std::string("min")) +
         "\n";
  out += std::string("diversification=") + to_string(c.diversification) + "\n";
  out += "seed=" + std::to_string(c.seed) + "\n";
  return out;
}

inline std::string config_digest(const TrainConfig& c) {
  return hex64(fnv1a64(canonical_config_text(c)));
}

// ---------------------------------------------------------------------------
// Inter-prototype similarity (IPS) loss.
//
// For the current stage n = |frozen| + 1, over same-class prototypes of
// stages 1..n:
//
//   L_IPS = sum_k sum_{i != j} |<p_i^(k), p_j^(k)>| / (n * d)
//
// Pairs are ordered, so each unordered pair contributes twice. Terms among
// frozen stages are constants: they enter the value but not the gradient.

namespace detail {

inline void check_ips_shapes(const PrototypeSet& current,
                             std::span<const PrototypeSet> frozen) {
  for (const auto& f : frozen)
    require(f.class_count == current.class_count && f.dim == current.dim,
            "ips: frozen member shape mismatch");
}

/// Ordered-pair sum among frozen members only; constant during a stage.
inline double ips_frozen_constant(std::span<const PrototypeSet> frozen) {
  double total = 0.0;
  for (std::size_t a = 0; a < frozen.size(); ++a)
    for (std::size_t b = a + 1; b < frozen.size(); ++b)
      for (std::size_t k = 0; k < frozen[a].class_count; ++k)
        total +=
            2.0 * std::abs(dot(frozen[a].prototype(k), frozen[b].prototype(k)));
  return total;
}

/// Ordered-pair sum between the current member and every frozen member.
inline double ips_cross_term(const PrototypeSet& current,
                             std::span<const PrototypeSet> frozen) {
  double total = 0.0;
  for (const auto& f : frozen)
    for (std::size_t k = 0; k < current.class_count; ++k)
      total += 2.0 * std::abs(dot(current.prototype(k), f.prototype(k)));
  return total;
}

}  // namespace detail

/// Similarity-loss value for the current stage. Empty frozen list (stage 1) has an
/// empty pair sum and returns 0.
inline double ips_loss(const PrototypeSet& current,
                       std::span<const PrototypeSet> frozen) {
  detail::check_ips_shapes(current, frozen);
  if (frozen.empty()) return 0.0;
  const double n = static_cast<double>(frozen.size() + 1);
  const double d = static_cast<double>(current.dim);
  return (detail::ips_frozen_constant(frozen) +
          detail::ips_cross_term(current, frozen)) /
         (n * d);
}

/// Gradient of ips_loss with respect to the current prototypes only, using
/// the |.| subgradient sign(<.,.>) with sign(0) = 0.
inline std::vector<double> ips_gradient(const PrototypeSet& current,
                                        std::span<const PrototypeSet> frozen) {
  detail::check_ips_shapes(current, frozen);
  std::vector<double> grad(current.class_count * current.dim, 0.0);
  if (frozen.empty()) return grad;
  const double coef = 2.0 / (static_cast<double>(frozen.size() + 1) *
                             static_cast<double>(current.dim));
  for (const auto& f : frozen) {
    for (std::size_t k = 0; k < current.class_count; ++k) {
      const double ip = dot(current.prototype(k), f.prototype(k));
      if (ip == 0.0) continue;
      const double s = ip > 0 ? coef : -coef;
      const auto fp = f.prototype(k);
      double* gk = grad.data() + k * current.dim;
      for (std::size_t j = 0; j < current.dim; ++j) gk[j] += s * fp[j];
    }
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Sequential stage training (stage 2 of the two-stage protocol).

namespace detail {

/// Parameter layout used by the SGD loop: K*dim prototype coordinates then
/// d_s as the final entry.
inline PrototypeSet params_to_prototype_set(std::span<const double> params,
                                            std::size_t K, std::size_t dim) {
  PrototypeSet ps;
  ps.class_count = K;
  ps.dim = dim;
  ps.prototypes.assign(params.begin(), params.end() - 1);
  ps.scale = params.back();
  return ps;
}

struct MemberTrainInputs {
  std::span<const double> x_hat;  // unit rows of the full store
  std::span<const std::int32_t> labels;
  std::size_t dim = 0;
  std::size_t class_count = 0;
};

inline PrototypeSet train_member_impl(const MemberTrainInputs& in,
                                      std::span<const std::size_t> subset,
                                      std::span<const PrototypeSet> frozen,
                                      const TrainConfig& cfg,
                                      std::uint64_t member_seed,
                                      double* final_epoch_loss) {
  require(!subset.empty(), "train_member: empty subset");
  std::vector<std::size_t> class_hits(in.class_count, 0);
  for (std::size_t i : subset)
    class_hits[static_cast<std::size_t>(in.labels[i])]++;
  for (std::size_t k = 0; k < in.class_count; ++k)
    if (class_hits[k] == 0)
      fail("train_member: subset has no sample of class " + std::to_string(k));

  const std::size_t K = in.class_count;
  const std::size_t dim = in.dim;
  const double tau = 1.0 / cfg.inv_temperature;
  const double alpha = cfg.ips_weight;

  // Prototypes start as Normal(0, 0.01^2) draws, d_s at 1.0 so the initial
  // distance is the plain normalized Euclidean one.
  std::vector<double> params(K * dim + 1);
  Rng init_rng(derive_seed(member_seed, Stream::member_init, 0));
  for (std::size_t k = 0; k < K; ++k) {
    double* row = params.data() + k * dim;
    double n2 = 0.0;
    do {
      n2 = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        row[j] = 0.01 * init_rng.next_gaussian();
        n2 += row[j] * row[j];
      }
    } while (n2 == 0.0);
  }
  params.back() = 1.0;

  const double ips_constant =
      (alpha > 0.0 && !frozen.empty()) ? ips_frozen_constant(frozen) : 0.0;
  const double ips_norm =
      static_cast<double>(frozen.size() + 1) * static_cast<double>(dim);

  const LossAndGrad loss_and_grad =
      [&](std::span<const std::size_t> batch, std::span<const double> p,
          std::span<double> grad) -> double {
    const PrototypeSet current = params_to_prototype_set(p, K, dim);
    const PreparedPrototypes w = prepare(current);
    LossGradients g = loss_gradients_prenormalized(in.x_hat, dim, in.labels,
                                                   batch, w, tau);
    double loss = g.loss;
    if (alpha > 0.0 && !frozen.empty()) {
      loss += alpha * (ips_constant + ips_cross_term(current, frozen)) /
              ips_norm;
      const auto ig = ips_gradient(current, frozen);
      for (std::size_t i = 0; i < ig.size(); ++i)
        g.prototypes[i] += alpha * ig[i];
    }
    std::copy(g.prototypes.begin(), g.prototypes.end(), grad.begin());
    grad.back() = g.scale;
    return loss;
  };

  SgdSchedule sched{cfg.learning_rate, cfg.epochs, cfg.batch_size,
                    member_seed};
  const SgdResult res = run_sgd(params, loss_and_grad, subset, sched);
  if (final_epoch_loss) *final_epoch_loss = res.epoch_mean_loss.back();

  PrototypeSet out = params_to_prototype_set(params, K, dim);
  validate(out);
  return out;
}

}  // namespace detail

/// Trains one ensemble member on `subset` by mini-batch SGD on
/// batch_loss + alpha * ips_loss against the frozen predecessors. The frozen
/// members are read only inside the IPS terms and are never modified.
/// Deterministic in (store, subset, frozen, cfg, member_seed).
inline PrototypeSet train_member(const FeatureStore& store,
                                 std::span<const std::size_t> subset,
                                 std::span<const PrototypeSet> frozen,
                                 const TrainConfig& cfg,
                                 std::uint64_t member_seed) {
  validate(cfg);
  const auto x_hat = detail::normalize_features(store);
  detail::MemberTrainInputs in{
      x_hat, store.class_labels, store.dim,
      static_cast<std::size_t>(store.class_count)};
  for (const auto& f : frozen)
    require(f.dim == store.dim &&
                f.class_count == static_cast<std::size_t>(store.class_count),
            "train_member: frozen member shape mismatch");
  return detail::train_member_impl(in, subset, frozen, cfg, member_seed,
                                   nullptr);
}

/// Algorithm stage 2: members are trained sequentially, member j on subset j
/// of subset_sequence, against all previously frozen members. The member
/// seed tree is derive_seed(cfg.seed, Stream::member_root, j), so prefixes
/// of a larger ensemble are bit-identical to a smaller run.
inline EnsembleModel train_ensemble(const FeatureStore& store,
                                    const TrainConfig& cfg,
                                    std::vector<double>* final_losses = nullptr) {
  const TrainConfig rc = resolve(cfg);
  validate(store);
  const auto subsets =
      subset_sequence(store, rc.sampling, rc.seed, rc.n_members);
  const auto x_hat = detail::normalize_features(store);
  detail::MemberTrainInputs in{
      x_hat, store.class_labels, store.dim,
      static_cast<std::size_t>(store.class_count)};

  EnsembleModel model;
  model.class_count = static_cast<std::size_t>(store.class_count);
  model.dim = store.dim;
  model.config_digest = config_digest(rc);
  model.members.reserve(rc.n_members);
  if (final_losses) final_losses->clear();

  for (std::size_t j = 0; j < rc.n_members; ++j) {
    double last_loss = 0.0;
    PrototypeSet member = detail::train_member_impl(
        in, subsets[j], model.members,
        rc, derive_seed(rc.seed, Stream::member_root, j), &last_loss);
    model.members.push_back(std::move(member));
    if (final_losses) final_losses->push_back(last_loss);
  }
  return model;
}

// ---------------------------------------------------------------------------
// Inference (ensemble aggregation rule) and inspection. Training is
// inherently sequential across members; everything below is pure over a
// frozen model and safe for concurrent callers.

namespace detail {

struct PreparedEnsemble {
  std::vector<PreparedPrototypes> members;
  std::size_t class_count = 0;
};

inline PreparedEnsemble prepare(const EnsembleModel& m) {
  PreparedEnsemble pe;
  pe.class_count = m.class_count;
  pe.members.reserve(m.members.size());
  for (const auto& ps : m.members) pe.members.push_back(prepare(ps));
  return pe;
}

inline void ensemble_probabilities_prenormalized(std::span<const double> x_hat,
                                                 const PreparedEnsemble& pe,
                                                 std::span<double> out) {
  const std::size_t K = pe.class_count;
  std::vector<double> r(K), prob(K);
  std::fill(out.begin(), out.end(), 0.0);
  for (const auto& w : pe.members) {
    unit_distances(x_hat, w, r);
    scaled_softmax_from_units(r, w.abs_scale, prob);
    for (std::size_t k = 0; k < K; ++k) out[k] += prob[k];
  }
  const double inv_n = 1.0 / static_cast<double>(pe.members.size());
  for (std::size_t k = 0; k < K; ++k) out[k] *= inv_n;
}

inline std::int32_t argmax_lowest(std::span<const double> v) {
  // Ties break toward the lowest class index.
  return static_cast<std::int32_t>(
      std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace detail

/// Arithmetic mean over members of the untempered per-member probabilities.
inline std::vector<double> ensemble_probabilities(std::span<const double> x,
                                                  const EnsembleModel& model) {
  validate(model);
  require(x.size() == model.dim, "ensemble_probabilities: dimension mismatch");
  detail::check_input_vector(x, "ensemble_probabilities");
  const auto pe = detail::prepare(model);
  const auto xu = detail::unit_vector(x);
  std::vector<double> out(model.class_count);
  detail::ensemble_probabilities_prenormalized(xu, pe, out);
  return out;
}

/// Ensemble decision rule: argmax of the averaged probabilities, ties broken
/// toward the lowest class index.
inline std::int32_t predict(std::span<const double> x,
                            const EnsembleModel& model) {
  return detail::argmax_lowest(ensemble_probabilities(x, model));
}

/// N x N pairwise cosine similarity of class-k prototypes across members
/// (the reporting view of prototype diversity).
inline std::vector<double> similarity_matrix(const EnsembleModel& model,
                                             std::size_t k) {
  validate(model);
  require(k < model.class_count, "similarity_matrix: class out of range");
  const std::size_t N = model.n_members();
  std::vector<double> sim(N * N);
  for (std::size_t a = 0; a < N; ++a) {
    const auto pa = model.members[a].prototype(k);
    const double na = norm2(pa);
    for (std::size_t b = 0; b < N; ++b) {
      const auto pb = model.members[b].prototype(k);
      sim[a * N + b] = dot(pa, pb) / (na * norm2(pb));
    }
  }
  return sim;
}

/// Mean absolute off-diagonal cosine similarity, averaged over classes;
/// the scalar summary used by the diversification ablation.
inline double mean_offdiag_abs_cosine(const EnsembleModel& model) {
  const std::size_t N = model.n_members();
  if (N < 2) return 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k < model.class_count; ++k) {
    const auto sim = similarity_matrix(model, k);
    for (std::size_t a = 0; a < N; ++a)
      for (std::size_t b = 0; b < N; ++b)
        if (a != b) total += std::abs(sim[a * N + b]);
  }
  return total / (static_cast<double>(model.class_count) *
                  static_cast<double>(N * (N - 1)));
}

/// Store indices of the top_k samples closest to prototype k of member j,
/// ascending by scaled distance, ties by index.
inline std::vector<std::size_t> nearest_samples(const EnsembleModel& model,
                                                std::size_t member_j,
                                                std::size_t class_k,
                                                const FeatureStore& store,
                                                std::size_t top_k) {
  validate(model);
  require(member_j < model.n_members(), "nearest_samples: member out of range");
  require(class_k < model.class_count, "nearest_samples: class out of range");
  require(store.dim == model.dim, "nearest_samples: dimension mismatch");
  require(top_k >= 1 && top_k <= store.n_samples,
          "nearest_samples: top_k out of range [1, n_samples]");
  const auto& member = model.members[member_j];
  const auto pu = detail::unit_vector(member.prototype(class_k));
  const double s = std::abs(member.scale);
  const auto x_hat = detail::normalize_features(store);
  std::vector<std::pair<double, std::size_t>> ranked(store.n_samples);
  for (std::size_t i = 0; i < store.n_samples; ++i) {
    const std::span<const double> xu{x_hat.data() + i * store.dim, store.dim};
    ranked[i] = {s * detail::unit_distance(xu, pu, nullptr), i};
  }
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(top_k),
                    ranked.end());
  std::vector<std::size_t> out(top_k);
  for (std::size_t i = 0; i < top_k; ++i) out[i] = ranked[i].second;
  return out;
}

}  // namespace dpe
