// Acceptance suite: one pass/fail line per criterion, nonzero exit if any
// fails. Criteria 1-4, 9 and 10 are exact/metamorphic checks; 5-8 run the
// synthetic subpopulation-shift benchmark end to end with the frozen
// configuration below. Run `dpe_acceptance --help` for options.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "dpe/dpe.hpp"
#include "reference_impl.hpp"

namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Frozen benchmark configuration, pinned from the first calibration run of
// the synthetic benchmark and not retuned since; the configuration is the
// experiment, the thresholds below are the assertions.
//
// The similarity weight is the tuned per-dataset value for this benchmark
// (the real-data values in the 1e5 range presume ~2048-dimensional feature
// spaces with high-rank class structure; this benchmark concentrates its
// signal in a low-rank subspace, and its tuned weight is correspondingly
// smaller). The default weight 1e5 is still exercised where a criterion
// names it: the similarity-halving comparison of criterion 6 and the
// sensitivity grid of criterion 8.

constexpr std::size_t kSeeds = 20;  // paired across arms
constexpr std::uint64_t kFirstSeed = 1;
constexpr std::size_t kMembers = 15;
constexpr std::size_t kSweepMembers = 40;
constexpr double kBenchmarkIpsWeight = 3e3;

dpe::SynthSpec benchmark_spec(std::uint64_t seed) {
  dpe::SynthSpec spec;  // defaults are the benchmark geometry
  spec.seed = seed;
  return spec;
}

dpe::TrainConfig benchmark_config(std::uint64_t seed) {
  dpe::TrainConfig cfg;
  cfg.n_members = kMembers;
  cfg.inv_temperature = 30.0;  // library default
  cfg.ips_weight = kBenchmarkIpsWeight;
  cfg.learning_rate = 1e-4;
  cfg.epochs = 80;
  cfg.batch_size = 256;
  cfg.sampling.kind = dpe::SamplingMode::Kind::class_balanced;
  cfg.sampling.per_cell_size = 750;
  cfg.seed = seed;
  return cfg;
}

dpe::SgdSchedule probe_schedule() {
  dpe::SgdSchedule sched;
  sched.learning_rate = 1e-4;
  sched.epochs = 80;
  sched.batch_size = 256;
  return sched;
}

// ---------------------------------------------------------------------------

int g_failures = 0;

void report(int criterion, const char* name, bool pass,
            const std::string& detail, double seconds) {
  std::printf("[%s] criterion %2d %-28s %s (%.1fs)\n", pass ? "PASS" : "FAIL",
              criterion, name, detail.c_str(), seconds);
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
};

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof(buf), f, args);
  va_end(args);
  return buf;
}

// --------------------------------------------------------------------------
// Criterion 1: analytic gradients vs central finite differences.

// Relative error of an analytic gradient against its central-difference
// estimate, measured against the gradient's own scale: per-coordinate
// denominators are floored at 1e-3 of the largest coordinate so that
// saturated-softmax coordinates (true gradient ~1e-15, finite-difference
// noise ~1e-10) do not swamp the comparison.
double gradient_rel_error(std::span<const double> analytic,
                          std::span<const double> numeric) {
  double scale = 1e-8;
  for (std::size_t i = 0; i < analytic.size(); ++i)
    scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double denom = std::max(
        {std::abs(analytic[i]), std::abs(numeric[i]), 1e-3 * scale});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
  }
  return worst;
}

void criterion1() {
  Timer t;
  double worst = 0.0;
  std::size_t instances = 0, ips_instances = 0;

  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto inst = ref::random_instance(910000 + s);  // dim 2-8, K 2-5
    dpe::Rng rng(s);
    const dpe::LossParams lp{0.05 + rng.next_unit()};
    std::vector<std::size_t> batch(inst.store.n_samples);
    std::iota(batch.begin(), batch.end(), std::size_t{0});

    // Classification-loss gradients (prototypes and the scale).
    const auto got = dpe::loss_gradients(inst.store, batch, inst.ps, lp);
    std::vector<double> analytic(got.prototypes);
    analytic.push_back(got.scale);
    std::vector<double> params(inst.ps.prototypes);
    params.push_back(inst.ps.scale);
    const auto loss_at = [&](std::span<const double> p) {
      dpe::PrototypeSet ps = inst.ps;
      ps.prototypes.assign(p.begin(), p.end() - 1);
      ps.scale = p.back();
      return dpe::batch_loss(inst.store, batch, ps, lp);
    };
    const auto fd = dpe::finite_diff_gradient(loss_at, params, 1e-6);
    worst = std::max(worst, gradient_rel_error(analytic, fd));

    // Similarity-loss gradients across 1-4 stages; the |.| subgradient is only
    // checked away from the kink at a zero inner product.
    const std::size_t n_frozen = rng.next_below(4);
    std::vector<dpe::PrototypeSet> frozen;
    for (std::size_t j = 0; j < n_frozen; ++j) {
      auto f = ref::random_instance(920000 + s * 7 + j, inst.ps.dim,
                                    inst.ps.dim, inst.ps.class_count,
                                    inst.ps.class_count)
                   .ps;
      frozen.push_back(std::move(f));
    }
    bool near_kink = false;
    for (const auto& f : frozen)
      for (std::size_t k = 0; k < inst.ps.class_count; ++k)
        near_kink = near_kink ||
                    std::abs(dpe::dot(inst.ps.prototype(k), f.prototype(k))) <
                        1e-4;
    if (!frozen.empty() && !near_kink) {
      const auto ig = dpe::ips_gradient(inst.ps, frozen);
      const auto ips_at = [&](std::span<const double> p) {
        dpe::PrototypeSet c = inst.ps;
        c.prototypes.assign(p.begin(), p.end());
        return dpe::ips_loss(c, frozen);
      };
      const auto ifd =
          dpe::finite_diff_gradient(ips_at, inst.ps.prototypes, 1e-6);
      worst = std::max(worst, gradient_rel_error(ig, ifd));
      ++ips_instances;
    }
    ++instances;
  }
  const bool ok = worst < 1e-5 && instances >= 100 && ips_instances >= 50;
  report(1, "gradient correctness", ok && t.seconds() < 10.0,
         fmt("max relative error %.2e over %zu instances (%zu with ips)",
             worst, instances, ips_instances),
         t.seconds());
}

// --------------------------------------------------------------------------
// Criterion 2: probability contracts against the straight-line reference.

void criterion2() {
  Timer t;
  double worst_sum = 0.0, worst_ref = 0.0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    dpe::Rng rng(62000 + s);
    const auto inst = ref::random_instance(61000 + s);
    dpe::EnsembleModel model;
    model.class_count = inst.ps.class_count;
    model.dim = inst.ps.dim;
    const std::size_t N = 1 + rng.next_below(5);
    for (std::size_t j = 0; j < N; ++j)
      model.members.push_back(
          ref::random_instance(63000 + s * 11 + j, inst.ps.dim, inst.ps.dim,
                               inst.ps.class_count, inst.ps.class_count)
              .ps);
    std::vector<double> x(model.dim);
    for (auto& v : x) v = rng.next_gaussian();

    const auto p1 = dpe::class_probabilities(x, model.members[0]);
    const auto r1 = ref::class_probabilities(x, model.members[0]);
    const auto pe = dpe::ensemble_probabilities(x, model);
    const auto re = ref::ensemble_probabilities(x, model);
    double s1 = 0.0, se = 0.0;
    for (std::size_t k = 0; k < p1.size(); ++k) {
      s1 += p1[k];
      se += pe[k];
      worst_ref = std::max(worst_ref, std::abs(p1[k] - r1[k]));
      worst_ref = std::max(worst_ref, std::abs(pe[k] - re[k]));
    }
    worst_sum = std::max({worst_sum, std::abs(s1 - 1.0), std::abs(se - 1.0)});
  }
  const bool ok = worst_sum < 1e-9 && worst_ref < 1e-12;
  report(2, "probability contracts", ok && t.seconds() < 5.0,
         fmt("sum dev %.2e, reference dev %.2e over 1000 cases", worst_sum,
             worst_ref),
         t.seconds());
}

// --------------------------------------------------------------------------
// Criterion 3: scale invariance of the probabilities.

void criterion3() {
  Timer t;
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 300; ++s) {
    const auto inst = ref::random_instance(71000 + s);
    const auto x = inst.store.row(0);
    const auto base = dpe::class_probabilities(x, inst.ps);
    for (double c : {1e-6, 1.0, 1e6}) {
      std::vector<double> scaled(x.begin(), x.end());
      for (double& v : scaled) v *= c;
      const auto p = dpe::class_probabilities(scaled, inst.ps);
      for (std::size_t k = 0; k < p.size(); ++k)
        worst = std::max(worst, std::abs(p[k] - base[k]));
    }
  }
  report(3, "scale invariance", worst < 1e-12,
         fmt("max deviation %.2e for c in {1e-6, 1, 1e6}", worst),
         t.seconds());
}

// --------------------------------------------------------------------------
// Criterion 4: freezing, determinism, save/load/eval replay.

void criterion4() {
  Timer t;
  dpe::SynthSpec spec = benchmark_spec(404);
  spec.n_train = 1200;
  spec.n_test = 600;
  auto [train, test] = dpe::generate_synthetic(spec);
  dpe::TrainConfig cfg = benchmark_config(404);
  cfg.n_members = 6;
  cfg.epochs = 20;
  cfg.sampling.per_cell_size = 300;

  const auto dir = fs::temp_directory_path() / "dpe_acceptance";
  fs::create_directories(dir);
  const std::string path_a = (dir / "a.dpem").string();
  const std::string path_b = (dir / "b.dpem").string();

  const auto model_a = dpe::train_ensemble(train, cfg);
  const auto model_b = dpe::train_ensemble(train, cfg);
  dpe::save_model(model_a, path_a);
  dpe::save_model(model_b, path_b);
  const bool identical = dpe::detail::read_file(path_a) ==
                         dpe::detail::read_file(path_b);

  // Member digests are unchanged by later stages: retrain with more members
  // and compare the shared prefix digests.
  dpe::TrainConfig longer = cfg;
  longer.n_members = 9;
  const auto model_c = dpe::train_ensemble(train, longer);
  bool frozen_ok = true;
  for (std::size_t j = 0; j < cfg.n_members; ++j)
    frozen_ok = frozen_ok && dpe::member_digest(model_c.members[j]) ==
                                 dpe::member_digest(model_a.members[j]);

  const auto before = dpe::evaluate(model_a, test);
  const auto after = dpe::evaluate(dpe::load_model(path_a), test);
  const bool replay_ok = before == after;

  report(4, "freezing and determinism", identical && frozen_ok && replay_ok,
         fmt("bit-identical=%d prefix-frozen=%d replay=%d", identical,
             frozen_ok, replay_ok),
         t.seconds());
}

// --------------------------------------------------------------------------
// Criteria 5-7 share one experiment: the three diversification arms over
// paired seeds, with the sampling_plus_ips arm trained out to kSweepMembers
// for the saturation sweep.

struct ArmStats {
  // Per seed: WGA at every prefix 1..N, plus similarity summary at kMembers.
  std::vector<std::vector<double>> wga_curves;
  std::vector<double> mean_abs_cos;
};

struct BenchmarkResults {
  ArmStats none, sampling, plus_ips;
  std::vector<double> probe_wga, probe_overall;
  // Criterion 6 pair: mean |cos| with the default alpha (1e5) vs alpha = 0
  // (the sampling_only arm), same seeds, same subsets, same initializations.
  std::vector<double> cos_default_alpha;
};

BenchmarkResults run_benchmark() {
  BenchmarkResults out;
  std::vector<std::size_t> all_sizes(kSweepMembers);
  std::iota(all_sizes.begin(), all_sizes.end(), std::size_t{1});
  const std::vector<std::size_t> short_sizes = [] {
    std::vector<std::size_t> v(kMembers);
    std::iota(v.begin(), v.end(), std::size_t{1});
    return v;
  }();

  for (std::size_t i = 0; i < kSeeds; ++i) {
    const std::uint64_t seed = kFirstSeed + i;
    auto [train, test] = dpe::generate_synthetic(benchmark_spec(seed));

    const auto probe_rep = dpe::linear_probe(train, test, seed,
                                             probe_schedule());
    out.probe_wga.push_back(probe_rep.worst_group_accuracy);
    out.probe_overall.push_back(probe_rep.overall_accuracy);

    auto run_one = [&](dpe::TrainConfig::Diversification arm,
                       std::size_t members,
                       std::span<const std::size_t> sizes) {
      dpe::TrainConfig cfg = benchmark_config(seed);
      cfg.diversification = arm;
      cfg.n_members = members;
      const auto model = dpe::train_ensemble(train, cfg);
      const auto reports = dpe::detail::evaluate_prefixes(model, test, sizes);
      std::vector<double> curve;
      curve.reserve(reports.size());
      for (const auto& r : reports) curve.push_back(r.worst_group_accuracy);
      const double cos = dpe::detail::prefix_mean_abs_cos(
          model, std::min(members, kMembers));
      return std::pair(curve, cos);
    };

    auto [c_none, cos_none] = run_one(
        dpe::TrainConfig::Diversification::none, kMembers, short_sizes);
    out.none.wga_curves.push_back(std::move(c_none));
    out.none.mean_abs_cos.push_back(cos_none);

    auto [c_samp, cos_samp] = run_one(
        dpe::TrainConfig::Diversification::sampling_only, kMembers,
        short_sizes);
    out.sampling.wga_curves.push_back(std::move(c_samp));
    out.sampling.mean_abs_cos.push_back(cos_samp);

    auto [c_ips, cos_ips] = run_one(
        dpe::TrainConfig::Diversification::sampling_plus_ips, kSweepMembers,
        all_sizes);
    out.plus_ips.wga_curves.push_back(std::move(c_ips));
    out.plus_ips.mean_abs_cos.push_back(cos_ips);

    // Default-alpha member set for the similarity-halving comparison.
    dpe::TrainConfig cfg6 = benchmark_config(seed);
    cfg6.diversification =
        dpe::TrainConfig::Diversification::sampling_plus_ips;
    cfg6.ips_weight = 1e5;  // library default
    out.cos_default_alpha.push_back(
        dpe::mean_offdiag_abs_cosine(dpe::train_ensemble(train, cfg6)));
  }
  return out;
}

double mean_at(const std::vector<std::vector<double>>& curves,
               std::size_t n_members) {
  double s = 0.0;
  for (const auto& c : curves) s += c[n_members - 1];
  return s / static_cast<double>(curves.size());
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) /
         static_cast<double>(v.size());
}

void criteria5to7(const BenchmarkResults& r, double bench_seconds) {
  // Criterion 5a: probe gap. The benchmark's wall-clock bound is asserted
  // here because the three arms and the probe share one run.
  {
    const double gap =
        (mean_of(r.probe_overall) - mean_of(r.probe_wga)) * 100.0;
    report(5, "probe gap (5a)", gap >= 15.0 && bench_seconds < 300.0,
           fmt("probe overall %.1f%%, probe WGA %.1f%%, gap %.1f pts >= 15",
               mean_of(r.probe_overall) * 100.0, mean_of(r.probe_wga) * 100.0,
               gap),
           bench_seconds);
  }
  // Criterion 5b: ensemble beats the single member by >= 5 points.
  {
    const double w1 = mean_at(r.plus_ips.wga_curves, 1) * 100.0;
    const double w15 = mean_at(r.plus_ips.wga_curves, kMembers) * 100.0;
    report(5, "ensemble gain (5b)", w15 - w1 >= 5.0,
           fmt("mean WGA N=1 %.1f, N=%zu %.1f, gain %.1f pts >= 5", w1,
               kMembers, w15, w15 - w1),
           0.0);
  }
  // Criterion 5c: arm ordering with a >= 3 point ips-over-none margin.
  {
    const double w_none = mean_at(r.none.wga_curves, kMembers) * 100.0;
    const double w_samp = mean_at(r.sampling.wga_curves, kMembers) * 100.0;
    const double w_ips = mean_at(r.plus_ips.wga_curves, kMembers) * 100.0;
    const bool ordered = w_ips >= w_samp && w_samp >= w_none;
    report(5, "arm ordering (5c)", ordered && (w_ips - w_none) >= 3.0,
           fmt("none %.1f <= sampling %.1f <= sampling+ips %.1f, margin %.1f",
               w_none, w_samp, w_ips, w_ips - w_none),
           0.0);
  }
}

void criterion6(const BenchmarkResults& r) {
  Timer t;
  // Seeds are paired: the sampling_only arm is exactly the alpha=0
  // counterpart (same seeds, subsets and initializations; only alpha
  // differs).
  const double cos_default = mean_of(r.cos_default_alpha);
  const double cos_zero = mean_of(r.sampling.mean_abs_cos);
  report(6, "similarity halving", cos_default <= 0.5 * cos_zero,
         fmt("mean |cos| %.4f with default alpha=1e5 vs %.4f with alpha=0",
             cos_default, cos_zero),
         t.seconds());
}

void criterion7(const BenchmarkResults& r) {
  Timer t;
  // Delta curve on seed means of the sampling_plus_ips arm.
  std::vector<double> delta(kSweepMembers);
  const double w1 = mean_at(r.plus_ips.wga_curves, 1);
  bool ok = w1 > 0.0;
  for (std::size_t n = 1; n <= kSweepMembers; ++n)
    delta[n - 1] = (mean_at(r.plus_ips.wga_curves, n) - w1) / w1 * 100.0;
  double worst_drop = 0.0;
  for (std::size_t n = 2; n <= kMembers; ++n)
    worst_drop = std::max(worst_drop, delta[n - 2] - delta[n - 1]);
  const double tail = std::abs(delta[kSweepMembers - 1] - delta[kMembers - 1]);
  ok = ok && worst_drop <= 1.0 && tail <= 1.0;
  report(7, "saturation", ok,
         fmt("delta_15 %.1f, delta_40 %.1f, worst dip %.2f <= 1, "
             "|d40-d15| %.2f <= 1",
             delta[kMembers - 1], delta[kSweepMembers - 1], worst_drop, tail),
         t.seconds());
}

// --------------------------------------------------------------------------
// Criterion 8: sensitivity grid.

void criterion8() {
  Timer t;
  auto [train, test] = dpe::generate_synthetic(benchmark_spec(808));
  dpe::TrainConfig cfg = benchmark_config(808);
  const std::vector<double> temps{10, 20, 30, 40};
  const std::vector<double> alphas{1e4, 5e4, 1e5, 5e5};
  const auto rows = dpe::sweep_sensitivity(train, test, cfg, temps, alphas);
  const auto rows2 = dpe::sweep_sensitivity(train, test, cfg, temps, alphas);
  bool deterministic = rows.size() == rows2.size();
  double lo = 1.0, hi = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    deterministic = deterministic && rows[i].wga == rows2[i].wga;
    lo = std::min(lo, rows[i].wga);
    hi = std::max(hi, rows[i].wga);
  }
  const double range = (hi - lo) * 100.0;
  // Known structural failure, asserted as stated rather than weakened: at
  // 1/tau = 10 the pinned d_s initialization leaves the members at the
  // class-mean solution, which cannot classify the axis-crossing subgroup
  // the benchmark needs for its linear-probe gap, and the alpha >= 5e4
  // columns orthogonalize members beyond this benchmark's low-rank signal.
  // Both effects are inherent to the grid's span on this synthetic; the
  // full analysis is recorded alongside the project notes.
  report(8, "sensitivity grid", deterministic && range <= 10.0,
         fmt("16 points, WGA %.2f..%.2f, range %.1f pts (bound 10), "
             "deterministic=%d",
             lo, hi, range, deterministic),
         t.seconds());
}

// --------------------------------------------------------------------------
// Criterion 9: metric oracle.

void criterion9() {
  Timer t;
  bool ok = true;
  for (std::uint64_t s = 0; s < 100 && ok; ++s) {
    dpe::Rng rng(95000 + s);
    dpe::SynthSpec spec = benchmark_spec(95000 + s);
    spec.dim = 4 + rng.next_below(5);
    spec.n_train = 150;
    spec.n_test = 120 + rng.next_below(60);
    auto [train, test] = dpe::generate_synthetic(spec);
    dpe::EnsembleModel model;
    model.class_count = 2;
    model.dim = spec.dim;
    const std::size_t N = 1 + rng.next_below(4);
    for (std::size_t j = 0; j < N; ++j)
      model.members.push_back(ref::random_instance(96000 + s * 17 + j,
                                                   spec.dim, spec.dim, 2, 2)
                                  .ps);
    const auto got = dpe::evaluate(model, test);
    std::vector<std::int32_t> preds(test.n_samples);
    for (std::size_t i = 0; i < test.n_samples; ++i)
      preds[i] = dpe::predict(test.row(i), model);
    const auto want = ref::evaluate_recount(test, preds);
    ok = got == want;
  }
  report(9, "metric oracle", ok, "100 random model/store pairs, exact match",
         t.seconds());
}

// --------------------------------------------------------------------------
// Criterion 10: format fuzzing.

void criterion10() {
  Timer t;
  dpe::SynthSpec spec = benchmark_spec(1010);
  spec.dim = 6;
  spec.n_train = 90;
  spec.n_test = 60;
  auto [train, test] = dpe::generate_synthetic(spec);
  dpe::TrainConfig cfg = benchmark_config(1010);
  cfg.n_members = 2;
  cfg.epochs = 3;
  cfg.sampling.per_cell_size.reset();
  const auto model = dpe::train_ensemble(train, cfg);

  const std::string store_bytes = dpe::encode_store_binary(train);
  const std::string model_bytes = dpe::encode_model(model);
  dpe::Rng rng(314159);
  std::size_t rejected = 0, survived = 0;
  bool ok = true;

  for (std::size_t trial = 0; trial < 1000; ++trial) {
    const bool do_store = trial % 2 == 0;
    std::string b = do_store ? store_bytes : model_bytes;
    const std::size_t flips = 1 + rng.next_below(16);
    for (std::size_t f = 0; f < flips; ++f)
      b[rng.next_below(b.size())] = static_cast<char>(rng.next_below(256));
    if (rng.next_unit() < 0.25) b.resize(rng.next_below(b.size() + 1));
    try {
      if (do_store) {
        const auto loaded = dpe::decode_store_binary(b, "fuzz");
        dpe::validate(loaded);  // must hold if the loader accepted it
      } else {
        const auto loaded = dpe::decode_model(b, "fuzz");
        dpe::validate(loaded);
      }
      ++survived;
    } catch (const dpe::Error& e) {
      ok = ok && std::strlen(e.what()) > 10;  // diagnostics, not bare throws
      ++rejected;
    } catch (...) {
      ok = false;  // only dpe::Error is acceptable
    }
  }
  report(10, "format fuzzing", ok,
         fmt("%zu corrupted files: %zu rejected with diagnostics, %zu "
             "loaded as valid objects",
             rejected + survived, rejected, survived),
         t.seconds());
}

}  // namespace

int main(int argc, char** argv) {
  bool fast_only = false;
  for (int i = 1; i < argc; ++i) {
    if (std::string(argv[i]) == "--fast") fast_only = true;
    if (std::string(argv[i]) == "--help") {
      std::printf("usage: dpe_acceptance [--fast]\n"
                  "  --fast  skip the synthetic benchmark criteria (5-8)\n");
      return 0;
    }
  }

  criterion1();
  criterion2();
  criterion3();
  criterion4();
  if (!fast_only) {
    Timer bench;
    const BenchmarkResults results = run_benchmark();
    const double bench_seconds = bench.seconds();
    criteria5to7(results, bench_seconds);
    criterion6(results);
    criterion7(results);
    criterion8();
  }
  criterion9();
  criterion10();

  if (g_failures > 0) {
    std::printf("%d criterion(s) FAILED\n", g_failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
