// Command-line driver for the diversified prototypical ensemble library:
// synthetic benchmark generation, stage-2 training, worst-group evaluation,
// diversification ablations, hyperparameter sweeps and prototype inspection.
// Every command is a pure function of its input files and flags and writes
// a manifest next to its outputs.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dpe/dpe.hpp"

namespace fs = std::filesystem;

namespace {

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
};

std::vector<double> parse_double_list(const std::string& text,
                                      const std::string& flag) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    if (comma == std::string::npos) comma = text.size();
    out.push_back(
        dpe::detail::parse_double(text.substr(start, comma - start), flag));
    start = comma + 1;
  }
  return out;
}

std::vector<std::size_t> parse_size_list(const std::string& text,
                                         const std::string& flag) {
  std::vector<std::size_t> out;
  for (double v : parse_double_list(text, flag)) {
    if (v < 1 || v != static_cast<double>(static_cast<std::size_t>(v)))
      dpe::fail(flag + ": expected positive integers, got " + text);
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

std::vector<std::vector<double>> parse_vector_list(const std::string& text,
                                                   const std::string& flag) {
  std::vector<std::vector<double>> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t semi = text.find(';', start);
    if (semi == std::string::npos) semi = text.size();
    out.push_back(parse_double_list(text.substr(start, semi - start), flag));
    start = semi + 1;
  }
  return out;
}

struct TrainFlags {
  std::string config_path;
  std::optional<std::size_t> n_members;
  std::optional<double> inv_temperature;
  std::optional<double> ips_weight;
  std::optional<double> learning_rate;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch_size;
  std::optional<std::string> sampling;
  std::optional<std::size_t> per_cell_size;
  std::optional<std::string> diversification;
  std::optional<std::uint64_t> seed;

  void register_on(CLI::App* cmd) {
    cmd->add_option("--config", config_path,
                    "key=value config file (flags override it)");
    cmd->add_option("--n-members", n_members, "ensemble size N");
    cmd->add_option("--inv-temperature", inv_temperature,
                    "inverse training temperature 1/tau");
    cmd->add_option("--ips-weight", ips_weight,
                    "inter-prototype similarity weight alpha");
    cmd->add_option("--learning-rate", learning_rate, "SGD learning rate");
    cmd->add_option("--epochs", epochs, "SGD epochs per member");
    cmd->add_option("--batch-size", batch_size, "SGD mini-batch size");
    cmd->add_option("--sampling", sampling,
                    "subset sampling: class|group|fixed");
    cmd->add_option("--per-cell-size", per_cell_size,
                    "samples per cell (default: smallest cell)");
    cmd->add_option("--diversification", diversification,
                    "arm: none|sampling|sampling+ips");
    cmd->add_option("--seed", seed, "base seed for all random streams");
  }

  dpe::TrainConfig build() const {
    dpe::TrainConfig cfg;
    if (!config_path.empty()) cfg = dpe::load_train_config(config_path);
    if (n_members) cfg.n_members = *n_members;
    if (inv_temperature) cfg.inv_temperature = *inv_temperature;
    if (ips_weight) cfg.ips_weight = *ips_weight;
    if (learning_rate) cfg.learning_rate = *learning_rate;
    if (epochs) cfg.epochs = *epochs;
    if (batch_size) cfg.batch_size = *batch_size;
    if (sampling)
      cfg.sampling.kind = dpe::parse_sampling_kind(*sampling, "--sampling");
    if (per_cell_size) cfg.sampling.per_cell_size = *per_cell_size;
    if (diversification)
      cfg.diversification =
          dpe::parse_diversification(*diversification, "--diversification");
    if (seed) cfg.seed = *seed;
    dpe::validate(cfg);
    return cfg;
  }
};

void add_config_to_manifest(dpe::RunManifest& manifest,
                            const dpe::TrainConfig& resolved) {
  std::istringstream lines(dpe::canonical_config_text(resolved));
  std::string line;
  while (std::getline(lines, line))
    if (const auto eq = line.find('='); eq != std::string::npos)
      manifest.add("config." + line.substr(0, eq), line.substr(eq + 1));
  manifest.add("config.digest", dpe::config_digest(resolved));
}

int cmd_synth(const std::string& out_dir, dpe::SynthSpec spec,
              const std::string& proportions, const std::string& class_means,
              const std::string& attr_offsets, bool also_csv) {
  if (!proportions.empty())
    spec.group_fractions = parse_double_list(proportions, "--proportions");
  if (!class_means.empty())
    spec.class_means = parse_vector_list(class_means, "--class-means");
  if (!attr_offsets.empty())
    spec.attr_offsets = parse_vector_list(attr_offsets, "--attr-offsets");
  try {
    dpe::validate(spec);
  } catch (const dpe::Error& e) {
    dpe::fail(std::string("invalid synthetic spec (--proportions / "
                          "--class-means / --attr-offsets / --dim): ") +
              e.what());
  }

  Timer timer;
  fs::create_directories(out_dir);
  auto [train, test] = dpe::generate_synthetic(spec);
  const std::string train_path = (fs::path(out_dir) / "train.dpef").string();
  const std::string test_path = (fs::path(out_dir) / "test.dpef").string();
  dpe::save_store(train, train_path, dpe::StoreFormat::binary);
  dpe::save_store(test, test_path, dpe::StoreFormat::binary);
  if (also_csv) {
    dpe::save_store(train, (fs::path(out_dir) / "train.csv").string(),
                    dpe::StoreFormat::csv);
    dpe::save_store(test, (fs::path(out_dir) / "test.csv").string(),
                    dpe::StoreFormat::csv);
  }

  auto join = [](const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%s%.17g", i ? "," : "", v[i]);
      s += buf;
    }
    return s;
  };
  dpe::RunManifest manifest;
  manifest.command = "synth";
  manifest.add("synth.dim", std::to_string(spec.dim));
  manifest.add("synth.noise_sigma", std::to_string(spec.noise_sigma));
  manifest.add("synth.n_train", std::to_string(spec.n_train));
  manifest.add("synth.n_test", std::to_string(spec.n_test));
  manifest.add("synth.seed", std::to_string(spec.seed));
  for (std::size_t c = 0; c < spec.class_means.size(); ++c)
    manifest.add("synth.class_mean." + std::to_string(c),
                 join(spec.class_means[c]));
  for (std::size_t a = 0; a < spec.attr_offsets.size(); ++a)
    manifest.add("synth.attr_offset." + std::to_string(a),
                 join(spec.attr_offsets[a]));
  manifest.add("synth.fractions", join(spec.group_fractions));
  manifest.add("output.train", train_path);
  manifest.add("output.test", test_path);
  dpe::write_manifest(manifest,
                      (fs::path(out_dir) / "manifest.kv").string(),
                      timer.seconds());
  std::cout << "wrote " << train_path << " (" << train.n_samples
            << " samples) and " << test_path << " (" << test.n_samples
            << " samples)\n";
  return 0;
}

int cmd_train(const std::string& features_path, const std::string& out_path,
              const TrainFlags& flags, bool print_config) {
  const dpe::TrainConfig cfg = flags.build();
  const dpe::TrainConfig resolved = dpe::resolve(cfg);
  if (print_config) {
    std::cout << dpe::canonical_config_text(resolved);
    return 0;
  }
  Timer timer;
  const dpe::FeatureStore train =
      dpe::load_store(features_path, dpe::StoreFormat::binary);
  std::vector<double> final_losses;
  const dpe::EnsembleModel model =
      dpe::train_ensemble(train, resolved, &final_losses);
  dpe::save_model(model, out_path);

  for (std::size_t j = 0; j < final_losses.size(); ++j)
    std::cout << "member " << j << ": final_subset_loss=" << final_losses[j]
              << "\n";

  dpe::RunManifest manifest;
  manifest.command = "train";
  manifest.add_input_digest("features", features_path);
  add_config_to_manifest(manifest, resolved);
  manifest.add("output.model", out_path);
  dpe::write_manifest(manifest, out_path + ".manifest", timer.seconds());
  std::cout << "wrote " << out_path << " (" << model.n_members()
            << " members, K=" << model.class_count << ", dim=" << model.dim
            << ")\n";
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& features_path,
             const std::string& out_base) {
  Timer timer;
  const dpe::EnsembleModel model = dpe::load_model(model_path);
  const dpe::FeatureStore test =
      dpe::load_store(features_path, dpe::StoreFormat::binary);
  const dpe::EvalReport report = dpe::evaluate(model, test);
  if (report.groups_are_classes)
    std::cerr << "note: store has no group labels; worst-group accuracy "
                 "degrades to worst-class accuracy\n";

  std::cout << dpe::report_to_kv(report);
  if (!out_base.empty()) {
    dpe::detail::write_file(out_base + ".kv", dpe::report_to_kv(report));
    dpe::detail::write_file(out_base + ".csv", dpe::report_to_csv(report));
    dpe::RunManifest manifest;
    manifest.command = "eval";
    manifest.add_input_digest("model", model_path);
    manifest.add_input_digest("features", features_path);
    manifest.add("output.kv", out_base + ".kv");
    manifest.add("output.csv", out_base + ".csv");
    dpe::write_manifest(manifest, out_base + ".manifest", timer.seconds());
  }
  return 0;
}

int cmd_ablate(const std::string& features_path, const std::string& test_path,
               const std::string& out_base, const TrainFlags& flags,
               std::size_t n_seeds, std::uint64_t base_seed,
               const std::string& sizes_text) {
  Timer timer;
  const dpe::TrainConfig base = flags.build();
  const auto sizes = parse_size_list(sizes_text, "--sizes");
  const dpe::FeatureStore train =
      dpe::load_store(features_path, dpe::StoreFormat::binary);
  const dpe::FeatureStore test =
      dpe::load_store(test_path, dpe::StoreFormat::binary);
  std::vector<std::uint64_t> seeds(n_seeds);
  for (std::size_t i = 0; i < n_seeds; ++i) seeds[i] = base_seed + i;

  const auto rows = dpe::run_ablation(train, test, base, seeds, sizes);
  const std::string csv = dpe::ablation_table_csv(rows);
  std::cout << csv;
  if (!out_base.empty()) {
    dpe::detail::write_file(out_base + ".csv", csv);
    dpe::RunManifest manifest;
    manifest.command = "ablate";
    manifest.add_input_digest("features", features_path);
    manifest.add_input_digest("test_features", test_path);
    add_config_to_manifest(manifest, base);
    for (std::size_t i = 0; i < seeds.size(); ++i)
      manifest.add("seed." + std::to_string(i), std::to_string(seeds[i]));
    manifest.add("sizes", sizes_text);
    manifest.add("output.table", out_base + ".csv");
    dpe::write_manifest(manifest, out_base + ".manifest", timer.seconds());
  }
  return 0;
}

int cmd_sweep_size(const std::string& features_path,
                   const std::string& test_path, const std::string& out_base,
                   const TrainFlags& flags, const std::string& sizes_text) {
  Timer timer;
  const dpe::TrainConfig cfg = flags.build();
  const auto sizes = parse_size_list(sizes_text, "--sizes");
  const dpe::FeatureStore train =
      dpe::load_store(features_path, dpe::StoreFormat::binary);
  const dpe::FeatureStore test =
      dpe::load_store(test_path, dpe::StoreFormat::binary);
  const auto rows = dpe::sweep_ensemble_size(train, test, cfg, sizes);
  std::string csv = "n_members,wga,balanced_accuracy,overall_accuracy,delta\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%zu,%.6f,%.6f,%.6f,%.4f\n", r.n_members,
                  r.wga, r.balanced_accuracy, r.overall_accuracy,
                  r.delta_percent);
    csv += buf;
  }
  std::cout << csv;
  if (!out_base.empty()) {
    dpe::detail::write_file(out_base + ".csv", csv);
    dpe::RunManifest manifest;
    manifest.command = "sweep-size";
    manifest.add_input_digest("features", features_path);
    manifest.add_input_digest("test_features", test_path);
    add_config_to_manifest(manifest, dpe::resolve(cfg));
    manifest.add("sizes", sizes_text);
    manifest.add("output.table", out_base + ".csv");
    dpe::write_manifest(manifest, out_base + ".manifest", timer.seconds());
  }
  return 0;
}

int cmd_sweep_sensitivity(const std::string& features_path,
                          const std::string& test_path,
                          const std::string& out_base, const TrainFlags& flags,
                          const std::string& inv_temps_text,
                          const std::string& alphas_text) {
  Timer timer;
  const dpe::TrainConfig cfg = flags.build();
  const auto inv_temps =
      parse_double_list(inv_temps_text, "--inv-temperatures");
  const auto alphas = parse_double_list(alphas_text, "--ips-weights");
  const dpe::FeatureStore train =
      dpe::load_store(features_path, dpe::StoreFormat::binary);
  const dpe::FeatureStore test =
      dpe::load_store(test_path, dpe::StoreFormat::binary);
  const auto rows = dpe::sweep_sensitivity(train, test, cfg, inv_temps, alphas);
  std::string csv = "inv_temperature,ips_weight,wga,overall_accuracy\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%g,%g,%.6f,%.6f\n", r.inv_temperature,
                  r.ips_weight, r.wga, r.overall_accuracy);
    csv += buf;
  }
  std::cout << csv;
  if (!out_base.empty()) {
    dpe::detail::write_file(out_base + ".csv", csv);
    dpe::RunManifest manifest;
    manifest.command = "sweep-sensitivity";
    manifest.add_input_digest("features", features_path);
    manifest.add_input_digest("test_features", test_path);
    add_config_to_manifest(manifest, dpe::resolve(cfg));
    manifest.add("grid.inv_temperatures", inv_temps_text);
    manifest.add("grid.ips_weights", alphas_text);
    manifest.add("output.table", out_base + ".csv");
    dpe::write_manifest(manifest, out_base + ".manifest", timer.seconds());
  }
  return 0;
}

int cmd_inspect(const std::string& model_path, const std::string& features_path,
                std::size_t member, std::size_t class_label, std::size_t top_k,
                bool similarity) {
  const dpe::EnsembleModel model = dpe::load_model(model_path);
  if (similarity) {
    const auto sim = dpe::similarity_matrix(model, class_label);
    const std::size_t n = model.n_members();
    std::cout << "similarity matrix, class " << class_label << " (" << n
              << "x" << n << ")\n";
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b)
        std::printf("%s%7.4f", b ? " " : "", sim[a * n + b]);
      std::printf("\n");
    }
    return 0;
  }
  const dpe::FeatureStore store =
      dpe::load_store(features_path, dpe::StoreFormat::binary);
  const auto ranked =
      dpe::nearest_samples(model, member, class_label, store, top_k);
  const auto& ps = model.members[member];
  std::cout << "nearest samples to member " << member << " prototype of class "
            << class_label << "\n";
  std::cout << "rank,sample,distance,label" << (store.has_groups() ? ",group" : "")
            << "\n";
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    const std::size_t i = ranked[r];
    const double d = dpe::scaled_distance(store.row(i),
                                          ps.prototype(class_label), ps.scale);
    std::printf("%zu,%zu,%.6f,%d", r, i, d, store.class_labels[i]);
    if (store.has_groups()) std::printf(",%d", store.group_labels[i]);
    std::printf("\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"diversified prototypical ensembles on frozen features"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate the synthetic benchmark");
  std::string synth_out = "runs/synth";
  dpe::SynthSpec spec;
  std::string proportions, class_means, attr_offsets;
  bool synth_csv = false;
  synth->add_option("--out-dir", synth_out, "output directory");
  synth->add_option("--dim", spec.dim, "embedding dimension");
  synth->add_option("--noise", spec.noise_sigma, "isotropic noise sigma");
  synth->add_option("--n-train", spec.n_train, "training samples");
  synth->add_option("--n-test", spec.n_test, "test samples (group-balanced)");
  synth->add_option("--seed", spec.seed, "generator seed");
  synth->add_option("--proportions", proportions,
                    "train fractions per (class,attr) cell, comma list");
  synth->add_option("--class-means", class_means,
                    "per-class mean vectors, e.g. '-4,0;4,0'");
  synth->add_option("--attr-offsets", attr_offsets,
                    "per-attribute offsets, e.g. '0,0;8.5,5;1.2,-2.6'");
  synth->add_flag("--csv", synth_csv, "also write CSV copies");

  // train
  auto* train = app.add_subcommand("train", "train a prototypical ensemble");
  std::string train_features, train_out = "model.dpem";
  bool print_config = false;
  TrainFlags train_flags;
  train->add_option("--features", train_features, "training DPEF file");
  train->add_option("--out", train_out, "output DPEM path");
  train->add_flag("--print-config", print_config,
                  "print the resolved config and exit");
  train_flags.register_on(train);

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a model on a store");
  std::string eval_model, eval_features, eval_out;
  eval->add_option("--model", eval_model, "DPEM model path")->required();
  eval->add_option("--features", eval_features, "DPEF store to evaluate on")
      ->required();
  eval->add_option("--out", eval_out, "report base path (writes .kv/.csv)");

  // ablate
  auto* ablate =
      app.add_subcommand("ablate", "diversification-arm ablation table");
  std::string ab_features, ab_test, ab_out, ab_sizes = "1,5,15";
  std::size_t ab_n_seeds = 20;
  std::uint64_t ab_base_seed = 1;
  TrainFlags ab_flags;
  ablate->add_option("--features", ab_features, "training DPEF")->required();
  ablate->add_option("--test-features", ab_test, "test DPEF")->required();
  ablate->add_option("--out", ab_out, "output base path");
  ablate->add_option("--n-seeds", ab_n_seeds, "number of seeds");
  ablate->add_option("--base-seed", ab_base_seed, "first seed");
  ablate->add_option("--sizes", ab_sizes, "member counts, comma list");
  ab_flags.register_on(ablate);

  // sweep-size
  auto* swsize =
      app.add_subcommand("sweep-size", "ensemble-size sweep (prefix trick)");
  std::string ss_features, ss_test, ss_out, ss_sizes = "1,2,5,10,15,25,40";
  TrainFlags ss_flags;
  swsize->add_option("--features", ss_features, "training DPEF")->required();
  swsize->add_option("--test-features", ss_test, "test DPEF")->required();
  swsize->add_option("--out", ss_out, "output base path");
  swsize->add_option("--sizes", ss_sizes, "member counts, comma list");
  ss_flags.register_on(swsize);

  // sweep-sensitivity
  auto* swsen = app.add_subcommand("sweep-sensitivity",
                                   "grid over 1/tau and the IPS weight");
  std::string se_features, se_test, se_out;
  std::string se_temps = "10,20,30,40", se_alphas = "1e4,5e4,1e5,5e5";
  TrainFlags se_flags;
  swsen->add_option("--features", se_features, "training DPEF")->required();
  swsen->add_option("--test-features", se_test, "test DPEF")->required();
  swsen->add_option("--out", se_out, "output base path");
  swsen->add_option("--inv-temperatures", se_temps, "1/tau grid, comma list");
  swsen->add_option("--ips-weights", se_alphas, "alpha grid, comma list");
  se_flags.register_on(swsen);

  // inspect
  auto* inspect =
      app.add_subcommand("inspect", "nearest samples / similarity matrices");
  std::string in_model, in_features;
  std::size_t in_member = 0, in_class = 0, in_topk = 10;
  bool in_similarity = false;
  inspect->add_option("--model", in_model, "DPEM model path")->required();
  inspect->add_option("--features", in_features, "DPEF store");
  inspect->add_option("--member", in_member, "ensemble member index");
  inspect->add_option("--class-label", in_class, "class index");
  inspect->add_option("--top-k", in_topk, "number of nearest samples");
  inspect->add_flag("--similarity", in_similarity,
                    "print the member-similarity matrix instead");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed())
      return cmd_synth(synth_out, spec, proportions, class_means, attr_offsets,
                       synth_csv);
    if (train->parsed())
      return cmd_train(train_features, train_out, train_flags, print_config);
    if (eval->parsed()) return cmd_eval(eval_model, eval_features, eval_out);
    if (ablate->parsed())
      return cmd_ablate(ab_features, ab_test, ab_out, ab_flags, ab_n_seeds,
                        ab_base_seed, ab_sizes);
    if (swsize->parsed())
      return cmd_sweep_size(ss_features, ss_test, ss_out, ss_flags, ss_sizes);
    if (swsen->parsed())
      return cmd_sweep_sensitivity(se_features, se_test, se_out, se_flags,
                                   se_temps, se_alphas);
    if (inspect->parsed())
      return cmd_inspect(in_model, in_features, in_member, in_class, in_topk,
                         in_similarity);
  } catch (const dpe::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
