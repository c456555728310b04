// hpqrc: benchmark harness for the hybrid reservoir toolkit.
//
//   hpqrc generate mackey_glass --steps 5000 --out mg.csv --seed 42
//   hpqrc run --config run.cfg [--seed N] [--topology sequential] [--sigma 0.1]
//   hpqrc sweep --config grid.cfg --workers 4 [--sigma 0,0.1,0.3]
//   hpqrc compare runs/sweep1 [--pair hpqrc:esn]
//   hpqrc report runs/sweep1
//
// Output goes under --out, else $HPQRC_OUT_ROOT, else ./runs.
// Exit codes: 0 ok, 1 validation error, 2 runtime error, 3 partial sweep failure.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hpqrc/bench.hpp"

namespace {

using namespace hpqrc;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::string topology;
  std::string sigma;
};

ConfigFile load_or_default(const std::string& path) {
  return path.empty() ? ConfigFile{} : load_config(path);
}

void apply_overrides(ConfigFile& cf, const Overrides& o, bool sigma_is_list) {
  if (o.seed) set_config_value(cf, "seed", std::to_string(*o.seed));
  if (!o.topology.empty()) set_config_value(cf, "hybrid.topology", o.topology);
  if (!o.sigma.empty()) set_config_value(cf, sigma_is_list ? "sweep.sigmas" : "noise.sigma", o.sigma);
  validate_config(cf.experiment);
}

void print_manifest(const RunManifest& m, const fs::path& out) {
  std::printf("%s  nmse=%.6g  accuracy=%.4f%%  features=%zu  latency=%.4g ms\n", m.run_id.c_str(), m.metrics.nmse,
              m.metrics.accuracy_pct, m.feature_dim, m.latency_ms);
  std::printf("wrote %s\n", (out / m.run_id / "manifest.json").string().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid quantum-photonic reservoir benchmark harness"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolkitVersion));

  std::string config_path, out, topology, sigma, pairing, dataset = "mackey_glass";
  std::uint64_t seed = 42;
  std::size_t workers = 1, steps = 5000;
  std::vector<std::string> dirs;
  Overrides ov;

  auto* gen = app.add_subcommand("generate", "write a synthetic series to CSV");
  gen->add_option("dataset", dataset, "mackey_glass | lorenz")->check(CLI::IsMember({"mackey_glass", "lorenz"}));
  gen->add_option("--config", config_path, "config file supplying generator parameters");
  gen->add_option("--steps", steps, "number of frames to write")->check(CLI::PositiveNumber);
  gen->add_option("--seed", seed, "seed for the initial-condition jitter");
  gen->add_option("--out", out, "output CSV path");

  auto* run = app.add_subcommand("run", "train and evaluate one configuration");
  run->add_option("--config", config_path, "config file")->check(CLI::ExistingFile);
  run->add_option("--out", out, "output directory");
  auto* run_seed = run->add_option("--seed", seed, "override the run seed");
  run->add_option("--topology", ov.topology, "parallel | sequential");
  run->add_option("--sigma", ov.sigma, "input noise level");

  auto* sweep = app.add_subcommand("sweep", "run a model x dataset x sigma x seed grid");
  sweep->add_option("--config", config_path, "config file with sweep.* keys")->check(CLI::ExistingFile);
  sweep->add_option("--out", out, "output directory");
  auto* sweep_seed = sweep->add_option("--seed", seed, "base seed (seeds are base + trial)");
  sweep->add_option("--workers", workers, "concurrent grid cells")->check(CLI::PositiveNumber);
  sweep->add_option("--topology", ov.topology, "parallel | sequential");
  sweep->add_option("--sigma", ov.sigma, "comma-separated noise levels");

  auto* cmp = app.add_subcommand("compare", "paired statistics between models");
  cmp->add_option("dirs", dirs, "directories holding run manifests")->required();
  cmp->add_option("--pair", pairing, "model_a:model_b (default hpqrc against each other model)");
  cmp->add_option("--out", out, "output directory (default: first input directory)");

  auto* rep = app.add_subcommand("report", "emit plot-ready CSVs");
  rep->add_option("dirs", dirs, "directory holding run manifests")->required()->expected(1);
  rep->add_option("--out", out, "output directory (default: the input directory)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      ConfigFile cf = load_or_default(config_path);
      set_config_value(cf, "dataset", dataset);
      const fs::path path = out.empty() ? default_out_root() / (dataset + "_seed" + std::to_string(seed) + ".csv") : fs::path(out);
      cmd_generate(cf.experiment.dataset, steps, seed, path);
      std::printf("wrote %zu frames to %s\n", steps, path.string().c_str());
      return 0;
    }
    if (*run) {
      ConfigFile cf = load_or_default(config_path);
      if (*run_seed) ov.seed = seed;
      apply_overrides(cf, ov, false);
      const fs::path dir = out.empty() ? default_out_root() : fs::path(out);
      print_manifest(cmd_run(cf.experiment, dir), dir);
      return 0;
    }
    if (*sweep) {
      ConfigFile cf = load_or_default(config_path);
      if (*sweep_seed) ov.seed = seed;
      apply_overrides(cf, ov, true);
      const fs::path dir = out.empty() ? default_out_root() : fs::path(out);
      const auto s = cmd_sweep(cf.experiment, cf.grid, dir, workers);
      std::printf("%zu cells, %zu failed; wrote %s and %s\n", s.rows.size(), s.n_failed,
                  (dir / "results.csv").string().c_str(), (dir / "summary.csv").string().c_str());
      return s.n_failed > 0 ? 3 : 0;
    }
    if (*cmp) {
      std::vector<fs::path> paths(dirs.begin(), dirs.end());
      const fs::path dir = out.empty() ? paths.front() : fs::path(out);
      const auto r = cmd_compare(paths, pairing, dir);
      std::fputs(r.summary_text.c_str(), stdout);
      std::printf("wrote %s\n", (dir / "compare.csv").string().c_str());
      return 0;
    }
    if (*rep) {
      const fs::path dir = out.empty() ? fs::path(dirs.front()) : fs::path(out);
      for (const auto& p : cmd_report(dirs.front(), dir)) std::printf("wrote %s\n", p.string().c_str());
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e);
  }
  return 0;
}
