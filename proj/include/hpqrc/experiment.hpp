#pragma once

// One benchmark cell: dataset preparation, model construction, readout
// training and one-step / free-run evaluation.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hpqrc/baselines.hpp"
#include "hpqrc/chaos_data.hpp"
#include "hpqrc/common.hpp"
#include "hpqrc/hybrid_pipeline.hpp"
#include "hpqrc/metrics_stats.hpp"
#include "hpqrc/readout.hpp"

namespace hpqrc {

inline constexpr const char* kToolkitVersion = "0.1.0";

enum class DatasetKind { mackey_glass, lorenz, csv };
enum class Trainer { ridge, iterative };

struct DatasetSpec {
  DatasetKind kind = DatasetKind::mackey_glass;
  std::string csv_path;
  std::string csv_column = "value";
  MackeyGlassParams mackey_glass{.sample_every = 10};
  LorenzParams lorenz{.sample_every = 2};
  std::size_t lorenz_component = 0;
  // Frames dropped from the start of a generated series.
  std::size_t transient = 500;
  // Perturb the initial condition from the run seed so trials see different
  // stretches of the attractor.
  bool jitter_init = true;

  std::string name() const {
    switch (kind) {
      case DatasetKind::mackey_glass: return "mackey_glass";
      case DatasetKind::lorenz: return "lorenz";
      case DatasetKind::csv: return "csv:" + csv_path;
    }
    return "?";
  }
};

struct ReadoutSpec {
  double lambda = 0.01;
  Trainer trainer = Trainer::ridge;
  // 0 disables cross-validation; otherwise lambda is picked from lambda_grid.
  std::size_t cv_folds = 0;
  std::vector<double> lambda_grid{1e-6, 1e-4, 1e-2, 1.0};
  AdamOptions adam;
};

struct ExperimentConfig {
  std::string model = "hpqrc";  // hpqrc | quantum_only | esn | ar
  DatasetSpec dataset;
  std::size_t n_train = 4000;
  std::size_t n_test = 1000;
  std::size_t washout = 200;
  std::size_t horizon = 1;
  double noise_sigma = 0.0;
  // Score against the clean series (true) or the noisy observations.
  bool eval_clean = true;
  std::uint64_t seed = 42;
  HybridConfig hybrid;
  EsnConfig esn;
  QuantumConfig quantum_only = quantum_only_preset(8);
  std::size_t ar_p_max = 10;
  bool ar_difference = false;
  ReadoutSpec readout;
  std::size_t free_run_steps = 0;

  /// Copies the run seed into every seeded component.
  void apply_seed() {
    hybrid.quantum.seed = seed;
    hybrid.photonic.mask_seed = seed;
    esn.seed = seed;
    quantum_only.seed = seed;
    readout.adam.seed = seed;
  }
};

struct PreparedData {
  std::vector<double> train_inputs;  // washout + n_train
  std::vector<double> train_targets;  // aligned with train_inputs
  std::vector<double> test_inputs;
  std::vector<double> test_targets;
  std::size_t washout = 0;
  NormParams norm;
};

/// Raw series for a dataset spec: generated series keep every frame
/// (Lorenz with all three coordinates), CSV series are loaded as-is. With
/// jitter_init the initial condition is perturbed from `seed`.
inline TimeSeries generate_series(const DatasetSpec& ds, std::size_t frames, std::uint64_t seed) {
  Rng jitter(seed ^ 0x9e3779b97f4a7c15ULL);
  switch (ds.kind) {
    case DatasetKind::mackey_glass: {
      MackeyGlassParams p = ds.mackey_glass;
      if (ds.jitter_init) p.history += jitter.uniform(-0.1, 0.1);
      auto s = gen_mackey_glass(p, frames);
      s.seed = seed;
      return s;
    }
    case DatasetKind::lorenz: {
      LorenzParams p = ds.lorenz;
      if (ds.jitter_init)
        for (double& v : p.init) v += jitter.uniform(-0.5, 0.5);
      auto s = gen_lorenz(p, frames);
      s.seed = seed;
      return s;
    }
    case DatasetKind::csv:
      return load_csv(ds.csv_path, ds.csv_column);
  }
  throw ParameterError("unknown dataset kind");
}

/// Generates or loads the series, normalizes to [0,1], injects noise into
/// the inputs and splits chronologically.
inline PreparedData prepare_data(const ExperimentConfig& cfg) {
  const std::size_t frames = cfg.washout + cfg.n_train + cfg.n_test + cfg.horizon;
  const DatasetSpec& ds = cfg.dataset;
  TimeSeries raw = generate_series(ds, frames + (ds.kind == DatasetKind::csv ? 0 : ds.transient), cfg.seed);
  if (ds.kind == DatasetKind::lorenz) raw = component(raw, ds.lorenz_component);
  const std::size_t skip = ds.kind == DatasetKind::csv ? 0 : ds.transient;
  if (raw.values.size() < skip + frames)
    throw SizingError("dataset '" + ds.name() + "' has " + std::to_string(raw.values.size() - std::min(skip, raw.values.size())) +
                      " usable frames, need " + std::to_string(frames));
  raw.values.erase(raw.values.begin(), raw.values.begin() + static_cast<std::ptrdiff_t>(skip));
  raw.values.resize(frames);

  auto [clean, norm] = normalize(raw, 0.0, 1.0);
  const TimeSeries noisy = cfg.noise_sigma > 0.0 ? add_gaussian_noise(raw, cfg.noise_sigma, cfg.seed) : clean;
  const TimeSeries& truth = cfg.eval_clean ? clean : noisy;

  PreparedData d;
  d.washout = cfg.washout;
  d.norm = norm;
  const std::size_t n_in = cfg.washout + cfg.n_train + cfg.n_test;
  for (std::size_t t = 0; t < n_in; ++t) {
    const bool train = t < cfg.washout + cfg.n_train;
    (train ? d.train_inputs : d.test_inputs).push_back(noisy.values[t]);
    (train ? d.train_targets : d.test_targets).push_back(truth.values[t + cfg.horizon]);
  }
  return d;
}

// ---------------------------------------------------------------------------
// Reservoir adapters: copyable objects with step(u, error) -> features.
// ---------------------------------------------------------------------------

struct EsnAdapter {
  Esn esn;
  std::size_t dim() const { return esn.config().n_nodes; }
  std::vector<double> step(double u, double /*error*/) {
    const auto& x = esn.step(u);
    return {x.data(), x.data() + x.size()};
  }
};

struct QuantumOnlyAdapter {
  QuantumReservoir qr;
  std::size_t dim() const { return qr.config().feature_dim(); }
  std::vector<double> step(double u, double /*error*/) { return qr.step(kPi * u).flat(); }
};

struct HybridAdapter {
  HybridPipeline pipe;
  std::size_t dim() const { return pipe.feature_dim(); }
  std::vector<double> step(double u, double error) { return pipe.step(u, error); }
};

struct RunResult {
  MetricReport metrics;
  double train_nmse = 0.0;
  double train_target_var = 0.0;  // population variance of the fitted targets
  double chosen_lambda = 0.0;
  std::size_t feature_dim = 0;
  std::vector<double> test_targets;
  std::vector<double> predictions;
  std::vector<double> epoch_loss;
  std::optional<CvReport> cv;
  std::optional<ArModel> ar;
  // Timings (wall clock, excluded from reproducibility).
  double train_time_s = 0.0;
  double test_time_s = 0.0;
  double latency_ms = 0.0;
  double throughput_pps = 0.0;
  // Free-run evaluation, when requested.
  std::size_t free_run_steps = 0;
  bool free_run_bounded = true;
  double free_run_max_excursion = 0.0;  // max |pred - mid| / half-range of train targets
};

namespace detail {

inline double population_variance(std::span<const double> y) {
  const double m = mean(y);
  double ss = 0.0;
  for (double v : y) ss += (v - m) * (v - m);
  return ss / static_cast<double>(y.size());
}

template <class R>
Eigen::MatrixXd harvest_rows(R& r, std::span<const double> inputs) {
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(inputs.size()), static_cast<Eigen::Index>(r.dim()));
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    const auto f = r.step(inputs[t], 0.0);
    rows.row(static_cast<Eigen::Index>(t)) =
        Eigen::Map<const Eigen::RowVectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
  }
  return rows;
}

inline ReadoutModel train_readout(const FeatureMatrix& x, std::span<const double> y,
                                  const ReadoutSpec& spec, RunResult& out) {
  double lambda = spec.lambda;
  if (spec.cv_folds > 0) {
    out.cv = cross_validate(x, y, spec.cv_folds, spec.lambda_grid);
    lambda = out.cv->chosen_lambda;
  }
  out.chosen_lambda = lambda;
  if (spec.trainer == Trainer::iterative) {
    auto fit = fit_iterative(x, y, lambda, spec.adam);
    out.epoch_loss = std::move(fit.epoch_loss);
    return fit.model;
  }
  return fit_ridge(x, y, lambda);
}

template <class R>
void evaluate_reservoir(R reservoir, const ExperimentConfig& cfg, const PreparedData& d,
                        RunResult& out) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  const Eigen::MatrixXd raw = harvest_rows(reservoir, d.train_inputs);
  const auto fit_rows = static_cast<Eigen::Index>(d.train_inputs.size() - d.washout);
  const FeatureMatrix x = with_bias(raw.bottomRows(fit_rows));
  const std::span<const double> y(d.train_targets.data() + d.washout, static_cast<std::size_t>(fit_rows));
  const ReadoutModel model = train_readout(x, y, cfg.readout, out);
  out.train_nmse = nmse(y, predict(model, x));
  out.train_target_var = detail::population_variance(y);
  out.feature_dim = reservoir.dim();
  const auto t1 = clock::now();

  // Snapshot after training for the free-run evaluation.
  std::optional<R> free_runner;
  if (cfg.free_run_steps > 0) free_runner.emplace(reservoir);

  std::vector<double> row(reservoir.dim() + 1, 1.0);
  out.predictions.reserve(d.test_inputs.size());
  double error = 0.0;
  for (std::size_t t = 0; t < d.test_inputs.size(); ++t) {
    const auto f = reservoir.step(d.test_inputs[t], error);
    std::copy(f.begin(), f.end(), row.begin());
    const double yhat = predict_row(model, row);
    if (!std::isfinite(yhat)) throw DivergenceError("one-step forecast is not finite", t);
    out.predictions.push_back(yhat);
    error = control_error(yhat, d.test_targets[t]);
  }
  const auto t2 = clock::now();
  out.train_time_s = std::chrono::duration<double>(t1 - t0).count();
  out.test_time_s = std::chrono::duration<double>(t2 - t1).count();

  if (free_runner) {
    const auto [mn, mx] = std::minmax_element(y.begin(), y.end());
    const double mid = 0.5 * (*mn + *mx), half = 0.5 * (*mx - *mn);
    double u = d.test_inputs.front();
    out.free_run_steps = cfg.free_run_steps;
    for (std::size_t t = 0; t < cfg.free_run_steps; ++t) {
      const auto f = free_runner->step(u, 0.0);
      std::copy(f.begin(), f.end(), row.begin());
      u = predict_row(model, row);
      if (!std::isfinite(u)) {
        out.free_run_bounded = false;
        out.free_run_max_excursion = std::numeric_limits<double>::infinity();
        break;
      }
      out.free_run_max_excursion = std::max(out.free_run_max_excursion, std::abs(u - mid) / half);
    }
    // Training range widened by 50% on each side.
    if (out.free_run_max_excursion > 1.5) out.free_run_bounded = false;
  }
}

inline void evaluate_ar(const ExperimentConfig& cfg, const PreparedData& d, RunResult& out) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  std::vector<double> history(d.train_inputs.begin(), d.train_inputs.end());
  const ArModel ar = fit_ar_aic(history, cfg.ar_p_max, cfg.ar_difference);
  out.feature_dim = ar.order_p;
  const auto t1 = clock::now();
  auto forecast = [&](std::vector<double> h) {
    for (std::size_t k = 0; k < cfg.horizon; ++k) h.push_back(ar.predict_next(h));
    return h.back();
  };
  std::vector<double> fitted;
  for (std::size_t t = d.washout; t < d.train_inputs.size(); ++t) {
    if (t + 1 < ar.order_p + 2) {
      fitted.push_back(d.train_targets[t]);
      continue;
    }
    fitted.push_back(forecast(std::vector<double>(history.begin(), history.begin() + static_cast<std::ptrdiff_t>(t + 1))));
  }
  const std::span<const double> fit_targets = std::span<const double>(d.train_targets).subspan(d.washout);
  out.train_nmse = nmse(fit_targets, fitted);
  out.train_target_var = population_variance(fit_targets);
  for (double u : d.test_inputs) {
    history.push_back(u);
    const std::size_t keep = std::min(history.size(), ar.order_p + 2);
    out.predictions.push_back(forecast(std::vector<double>(history.end() - static_cast<std::ptrdiff_t>(keep), history.end())));
  }
  const auto t2 = clock::now();
  out.train_time_s = std::chrono::duration<double>(t1 - t0).count();
  out.test_time_s = std::chrono::duration<double>(t2 - t1).count();
  out.ar = ar;
}

}  // namespace detail

inline RunResult run_experiment(ExperimentConfig cfg) {
  cfg.apply_seed();
  const PreparedData d = prepare_data(cfg);
  RunResult out;
  if (cfg.model == "hpqrc") {
    detail::evaluate_reservoir(HybridAdapter{HybridPipeline(cfg.hybrid)}, cfg, d, out);
  } else if (cfg.model == "esn") {
    detail::evaluate_reservoir(EsnAdapter{Esn(cfg.esn)}, cfg, d, out);
  } else if (cfg.model == "quantum_only") {
    detail::evaluate_reservoir(QuantumOnlyAdapter{QuantumReservoir(cfg.quantum_only)}, cfg, d, out);
  } else if (cfg.model == "ar") {
    detail::evaluate_ar(cfg, d, out);
  } else {
    throw ParameterError("unknown model '" + cfg.model + "'");
  }
  out.test_targets = d.test_targets;
  out.metrics = metric_report(out.test_targets, out.predictions);
  const double n = static_cast<double>(out.predictions.size());
  out.latency_ms = n > 0 ? 1e3 * out.test_time_s / n : 0.0;
  out.throughput_pps = out.test_time_s > 0 ? n / out.test_time_s : 0.0;
  return out;
}

}  // namespace hpqrc
