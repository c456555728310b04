#pragma once

// Quantum reservoir -> bridge -> photonic reservoir -> fused features, with
// the PID loop closing prediction error back onto the photonic phase.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hpqrc/common.hpp"
#include "hpqrc/photonic_reservoir.hpp"
#include "hpqrc/quantum_reservoir.hpp"
#include "hpqrc/readout.hpp"

namespace hpqrc {

enum class Topology { parallel, sequential };
enum class BridgePrecision { single, double_ };
enum class Fusion { concat, concat_plus_products };
enum class ForecastMode { one_step, free_run };

inline std::string to_string(Topology t) { return t == Topology::parallel ? "parallel" : "sequential"; }
inline std::string to_string(BridgePrecision p) { return p == BridgePrecision::single ? "single" : "double"; }
inline std::string to_string(Fusion f) { return f == Fusion::concat ? "concat" : "concat_plus_products"; }

struct HybridConfig {
  Topology topology = Topology::parallel;
  QuantumConfig quantum;
  PhotonicConfig photonic;
  bool pid_enabled = false;
  PidController pid;
  BridgePrecision bridge_precision = BridgePrecision::single;
  Fusion fusion = Fusion::concat;
  // Metadata only; the simulation is step-synchronous.
  double bridge_latency_ms = 0.8;

  std::size_t feature_dim() const {
    const std::size_t q = quantum.feature_dim();
    const std::size_t p = photonic.n_virtual;
    return q + p + (fusion == Fusion::concat_plus_products ? std::min(q, p) : 0);
  }

  void validate() const {
    quantum.validate();
    photonic.validate();
    pid.validate();
  }
};

struct RunState {
  DensityMatrix rho;
  PhotonicState photonic;
  PidController pid;
  double last_error = 0.0;
};

/// Affine map [-1, 1] -> [0, 1]; single precision rounds each value to the
/// nearest float.
inline std::vector<double> bridge_convert(const QuantumFeatures& qf, BridgePrecision precision) {
  auto v = qf.flat();
  for (double& x : v) {
    x = 0.5 * (x + 1.0);
    if (precision == BridgePrecision::single) x = static_cast<double>(static_cast<float>(x));
  }
  return v;
}

/// [quantum | photonic] plus, for concat_plus_products, the elementwise
/// products of the first min(|q|, |p|) entries.
inline std::vector<double> combine_features(std::span<const double> qf, std::span<const double> pf,
                                            Fusion fusion) {
  if (qf.empty() || pf.empty()) throw DimensionError("combine_features: empty feature block");
  std::vector<double> out;
  const std::size_t m = std::min(qf.size(), pf.size());
  out.reserve(qf.size() + pf.size() + (fusion == Fusion::concat_plus_products ? m : 0));
  out.insert(out.end(), qf.begin(), qf.end());
  out.insert(out.end(), pf.begin(), pf.end());
  if (fusion == Fusion::concat_plus_products)
    for (std::size_t i = 0; i < m; ++i) out.push_back(qf[i] * pf[i]);
  return out;
}

inline std::vector<double> combine_features(const QuantumFeatures& qf, const PhotonicFeatures& pf,
                                            Fusion fusion) {
  const auto q = qf.flat();
  return combine_features(q, pf.intensities, fusion);
}

class HybridPipeline {
public:
  explicit HybridPipeline(HybridConfig cfg)
      : cfg_((cfg.validate(), std::move(cfg))), quantum_(cfg_.quantum), photonic_(cfg_.photonic),
        pid_(cfg_.pid) {
    pid_.out_min = -cfg_.photonic.actuator_limit;
    pid_.out_max = cfg_.photonic.actuator_limit;
  }

  const HybridConfig& config() const { return cfg_; }
  std::size_t feature_dim() const { return cfg_.feature_dim(); }

  RunState state() const { return {quantum_.state(), photonic_.state(), pid_, last_error_}; }
  void set_state(RunState s) {
    quantum_.set_state(std::move(s.rho));
    photonic_.set_state(std::move(s.photonic));
    pid_ = s.pid;
    last_error_ = s.last_error;
  }

  /// One input in [0,1]. `error` is the latest realized prediction error fed
  /// to the phase controller.
  std::vector<double> step(double u, double error = 0.0) {
    last_error_ = error;
    const double phase = cfg_.pid_enabled ? pid_.update(error) : 0.0;
    const QuantumFeatures qf = quantum_.step(kPi * u);
    PhotonicFeatures pf;
    if (cfg_.topology == Topology::parallel) {
      pf = photonic_.step(u, phase);
    } else {
      const auto drive = bridge_convert(qf, cfg_.bridge_precision);
      pf = photonic_.step(drive, phase);
    }
    return combine_features(qf, pf, cfg_.fusion);
  }

  /// Teacher-forced feature harvesting (controller error held at 0). Rows
  /// carry no bias column.
  Eigen::MatrixXd harvest(std::span<const double> inputs) {
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(inputs.size()), static_cast<Eigen::Index>(feature_dim()));
    for (std::size_t t = 0; t < inputs.size(); ++t) {
      const auto f = step(inputs[t], 0.0);
      rows.row(static_cast<Eigen::Index>(t)) =
          Eigen::Map<const Eigen::RowVectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
    }
    return rows;
  }

  /// Predictions for n_steps continuing from the current state. one_step
  /// reads inputs[t] and feeds the realized error (prediction - targets[t])
  /// into the controller on the next step; free_run starts from inputs[0]
  /// and feeds each prediction back as the next input.
  std::vector<double> forecast(const ReadoutModel& model, std::size_t n_steps, ForecastMode mode,
                               std::span<const double> inputs, std::span<const double> targets = {}) {
    if (model.feature_dim() != feature_dim())
      throw DimensionError("readout width " + std::to_string(model.feature_dim()) +
                           " != pipeline feature width " + std::to_string(feature_dim()));
    std::vector<double> preds;
    preds.reserve(n_steps);
    if (n_steps == 0) return preds;
    if (mode == ForecastMode::one_step && inputs.size() < n_steps)
      throw DimensionError("forecast: fewer inputs than steps");
    if (mode == ForecastMode::free_run && inputs.empty())
      throw DimensionError("forecast: free run needs a seed input");

    std::vector<double> row(feature_dim() + 1, 1.0);
    double error = 0.0;
    double u = inputs[0];
    for (std::size_t t = 0; t < n_steps; ++t) {
      if (mode == ForecastMode::one_step) u = inputs[t];
      const auto f = step(u, error);
      std::copy(f.begin(), f.end(), row.begin());
      const double y = predict_row(model, row);
      if (!std::isfinite(y)) throw DivergenceError("free-run forecast became unstable", t);
      preds.push_back(y);
      if (mode == ForecastMode::one_step) {
        error = t < targets.size() ? control_error(y, targets[t]) : 0.0;
      } else {
        u = y;
      }
    }
    return preds;
  }

private:
  HybridConfig cfg_;
  QuantumReservoir quantum_;
  PhotonicReservoir photonic_;
  PidController pid_;
  double last_error_ = 0.0;
};

struct PipelineRun {
  FeatureMatrix features;  // with bias column
  RunState state;
};

inline PipelineRun run_pipeline(std::span<const double> inputs, const HybridConfig& cfg) {
  if (inputs.empty()) throw SizingError("run_pipeline: empty input series");
  HybridPipeline p(cfg);
  auto raw = p.harvest(inputs);
  return {with_bias(raw), p.state()};
}

}  // namespace hpqrc
