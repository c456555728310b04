#pragma once

// Comparison models: leaky echo state network, quantum-only reservoir and an
// AR(p) model with AIC order selection.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCore>

#include "hpqrc/common.hpp"
#include "hpqrc/quantum_reservoir.hpp"

namespace hpqrc {

struct EsnConfig {
  std::size_t n_nodes = 500;
  double spectral_radius = 0.95;
  double leak_rate = 0.3;
  double input_scale = 0.5;
  double density = 0.05;
  std::uint64_t seed = 42;

  static EsnConfig chaos_preset() { return {}; }
  static EsnConfig dataset_preset() {
    EsnConfig c;
    c.n_nodes = 1000;
    return c;
  }

  void validate() const {
    if (n_nodes < 1) throw ParameterError("esn.n_nodes must be >= 1");
    if (!(spectral_radius > 0.0)) throw ParameterError("esn.spectral_radius must be > 0");
    if (!(leak_rate > 0.0 && leak_rate <= 1.0)) throw ParameterError("esn.leak_rate must lie in (0, 1]");
    if (!(density > 0.0 && density <= 1.0)) throw ParameterError("esn.density must lie in (0, 1]");
    if (!std::isfinite(input_scale)) throw ParameterError("esn.input_scale must be finite");
  }
};

/// Largest eigenvalue modulus, from a full dense eigendecomposition.
inline double spectral_radius(const Eigen::MatrixXd& w) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(w, false);
  if (es.info() != Eigen::Success) throw SolverError("eigenvalue computation failed");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Raw (unscaled) recurrent draw: entry kept with probability `density`,
/// value uniform in [-1, 1]; row-major draw order, then the input weights.
struct EsnDraw {
  Eigen::MatrixXd w;
  Eigen::VectorXd w_in;
};

inline EsnDraw esn_draw(const EsnConfig& cfg) {
  const auto n = static_cast<Eigen::Index>(cfg.n_nodes);
  Rng rng(cfg.seed);
  EsnDraw d{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double keep = rng.uniform();
      const double value = rng.uniform(-1.0, 1.0);
      if (keep < cfg.density) d.w(i, j) = value;
    }
  for (Eigen::Index i = 0; i < n; ++i) d.w_in(i) = rng.uniform(-cfg.input_scale, cfg.input_scale);
  return d;
}

class Esn {
public:
  /// Draws and rescales the recurrent matrix to cfg.spectral_radius.
  explicit Esn(EsnConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    auto d = esn_draw(cfg_);
    if (d.w.isZero(0.0)) throw Error("esn init: recurrent matrix is all zero (density too low)");
    const double rho = spectral_radius(d.w);
    if (!(rho > 1e-12)) throw Error("esn init: recurrent matrix has zero spectral radius");
    w_dense_ = d.w * (cfg_.spectral_radius / rho);
    w_ = w_dense_.sparseView();
    w_in_ = std::move(d.w_in);
    x_ = Eigen::VectorXd::Zero(w_in_.size());
  }

  const EsnConfig& config() const { return cfg_; }
  const Eigen::MatrixXd& recurrent() const { return w_dense_; }
  const Eigen::VectorXd& input_weights() const { return w_in_; }
  const Eigen::VectorXd& state() const { return x_; }
  void set_state(Eigen::VectorXd x) {
    if (x.size() != x_.size()) throw DimensionError("esn state size mismatch");
    x_ = std::move(x);
  }
  void reset() { x_.setZero(); }

  /// x <- (1 - a) x + a tanh(W x + W_in u)
  const Eigen::VectorXd& step(double u) {
    pre_.noalias() = w_ * x_;
    pre_ += u * w_in_;
    x_ = (1.0 - cfg_.leak_rate) * x_ + cfg_.leak_rate * pre_.array().tanh().matrix();
    return x_;
  }

private:
  EsnConfig cfg_;
  Eigen::MatrixXd w_dense_;
  Eigen::SparseMatrix<double, Eigen::RowMajor> w_;
  Eigen::VectorXd w_in_;
  Eigen::VectorXd x_;
  Eigen::VectorXd pre_;
};

/// States for every input after the first `washout`, one row per step.
inline Eigen::MatrixXd esn_run(Esn& esn, std::span<const double> inputs, std::size_t washout = 0) {
  const std::size_t rows = inputs.size() > washout ? inputs.size() - washout : 0;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(esn.config().n_nodes));
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    const auto& x = esn.step(inputs[t]);
    if (t >= washout) out.row(static_cast<Eigen::Index>(t - washout)) = x.transpose();
  }
  return out;
}

inline Eigen::MatrixXd esn_run(std::span<const double> inputs, const EsnConfig& cfg,
                               std::size_t washout = 0) {
  Esn esn(cfg);
  return esn_run(esn, inputs, washout);
}

/// Quantum reservoir alone; inputs in [0,1] are encoded as angle pi * u.
inline Eigen::MatrixXd quantum_only_run(QuantumReservoir& qr, std::span<const double> inputs,
                                        std::size_t washout = 0) {
  const std::size_t rows = inputs.size() > washout ? inputs.size() - washout : 0;
  const auto dim = static_cast<Eigen::Index>(qr.config().feature_dim());
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows), dim);
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    const auto f = qr.step(kPi * inputs[t]).flat();
    if (t >= washout)
      out.row(static_cast<Eigen::Index>(t - washout)) = Eigen::Map<const Eigen::RowVectorXd>(f.data(), dim);
  }
  return out;
}

inline QuantumConfig quantum_only_preset(std::size_t n_qubits = 8) {
  QuantumConfig c;
  c.n_qubits = n_qubits;
  return c;
}

inline Eigen::MatrixXd quantum_only_run(std::span<const double> inputs, const QuantumConfig& cfg,
                                        std::size_t washout = 0) {
  QuantumReservoir qr(cfg);
  return quantum_only_run(qr, inputs, washout);
}

// ---------------------------------------------------------------------------
// AR(p) with AIC
// ---------------------------------------------------------------------------

struct ArModel {
  std::size_t order_p = 0;
  std::vector<double> coeffs;  // coeffs[k] multiplies y[t - 1 - k]
  double intercept = 0.0;
  double aic = 0.0;
  bool differenced = false;
  std::vector<double> aic_by_order;  // index p
  std::size_t effective_n = 0;

  /// One-step forecast from the most recent observations (latest last), on
  /// the original scale.
  double predict_next(std::span<const double> history) const {
    const std::size_t need = order_p + (differenced ? 1 : 0);
    if (history.size() < std::max<std::size_t>(need, 1))
      throw SizingError("ar predict: history shorter than model order");
    const std::size_t n = history.size();
    double v = intercept;
    for (std::size_t k = 0; k < order_p; ++k) {
      const double lag = differenced ? history[n - 1 - k] - history[n - 2 - k] : history[n - 1 - k];
      v += coeffs[k] * lag;
    }
    return differenced ? history[n - 1] + v : v;
  }
};

/// Least-squares AR(p) fit for every p in [0, p_max] on the common sample
/// t = p_max .. N-1, scored by AIC = T ln(RSS/T) + 2(p + 1). Ties keep the
/// smaller order.
inline ArModel fit_ar_aic(std::span<const double> series, std::size_t p_max, bool difference = false) {
  std::vector<double> y(series.begin(), series.end());
  if (difference) {
    if (y.size() < 2) throw SizingError("ar: series too short to difference");
    for (std::size_t i = 0; i + 1 < y.size(); ++i) y[i] = y[i + 1] - y[i];
    y.pop_back();
  }
  if (y.size() <= p_max + 10)
    throw SizingError("ar: series length must exceed p_max + 10");
  const std::size_t n = y.size();
  const auto t_eff = static_cast<Eigen::Index>(n - p_max);
  Eigen::VectorXd target(t_eff);
  for (Eigen::Index i = 0; i < t_eff; ++i) target(i) = y[p_max + static_cast<std::size_t>(i)];
  const double tmean = target.mean();
  if ((target.array() - tmean).abs().maxCoeff() == 0.0)
    throw DegenerateError("ar: series is constant");

  ArModel best;
  best.aic = std::numeric_limits<double>::infinity();
  best.differenced = difference;
  best.effective_n = static_cast<std::size_t>(t_eff);
  std::vector<double> aics;
  for (std::size_t p = 0; p <= p_max; ++p) {
    Eigen::MatrixXd x(t_eff, static_cast<Eigen::Index>(p + 1));
    for (Eigen::Index i = 0; i < t_eff; ++i) {
      const std::size_t t = p_max + static_cast<std::size_t>(i);
      x(i, 0) = 1.0;
      for (std::size_t k = 0; k < p; ++k) x(i, static_cast<Eigen::Index>(k + 1)) = y[t - 1 - k];
    }
    const Eigen::VectorXd beta = x.colPivHouseholderQr().solve(target);
    const double rss = (x * beta - target).squaredNorm();
    const double td = static_cast<double>(t_eff);
    const double aic = rss > 0.0 ? td * std::log(rss / td) + 2.0 * static_cast<double>(p + 1)
                                 : -std::numeric_limits<double>::infinity();
    aics.push_back(aic);
    if (aic < best.aic) {
      best.aic = aic;
      best.order_p = p;
      best.intercept = beta(0);
      best.coeffs.assign(beta.data() + 1, beta.data() + beta.size());
    }
  }
  best.aic_by_order = std::move(aics);
  return best;
}

}  // namespace hpqrc
