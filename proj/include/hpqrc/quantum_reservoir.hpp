#pragma once

// n-qubit density-matrix reservoir: uniform Y-rotation input encoding,
// layered ZZ/X evolution, T1/T2 Kraus decoherence, and weak measurement of
// single-qubit Z and nearest-neighbour ZZ expectations.
//
// Basis convention: qubit q is bit q of the computational-basis index.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hpqrc/common.hpp"

namespace hpqrc {

using cplx = std::complex<double>;
using Mat2 = Eigen::Matrix2cd;

inline constexpr std::size_t kMaxQubits = 10;

struct QuantumConfig {
  std::size_t n_qubits = 5;
  std::size_t n_layers = 10;
  double coupling_j = 0.27;  // ZZ phase angle per layer
  double field_h = 0.087;    // X rotation angle per layer
  double layer_dt_us = 0.82;
  double t1_us = 50.0;
  double t2_us = 35.0;
  double meas_strength = 0.37;
  std::uint64_t seed = 42;
  // When set, qubit q receives angle theta * scale_q with scale_q drawn
  // uniformly from [0.5, 1] using `seed`.
  bool input_masks = true;

  std::size_t feature_dim() const { return n_qubits == 0 ? 0 : 2 * n_qubits - 1; }

  void validate() const {
    if (n_qubits < 1 || n_qubits > kMaxQubits)
      throw ParameterError("quantum.n_qubits must lie in [1, 10]");
    if (n_layers < 1) throw ParameterError("quantum.n_layers must be >= 1");
    if (!(t1_us > 0.0) || !(t2_us > 0.0))
      throw ParameterError("quantum.t1_us and quantum.t2_us must be > 0");
    if (t2_us > 2.0 * t1_us)
      throw ParameterError("quantum.t2_us must be <= 2 * quantum.t1_us (unphysical dephasing)");
    if (!(meas_strength >= 0.0 && meas_strength <= 1.0))
      throw ParameterError("quantum.meas_strength must lie in [0, 1]");
    if (!(layer_dt_us >= 0.0)) throw ParameterError("quantum.layer_dt_us must be >= 0");
    if (!std::isfinite(coupling_j) || !std::isfinite(field_h))
      throw ParameterError("quantum.coupling_j and quantum.field_h must be finite");
  }
};

class DensityMatrix {
public:
  DensityMatrix() = default;
  DensityMatrix(std::size_t n_qubits, Eigen::MatrixXcd m) : n_(n_qubits), m_(std::move(m)) {
    if (m_.rows() != static_cast<Eigen::Index>(dim()) || m_.cols() != m_.rows())
      throw DimensionError("density matrix shape does not match qubit count");
  }

  /// |0...0><0...0|
  static DensityMatrix ground(std::size_t n_qubits) {
    const Eigen::Index d = Eigen::Index{1} << n_qubits;
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d, d);
    m(0, 0) = 1.0;
    return {n_qubits, std::move(m)};
  }

  static DensityMatrix pure(std::size_t n_qubits, const Eigen::VectorXcd& psi) {
    const Eigen::VectorXcd v = psi / psi.norm();
    return {n_qubits, v * v.adjoint()};
  }

  std::size_t n_qubits() const { return n_; }
  std::size_t dim() const { return std::size_t{1} << n_; }
  const Eigen::MatrixXcd& matrix() const { return m_; }
  Eigen::MatrixXcd& matrix() { return m_; }

  cplx trace() const { return m_.trace(); }
  double hermiticity_error() const { return (m_ - m_.adjoint()).cwiseAbs().maxCoeff(); }
  double min_eigenvalue() const {
    // Symmetrize so the solver sees an exactly Hermitian input.
    const Eigen::MatrixXcd h = 0.5 * (m_ + m_.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }
  Eigen::VectorXd eigenvalues() const {
    const Eigen::MatrixXcd h = 0.5 * (m_ + m_.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
  }

  double expect_z(std::size_t q) const {
    double s = 0.0;
    for (std::size_t i = 0; i < dim(); ++i) {
      const double p = m_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
      s += ((i >> q) & 1U) ? -p : p;
    }
    return s;
  }

  double expect_zz(std::size_t q1, std::size_t q2) const {
    double s = 0.0;
    for (std::size_t i = 0; i < dim(); ++i) {
      const double p = m_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
      s += (((i >> q1) ^ (i >> q2)) & 1U) ? -p : p;
    }
    return s;
  }

  /// Throws when trace, Hermiticity or positivity drift past the given bounds.
  void check(double trace_tol = 1e-10, double herm_tol = 1e-12, double eig_tol = 1e-9) const {
    if (std::abs(trace() - cplx(1.0)) > trace_tol) throw Error("density matrix trace drifted");
    if (hermiticity_error() > herm_tol) throw Error("density matrix lost Hermiticity");
    if (min_eigenvalue() < -eig_tol) throw Error("density matrix has a negative eigenvalue");
  }

private:
  std::size_t n_ = 0;
  Eigen::MatrixXcd m_;
};

struct QuantumFeatures {
  std::vector<double> z;   // <Z_i>
  std::vector<double> zz;  // <Z_i Z_{i+1}>

  std::size_t size() const { return z.size() + zz.size(); }
  std::vector<double> flat() const {
    std::vector<double> v = z;
    v.insert(v.end(), zz.begin(), zz.end());
    return v;
  }
};

// ---------------------------------------------------------------------------
// Gates and channels
// ---------------------------------------------------------------------------

inline Mat2 ry(double theta) {
  const double c = std::cos(theta / 2), s = std::sin(theta / 2);
  Mat2 u;
  u << c, -s, s, c;
  return u;
}

inline Mat2 rx(double theta) {
  const double c = std::cos(theta / 2), s = std::sin(theta / 2);
  Mat2 u;
  u << c, cplx(0, -s), cplx(0, -s), c;
  return u;
}

/// rho -> U_q rho U_q^dagger for a 2x2 unitary (or any operator) on qubit q.
inline void apply_1q(Eigen::MatrixXcd& rho, std::size_t q, const Mat2& u) {
  const std::size_t d = static_cast<std::size_t>(rho.rows());
  const std::size_t bit = std::size_t{1} << q;
  cplx* a = rho.data();  // column-major: a[col * d + row]
  const cplx u00 = u(0, 0), u01 = u(0, 1), u10 = u(1, 0), u11 = u(1, 1);
  // Left multiplication mixes row pairs within each column.
  for (std::size_t c = 0; c < d; ++c) {
    cplx* col = a + c * d;
    for (std::size_t r = 0; r < d; ++r) {
      if (r & bit) continue;
      const cplx x0 = col[r], x1 = col[r | bit];
      col[r] = u00 * x0 + u01 * x1;
      col[r | bit] = u10 * x0 + u11 * x1;
    }
  }
  // Right multiplication by U^dagger mixes column pairs.
  const cplx v00 = std::conj(u00), v01 = std::conj(u01), v10 = std::conj(u10),
             v11 = std::conj(u11);
  for (std::size_t c = 0; c < d; ++c) {
    if (c & bit) continue;
    cplx* c0 = a + c * d;
    cplx* c1 = a + (c | bit) * d;
    for (std::size_t r = 0; r < d; ++r) {
      const cplx x0 = c0[r], x1 = c1[r];
      c0[r] = x0 * v00 + x1 * v01;
      c1[r] = x0 * v10 + x1 * v11;
    }
  }
}

/// General single-qubit Kraus channel rho -> sum_k K_k rho K_k^dagger.
inline void apply_kraus(Eigen::MatrixXcd& rho, std::size_t q, std::span<const Mat2> ops) {
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(rho.rows(), rho.cols());
  for (const Mat2& k : ops) {
    Eigen::MatrixXcd t = rho;
    apply_1q(t, q, k);
    acc += t;
  }
  rho = std::move(acc);
}

inline std::array<Mat2, 2> amplitude_damping_kraus(double p) {
  Mat2 k0, k1;
  k0 << 1.0, 0.0, 0.0, std::sqrt(1.0 - p);
  k1 << 0.0, std::sqrt(p), 0.0, 0.0;
  return {k0, k1};
}

/// Phase-flip form: off-diagonals scale by (1 - p).
inline std::array<Mat2, 2> dephasing_kraus(double p) {
  Mat2 k0 = Mat2::Identity() * std::sqrt(1.0 - p / 2.0);
  Mat2 k1;
  k1 << std::sqrt(p / 2.0), 0.0, 0.0, -std::sqrt(p / 2.0);
  return {k0, k1};
}

/// Amplitude-damping and dephasing probabilities for an interval of dt_us.
inline std::pair<double, double> decoherence_probabilities(double dt_us, const QuantumConfig& cfg) {
  const double p1 = -std::expm1(-dt_us / cfg.t1_us);
  const double rate_phi = 1.0 / cfg.t2_us - 1.0 / (2.0 * cfg.t1_us);
  const double pphi = -std::expm1(-dt_us * rate_phi);
  return {p1, pphi};
}

namespace detail {

// Closed form of amplitude damping (p1) followed by dephasing (pphi) on qubit q.
inline void damp_and_dephase(Eigen::MatrixXcd& rho, std::size_t q, double p1, double pphi) {
  const std::size_t d = static_cast<std::size_t>(rho.rows());
  const std::size_t bit = std::size_t{1} << q;
  const double keep = 1.0 - p1;
  const double off = std::sqrt(keep) * (1.0 - pphi);
  cplx* a = rho.data();
  for (std::size_t c = 0; c < d; ++c) {
    if (c & bit) continue;
    cplx* c0 = a + c * d;
    cplx* c1 = a + (c | bit) * d;
    for (std::size_t r = 0; r < d; ++r) {
      if (r & bit) continue;
      const cplx r11 = c1[r | bit];
      c0[r] += p1 * r11;          // |0><0| gains decayed population/coherence
      c1[r | bit] = keep * r11;   // |1><1|
      c1[r] *= off;               // |0><1|
      c0[r | bit] *= off;         // |1><0|
    }
  }
}

inline std::vector<cplx> zz_phases(std::size_t n, double j) {
  const std::size_t d = std::size_t{1} << n;
  std::vector<cplx> ph(d);
  for (std::size_t i = 0; i < d; ++i) {
    int s = 0;
    for (std::size_t q = 0; q + 1 < n; ++q) s += (((i >> q) ^ (i >> (q + 1))) & 1U) ? -1 : 1;
    ph[i] = std::polar(1.0, -0.5 * j * s);
  }
  return ph;
}

inline void apply_diagonal(Eigen::MatrixXcd& rho, const std::vector<cplx>& ph) {
  const std::size_t d = static_cast<std::size_t>(rho.rows());
  cplx* a = rho.data();
  for (std::size_t c = 0; c < d; ++c) {
    const cplx pc = std::conj(ph[c]);
    cplx* col = a + c * d;
    for (std::size_t r = 0; r < d; ++r) col[r] *= ph[r] * pc;
  }
}

inline std::vector<double> input_scales(const QuantumConfig& cfg) {
  std::vector<double> s(cfg.n_qubits, 1.0);
  if (cfg.input_masks) {
    Rng rng(cfg.seed);
    for (double& v : s) v = rng.uniform(0.5, 1.0);
  }
  return s;
}

inline void require_match(const DensityMatrix& rho, const QuantumConfig& cfg) {
  if (rho.n_qubits() != cfg.n_qubits)
    throw DimensionError("density matrix has " + std::to_string(rho.n_qubits()) +
                         " qubits, config expects " + std::to_string(cfg.n_qubits));
}

}  // namespace detail

/// Ry(theta) on every qubit.
inline DensityMatrix encode_input(DensityMatrix rho, double theta, const QuantumConfig& cfg) {
  if (!std::isfinite(theta)) throw ParameterError("encode_input: theta must be finite");
  detail::require_match(rho, cfg);
  const auto scales = detail::input_scales(cfg);
  for (std::size_t q = 0; q < cfg.n_qubits; ++q) apply_1q(rho.matrix(), q, ry(theta * scales[q]));
  return rho;
}

/// exp(-i J Z_q Z_{q+1} / 2) on each open-chain pair, then exp(-i h X / 2) on
/// every qubit.
inline DensityMatrix apply_layer(DensityMatrix rho, const QuantumConfig& cfg) {
  detail::require_match(rho, cfg);
  if (cfg.coupling_j != 0.0 && cfg.n_qubits > 1)
    detail::apply_diagonal(rho.matrix(), detail::zz_phases(cfg.n_qubits, cfg.coupling_j));
  if (cfg.field_h != 0.0) {
    const Mat2 u = rx(cfg.field_h);
    for (std::size_t q = 0; q < cfg.n_qubits; ++q) apply_1q(rho.matrix(), q, u);
  }
  return rho;
}

/// Per-qubit amplitude damping p1 = 1 - exp(-dt/T1) and pure dephasing
/// p_phi = 1 - exp(-dt (1/T2 - 1/(2 T1))).
inline DensityMatrix apply_decoherence(DensityMatrix rho, double dt_us, const QuantumConfig& cfg) {
  if (!(dt_us >= 0.0)) throw ParameterError("apply_decoherence: dt_us must be >= 0");
  if (cfg.t2_us > 2.0 * cfg.t1_us)
    throw ParameterError("quantum.t2_us must be <= 2 * quantum.t1_us (unphysical dephasing)");
  detail::require_match(rho, cfg);
  if (dt_us == 0.0) return rho;
  const auto [p1, pphi] = decoherence_probabilities(dt_us, cfg);
  for (std::size_t q = 0; q < cfg.n_qubits; ++q) detail::damp_and_dephase(rho.matrix(), q, p1, pphi);
  return rho;
}

/// Reads exact <Z_i> and <Z_i Z_{i+1}>, then applies back-action
/// rho' = (1 - g) rho + g diag(rho).
inline std::pair<QuantumFeatures, DensityMatrix> weak_measure(DensityMatrix rho,
                                                              const QuantumConfig& cfg) {
  detail::require_match(rho, cfg);
  QuantumFeatures f;
  const std::size_t n = cfg.n_qubits;
  const std::size_t d = rho.dim();
  f.z.assign(n, 0.0);
  f.zz.assign(n > 0 ? n - 1 : 0, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    const double p = rho.matrix()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
    for (std::size_t q = 0; q < n; ++q) f.z[q] += ((i >> q) & 1U) ? -p : p;
    for (std::size_t q = 0; q + 1 < n; ++q)
      f.zz[q] += (((i >> q) ^ (i >> (q + 1))) & 1U) ? -p : p;
  }
  for (double& v : f.z) v = std::clamp(v, -1.0, 1.0);
  for (double& v : f.zz) v = std::clamp(v, -1.0, 1.0);

  const double g = cfg.meas_strength;
  if (g > 0.0) {
    const double keep = 1.0 - g;
    Eigen::MatrixXcd& m = rho.matrix();
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r)
        if (r != c) m(r, c) *= keep;
  }
  return {std::move(f), std::move(rho)};
}

/// One input step: encode, n_layers x (layer, decoherence), weak measurement.
inline std::pair<DensityMatrix, QuantumFeatures> q_step(DensityMatrix rho, double x_norm,
                                                        const QuantumConfig& cfg) {
  rho = encode_input(std::move(rho), x_norm, cfg);
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    rho = apply_layer(std::move(rho), cfg);
    rho = apply_decoherence(std::move(rho), cfg.layer_dt_us, cfg);
  }
  auto [f, out] = weak_measure(std::move(rho), cfg);
  return {std::move(out), std::move(f)};
}

/// Stateful reservoir with gate tables precomputed from the config.
class QuantumReservoir {
public:
  explicit QuantumReservoir(QuantumConfig cfg)
      : cfg_(std::move(cfg)), rho_((cfg_.validate(), DensityMatrix::ground(cfg_.n_qubits))) {
    scales_ = detail::input_scales(cfg_);
    if (cfg_.n_qubits > 1) zz_ = detail::zz_phases(cfg_.n_qubits, cfg_.coupling_j);
    field_ = rx(cfg_.field_h);
    std::tie(p1_, pphi_) = decoherence_probabilities(cfg_.layer_dt_us, cfg_);
  }

  const QuantumConfig& config() const { return cfg_; }
  const DensityMatrix& state() const { return rho_; }
  void set_state(DensityMatrix rho) {
    detail::require_match(rho, cfg_);
    rho_ = std::move(rho);
  }
  void reset() { rho_ = DensityMatrix::ground(cfg_.n_qubits); }

  QuantumFeatures step(double theta) {
    if (!std::isfinite(theta)) throw ParameterError("quantum input must be finite");
    Eigen::MatrixXcd& m = rho_.matrix();
    for (std::size_t q = 0; q < cfg_.n_qubits; ++q) apply_1q(m, q, ry(theta * scales_[q]));
    for (std::size_t l = 0; l < cfg_.n_layers; ++l) {
      if (cfg_.coupling_j != 0.0 && !zz_.empty()) detail::apply_diagonal(m, zz_);
      if (cfg_.field_h != 0.0)
        for (std::size_t q = 0; q < cfg_.n_qubits; ++q) apply_1q(m, q, field_);
      if (cfg_.layer_dt_us > 0.0)
        for (std::size_t q = 0; q < cfg_.n_qubits; ++q) detail::damp_and_dephase(m, q, p1_, pphi_);
    }
    auto [f, out] = weak_measure(std::move(rho_), cfg_);
    rho_ = std::move(out);
    return f;
  }

private:
  QuantumConfig cfg_;
  DensityMatrix rho_;
  std::vector<double> scales_;
  std::vector<cplx> zz_;
  Mat2 field_;
  double p1_ = 0.0, pphi_ = 0.0;
};

}  // namespace hpqrc
