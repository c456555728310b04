#pragma once

// Lumped time-delay photonic reservoir: virtual nodes of one Kerr-nonlinear
// delay loop with propagation loss, plus the PID controller that steers the
// loop's global phase from prediction error.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hpqrc/common.hpp"

namespace hpqrc {

struct PhotonicConfig {
  std::size_t n_virtual = 50;
  std::uint64_t mask_seed = 42;
  double feedback_gain = 0.77;  // alpha
  double input_gain = 0.39;     // beta
  double kerr_coeff = 1.0;      // gamma, rad per unit power
  double loss_db_per_cm = 0.5;
  double length_cm = 0.1;
  double bias_phase = 0.87;  // phi_0
  double actuator_limit = kPi;
  // Node k reads the delayed field of node (k - ring_shift) mod n. 0 keeps
  // every node on its own loop; 1 is the desynchronized delay line, where
  // the loop is one node longer than the input period.
  std::size_t ring_shift = 1;
  // Recorded in manifests only; the lumped model does not use them.
  double wavelength_nm = 1550.0;
  double rise_time_us = 5.0;

  double transmission() const;

  void validate() const {
    if (n_virtual < 1) throw ParameterError("photonic.n_virtual must be >= 1");
    if (!(loss_db_per_cm >= 0.0) || !(length_cm >= 0.0))
      throw ParameterError("photonic.loss_db_per_cm and photonic.length_cm must be >= 0");
    if (!(feedback_gain >= 0.0 && feedback_gain < 1.0))
      throw ParameterError("photonic.feedback_gain must lie in [0, 1)");
    if (!(feedback_gain * transmission() < 1.0))
      throw ParameterError("photonic.feedback_gain * loss factor must be < 1");
    if (!std::isfinite(input_gain) || !std::isfinite(kerr_coeff) || !std::isfinite(bias_phase))
      throw ParameterError("photonic gains and phases must be finite");
    if (!(actuator_limit > 0.0)) throw ParameterError("photonic.actuator_limit must be > 0");
  }
};

/// Amplitude transmission 10^(-loss * length / 20).
inline double loss_factor(double loss_db_per_cm, double length_cm) {
  if (loss_db_per_cm < 0.0 || length_cm < 0.0)
    throw ParameterError("loss_factor: inputs must be >= 0");
  return std::pow(10.0, -loss_db_per_cm * length_cm / 20.0);
}

inline double PhotonicConfig::transmission() const { return loss_factor(loss_db_per_cm, length_cm); }

/// e' = L [ alpha e exp(i(phi0 + shift + gamma |e|^2)) + beta drive ]
inline std::complex<double> node_update(std::complex<double> e_prev, double drive,
                                        double phase_shift, const PhotonicConfig& cfg) {
  const double phase = cfg.bias_phase + phase_shift + cfg.kerr_coeff * std::norm(e_prev);
  return cfg.transmission() *
         (cfg.feedback_gain * e_prev * std::polar(1.0, phase) + cfg.input_gain * drive);
}

/// +/-1 input mask, a pure function of (n, seed).
inline std::vector<double> make_mask(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> m(n);
  for (double& v : m) v = (rng.next_u64() >> 63) ? 1.0 : -1.0;
  return m;
}

struct PhotonicState {
  std::vector<std::complex<double>> fields;
  std::size_t step_index = 0;

  static PhotonicState zeros(std::size_t n) { return {std::vector<std::complex<double>>(n), 0}; }
};

struct PhotonicFeatures {
  std::vector<double> intensities;
};

/// Amplitude bound implied by the contraction alpha * L < 1.
inline double field_bound(const PhotonicConfig& cfg, double max_abs_input) {
  return (std::abs(cfg.input_gain) * max_abs_input + std::abs(cfg.bias_phase)) /
         (1.0 - cfg.feedback_gain * cfg.transmission());
}

/// Advances every virtual node from the delayed field of node
/// (k - ring_shift) mod n. Node k receives mask[k] * drives[k % drives.size()].
inline std::pair<PhotonicState, PhotonicFeatures> p_step(PhotonicState state,
                                                         std::span<const double> drives,
                                                         double phase_shift,
                                                         const PhotonicConfig& cfg,
                                                         std::span<const double> mask) {
  const std::size_t n = cfg.n_virtual;
  if (state.fields.size() != n || mask.size() != n)
    throw DimensionError("photonic state/mask size does not match n_virtual");
  if (drives.empty()) throw DimensionError("photonic drive is empty");
  const double trans = cfg.transmission();
  const std::size_t shift = cfg.ring_shift % n;
  const std::vector<std::complex<double>> delayed = state.fields;
  PhotonicFeatures f;
  f.intensities.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::complex<double> e = delayed[(k + n - shift) % n];
    const double phase = cfg.bias_phase + phase_shift + cfg.kerr_coeff * std::norm(e);
    const double drive = mask[k] * drives[k % drives.size()];
    const std::complex<double> next =
        trans * (cfg.feedback_gain * e * std::polar(1.0, phase) + cfg.input_gain * drive);
    if (!std::isfinite(next.real()) || !std::isfinite(next.imag()))
      throw DivergenceError("photonic reservoir became unstable", state.step_index);
    state.fields[k] = next;
    f.intensities[k] = std::norm(next);
  }
  ++state.step_index;
  return {std::move(state), std::move(f)};
}

inline std::pair<PhotonicState, PhotonicFeatures> p_step(PhotonicState state, double x_t,
                                                         double phase_shift,
                                                         const PhotonicConfig& cfg) {
  const auto mask = make_mask(cfg.n_virtual, cfg.mask_seed);
  const double drive[] = {x_t};
  return p_step(std::move(state), drive, phase_shift, cfg, mask);
}

// ---------------------------------------------------------------------------
// PID phase controller
// ---------------------------------------------------------------------------

/// Discrete PID: trapezoidal integral with clamping anti-windup and a
/// first-order low-pass filter on the backward-difference derivative.
struct PidController {
  double kp = 0.45;
  double ki = 0.12;
  double kd = 0.08;
  double dt_s = 1e-3;
  double lpf_cutoff_hz = 50.0;
  double out_min = -kPi;
  double out_max = kPi;

  double integ = 0.0;
  double deriv_filtered = 0.0;
  double prev_error = 0.0;

  void validate() const {
    if (!(dt_s > 0.0)) throw ParameterError("pid.dt_s must be > 0");
    if (!(lpf_cutoff_hz > 0.0)) throw ParameterError("pid.lpf_cutoff_hz must be > 0");
    if (!(out_max > out_min)) throw ParameterError("pid.out_max must exceed pid.out_min");
  }

  /// Smoothing factor of the derivative filter, dt / (tau + dt).
  double filter_alpha() const {
    const double tau = 1.0 / (2.0 * kPi * lpf_cutoff_hz);
    return dt_s / (tau + dt_s);
  }

  double update(double error) {
    const double p = kp * error;

    integ += 0.5 * dt_s * (error + prev_error);
    if (ki > 0.0) {
      integ = std::clamp(integ, out_min / ki, out_max / ki);
    } else if (ki < 0.0) {
      integ = std::clamp(integ, out_max / ki, out_min / ki);
    }

    const double raw = (error - prev_error) / dt_s;
    deriv_filtered += filter_alpha() * (raw - deriv_filtered);
    prev_error = error;

    return std::clamp(p + ki * integ + kd * deriv_filtered, out_min, out_max);
  }

  void reset() { integ = deriv_filtered = prev_error = 0.0; }
};

inline std::pair<PidController, double> pid_update(PidController pid, double error) {
  const double u = pid.update(error);
  return {pid, u};
}

inline double control_error(double y_pred, double y_true) { return y_pred - y_true; }

/// Stateful delay-line reservoir with its mask fixed at construction.
class PhotonicReservoir {
public:
  explicit PhotonicReservoir(PhotonicConfig cfg)
      : cfg_((cfg.validate(), std::move(cfg))),
        mask_(make_mask(cfg_.n_virtual, cfg_.mask_seed)),
        state_(PhotonicState::zeros(cfg_.n_virtual)) {}

  const PhotonicConfig& config() const { return cfg_; }
  const std::vector<double>& mask() const { return mask_; }
  const PhotonicState& state() const { return state_; }
  void set_state(PhotonicState s) { state_ = std::move(s); }
  void reset() { state_ = PhotonicState::zeros(cfg_.n_virtual); }

  PhotonicFeatures step(std::span<const double> drives, double phase_shift) {
    auto [s, f] = p_step(std::move(state_), drives, phase_shift, cfg_, mask_);
    state_ = std::move(s);
    return f;
  }

  PhotonicFeatures step(double x, double phase_shift) {
    const double d[] = {x};
    return step(std::span<const double>(d), phase_shift);
  }

private:
  PhotonicConfig cfg_;
  std::vector<double> mask_;
  PhotonicState state_;
};

}  // namespace hpqrc
