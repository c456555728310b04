#pragma once

// Benchmark series: chaotic generators, CSV ingestion/export, min-max
// normalization, calibrated noise injection and supervised windowing.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "hpqrc/common.hpp"

namespace hpqrc {

/// Sampled signal. Multi-dimensional series are stored frame-major:
/// values[frame * dim + component].
struct TimeSeries {
  std::vector<double> values;
  std::size_t dim = 1;
  double dt = 1.0;
  std::string name;
  std::optional<std::uint64_t> seed;

  std::size_t frames() const { return dim == 0 ? 0 : values.size() / dim; }
  double at(std::size_t frame, std::size_t comp = 0) const { return values[frame * dim + comp]; }

  void validate() const {
    if (dim == 0 || values.empty() || values.size() % dim != 0)
      throw ParameterError("time series '" + name + "' is empty or ragged");
    if (!(dt > 0.0)) throw ParameterError("time series dt must be > 0");
    for (std::size_t i = 0; i < values.size(); ++i)
      if (!std::isfinite(values[i]))
        throw ParameterError("time series '" + name + "' has a non-finite value at frame " +
                             std::to_string(i / dim));
  }
};

/// Extracts one component of a multi-dimensional series as a 1-D series.
inline TimeSeries component(const TimeSeries& s, std::size_t comp) {
  if (comp >= s.dim) throw DimensionError("component index out of range");
  TimeSeries out{{}, 1, s.dt, s.name + "[" + std::to_string(comp) + "]", s.seed};
  out.values.reserve(s.frames());
  for (std::size_t f = 0; f < s.frames(); ++f) out.values.push_back(s.at(f, comp));
  return out;
}

struct MackeyGlassParams {
  double a = 0.2;
  double b = 0.1;
  double n = 10.0;
  double tau = 17.0;
  double dt = 0.1;
  double history = 1.2;
  // Keep every k-th integration step in the returned series.
  std::size_t sample_every = 1;

  std::size_t delay_steps() const { return static_cast<std::size_t>(std::llround(tau / dt)); }

  void validate() const {
    if (!(tau > 0.0)) throw ParameterError("mackey_glass.tau must be > 0");
    if (!(dt > 0.0)) throw ParameterError("mackey_glass.dt must be > 0");
    const double ratio = tau / dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio || std::round(ratio) < 1.0)
      throw ParameterError("mackey_glass.tau / mackey_glass.dt must be a positive integer");
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(n) || !std::isfinite(history))
      throw ParameterError("mackey_glass coefficients must be finite");
    if (sample_every == 0) throw ParameterError("mackey_glass.sample_every must be >= 1");
  }
};

struct LorenzParams {
  double sigma = 10.0;
  double rho = 28.0;
  double beta = 8.0 / 3.0;
  double dt = 0.01;
  std::array<double, 3> init{1.0, 1.0, 1.0};
  std::size_t sample_every = 1;

  void validate() const {
    if (!(dt > 0.0)) throw ParameterError("lorenz.dt must be > 0");
    if (!std::isfinite(sigma) || !std::isfinite(rho) || !std::isfinite(beta))
      throw ParameterError("lorenz parameters must be finite");
    for (double v : init)
      if (!std::isfinite(v)) throw ParameterError("lorenz.init must be finite");
    if (sample_every == 0) throw ParameterError("lorenz.sample_every must be >= 1");
  }
};

/// Mackey-Glass delay equation integrated by fixed-step RK4. The delayed term
/// at half steps is the linear interpolation of neighbouring grid values and
/// the history is constant for t <= 0. Element 0 is the initial value.
inline TimeSeries gen_mackey_glass(const MackeyGlassParams& p, std::size_t n_steps) {
  p.validate();
  if (n_steps == 0) throw ParameterError("n_steps must be >= 1");
  const std::size_t m = p.delay_steps();
  const std::size_t total = (n_steps - 1) * p.sample_every + 1;

  std::vector<double> x;
  x.reserve(total);
  x.push_back(p.history);
  auto past = [&](std::size_t k) {  // x at grid index k - m
    return k < m ? p.history : x[k - m];
  };
  auto rhs = [&](double xt, double xd) { return p.a * xd / (1.0 + std::pow(xd, p.n)) - p.b * xt; };

  const double h = p.dt;
  for (std::size_t k = 0; k + 1 < total; ++k) {
    const double d0 = past(k);
    const double d1 = past(k + 1);
    const double dmid = 0.5 * (d0 + d1);
    const double xk = x[k];
    const double k1 = rhs(xk, d0);
    const double k2 = rhs(xk + 0.5 * h * k1, dmid);
    const double k3 = rhs(xk + 0.5 * h * k2, dmid);
    const double k4 = rhs(xk + h * k3, d1);
    const double next = xk + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!std::isfinite(next)) throw DivergenceError("mackey-glass integration diverged", k + 1);
    x.push_back(next);
  }

  TimeSeries out{{}, 1, p.dt * static_cast<double>(p.sample_every), "mackey_glass", std::nullopt};
  out.values.reserve(n_steps);
  for (std::size_t i = 0; i < total; i += p.sample_every) out.values.push_back(x[i]);
  return out;
}

/// Lorenz system by fixed-step RK4; three components per frame.
inline TimeSeries gen_lorenz(const LorenzParams& p, std::size_t n_steps) {
  p.validate();
  if (n_steps == 0) throw ParameterError("n_steps must be >= 1");
  using V = std::array<double, 3>;
  auto f = [&](const V& s) -> V {
    return {p.sigma * (s[1] - s[0]), s[0] * (p.rho - s[2]) - s[1], s[0] * s[1] - p.beta * s[2]};
  };
  auto axpy = [](const V& s, double c, const V& d) -> V {
    return {s[0] + c * d[0], s[1] + c * d[1], s[2] + c * d[2]};
  };

  TimeSeries out{{}, 3, p.dt * static_cast<double>(p.sample_every), "lorenz", std::nullopt};
  out.values.reserve(3 * n_steps);
  V s = p.init;
  const double h = p.dt;
  std::size_t step = 0;
  for (std::size_t frame = 0; frame < n_steps; ++frame) {
    if (frame > 0) {
      for (std::size_t r = 0; r < p.sample_every; ++r) {
        const V k1 = f(s);
        const V k2 = f(axpy(s, 0.5 * h, k1));
        const V k3 = f(axpy(s, 0.5 * h, k2));
        const V k4 = f(axpy(s, h, k3));
        for (int i = 0; i < 3; ++i) s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        ++step;
        if (!std::isfinite(s[0]) || !std::isfinite(s[1]) || !std::isfinite(s[2]))
          throw DivergenceError("lorenz integration diverged", step);
      }
    }
    out.values.insert(out.values.end(), s.begin(), s.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline std::optional<double> parse_double(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return v;
}

}  // namespace detail

using ColumnRef = std::variant<std::string, std::size_t>;

/// Reads one numeric column of a headed CSV file. Lines starting with '#'
/// are comments. Row numbers in errors count data rows from 1.
inline TimeSeries load_csv(const std::string& path, const ColumnRef& column, double dt = 1.0) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open '" + path + "'");
  if (!(dt > 0.0)) throw ParameterError("dt must be > 0");

  std::string line;
  std::optional<std::vector<std::string>> header;
  std::size_t col = 0;
  std::size_t row = 0;
  TimeSeries out{{}, 1, dt, path, std::nullopt};
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto cells = detail::split_csv_line(line);
    if (!header) {
      header = cells;
      if (const auto* name = std::get_if<std::string>(&column)) {
        auto it = std::find(header->begin(), header->end(), *name);
        if (it == header->end())
          throw IngestionError("'" + path + "': column '" + *name + "' not found");
        col = static_cast<std::size_t>(it - header->begin());
        out.name = *name;
      } else {
        col = std::get<std::size_t>(column);
        if (col >= header->size())
          throw IngestionError("'" + path + "': column index " + std::to_string(col) +
                               " out of range");
        out.name = (*header)[col];
      }
      continue;
    }
    ++row;
    if (col >= cells.size())
      throw IngestionError("'" + path + "': row " + std::to_string(row) + " has no column " +
                           std::to_string(col));
    auto v = detail::parse_double(cells[col]);
    if (!v || !std::isfinite(*v))
      throw IngestionError("'" + path + "': row " + std::to_string(row) + ": non-numeric value '" +
                           cells[col] + "'");
    out.values.push_back(*v);
  }
  if (!header) throw IngestionError("'" + path + "': missing header row");
  if (out.values.empty()) throw IngestionError("'" + path + "': no rows");
  return out;
}

/// Writes (index, value...) rows. `comments` become leading '#' lines.
inline void write_csv(const TimeSeries& s, const std::string& path,
                      const std::vector<std::string>& comments = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestionError("cannot write '" + path + "'");
  for (const auto& c : comments) out << "# " << c << '\n';
  out << "index";
  if (s.dim == 1) {
    out << ",value";
  } else if (s.dim == 3) {
    out << ",x,y,z";
  } else {
    for (std::size_t k = 0; k < s.dim; ++k) out << ",v" << k;
  }
  out << '\n' << std::setprecision(17);
  for (std::size_t f = 0; f < s.frames(); ++f) {
    out << f;
    for (std::size_t k = 0; k < s.dim; ++k) out << ',' << s.at(f, k);
    out << '\n';
  }
  if (!out) throw IngestionError("write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Normalization and noise
// ---------------------------------------------------------------------------

struct NormParams {
  double src_min = 0.0;
  double src_max = 1.0;
  double dst_lo = 0.0;
  double dst_hi = 1.0;

  double apply(double v) const {
    return dst_lo + (v - src_min) * (dst_hi - dst_lo) / (src_max - src_min);
  }
  double invert(double v) const {
    return src_min + (v - dst_lo) * (src_max - src_min) / (dst_hi - dst_lo);
  }
};

/// Affine map of [min, max] onto [lo, hi]. All components share one range.
inline std::pair<TimeSeries, NormParams> normalize(const TimeSeries& s, double lo, double hi) {
  if (!(hi > lo)) throw ParameterError("normalize: hi must exceed lo");
  if (s.values.empty()) throw DegenerateError("normalize: empty series");
  const auto [mn, mx] = std::minmax_element(s.values.begin(), s.values.end());
  if (!(*mx > *mn)) throw DegenerateError("normalize: series '" + s.name + "' is constant");
  NormParams p{*mn, *mx, lo, hi};
  TimeSeries out = s;
  for (double& v : out.values) v = p.apply(v);
  // Pin the endpoints so the extrema land exactly on [lo, hi].
  out.values[static_cast<std::size_t>(mn - s.values.begin())] = lo;
  out.values[static_cast<std::size_t>(mx - s.values.begin())] = hi;
  return {std::move(out), p};
}

inline TimeSeries denormalize(const TimeSeries& s, const NormParams& p) {
  TimeSeries out = s;
  for (double& v : out.values) v = p.invert(v);
  return out;
}

/// Intermediate products of noise injection, exposed for SNR calibration.
struct NoisySignal {
  TimeSeries clean_unit;  // input mapped to [0,1]
  TimeSeries noisy_raw;   // clean_unit plus noise, before re-normalization
};

inline NoisySignal inject_noise(const TimeSeries& s, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw ParameterError("noise sigma must be finite and >= 0");
  auto [unit, _] = normalize(s, 0.0, 1.0);
  TimeSeries noisy = unit;
  noisy.seed = seed;
  if (sigma > 0.0) {
    Rng rng(seed);
    for (double& v : noisy.values) v += sigma * rng.normal();
  }
  return {std::move(unit), std::move(noisy)};
}

/// Normalizes to [0,1], adds N(0, sigma^2) per sample and re-normalizes to
/// [0,1] using the observed extrema of the noisy signal.
inline TimeSeries add_gaussian_noise(const TimeSeries& s, double sigma, std::uint64_t seed) {
  auto noisy = inject_noise(s, sigma, seed);
  auto out = normalize(noisy.noisy_raw, 0.0, 1.0).first;
  out.seed = seed;
  return out;
}

/// Full-scale signal-to-noise ratio, 20 log10(range(clean) / rms(noisy - clean)).
inline double snr_db(const TimeSeries& clean, const TimeSeries& noisy) {
  if (clean.values.size() != noisy.values.size() || clean.values.empty())
    throw DimensionError("snr_db: length mismatch");
  const auto [mn, mx] = std::minmax_element(clean.values.begin(), clean.values.end());
  double ss = 0.0;
  for (std::size_t i = 0; i < clean.values.size(); ++i) {
    const double d = noisy.values[i] - clean.values[i];
    ss += d * d;
  }
  const double rms = std::sqrt(ss / static_cast<double>(clean.values.size()));
  if (rms == 0.0) throw DegenerateError("snr_db: noise power is zero");
  return 20.0 * std::log10((*mx - *mn) / rms);
}

// ---------------------------------------------------------------------------
// Supervised windows
// ---------------------------------------------------------------------------

struct SupervisedSet {
  std::vector<double> inputs;
  std::vector<double> targets;
  std::size_t horizon = 1;
  std::size_t washout = 0;
  double split = 0.8;
  // Index in the source series of inputs[0].
  std::size_t start_index = 0;

  std::size_t size() const { return inputs.size(); }
};

/// Pairs input x[t] with target x[t + horizon] for t >= washout and splits
/// the pairs chronologically into (train, test).
inline std::pair<SupervisedSet, SupervisedSet> make_supervised(const TimeSeries& s,
                                                               std::size_t horizon,
                                                               std::size_t washout, double split) {
  if (s.dim != 1) throw DimensionError("make_supervised expects a 1-D series");
  if (!(split > 0.0 && split < 1.0)) throw ParameterError("split must lie in (0,1)");
  if (horizon == 0) throw ParameterError("horizon must be >= 1");
  const std::size_t n = s.values.size();
  if (n <= washout + horizon + 10)
    throw SizingError("series of length " + std::to_string(n) + " too short for washout " +
                      std::to_string(washout) + " and horizon " + std::to_string(horizon));
  const std::size_t pairs = n - horizon - washout;
  const auto n_train = static_cast<std::size_t>(std::floor(split * static_cast<double>(pairs)));
  if (n_train == 0 || n_train == pairs) throw SizingError("split leaves an empty partition");

  SupervisedSet train{{}, {}, horizon, washout, split, washout};
  SupervisedSet test{{}, {}, horizon, washout, split, washout + n_train};
  for (std::size_t i = 0; i < pairs; ++i) {
    const std::size_t t = washout + i;
    SupervisedSet& dst = i < n_train ? train : test;
    dst.inputs.push_back(s.values[t]);
    dst.targets.push_back(s.values[t + horizon]);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace hpqrc
