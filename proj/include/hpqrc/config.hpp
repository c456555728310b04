#pragma once

// Flat `key = value` configuration files. Units are part of the key names.
// Every key is described once in a table that drives parsing, range checks
// and canonical serialization, so parse -> serialize -> parse is identity.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hpqrc/experiment.hpp"

namespace hpqrc {

class ConfigError : public ParameterError {
public:
  ConfigError(const std::string& key, const std::string& msg)
      : ParameterError("config key '" + key + "': " + msg), key_(key) {}
  const std::string& key() const { return key_; }

private:
  std::string key_;
};

struct ExperimentGrid {
  std::vector<std::string> models{"hpqrc", "esn"};
  std::vector<std::string> datasets{"mackey_glass"};
  std::vector<double> noise_sigmas{0.0, 0.1, 0.3};
  // Explicit seeds override `trials`; otherwise seeds are base_seed + i.
  std::vector<std::uint64_t> seeds;
  std::size_t trials = 10;

  std::vector<std::uint64_t> seed_list(std::uint64_t base_seed) const {
    if (!seeds.empty()) return seeds;
    std::vector<std::uint64_t> s(trials);
    for (std::size_t i = 0; i < trials; ++i) s[i] = base_seed + i;
    return s;
  }

  void validate() const {
    if (models.empty()) throw ConfigError("sweep.models", "must not be empty");
    if (datasets.empty()) throw ConfigError("sweep.datasets", "must not be empty");
    if (noise_sigmas.empty()) throw ConfigError("sweep.sigmas", "must not be empty");
    if (seeds.empty() && trials == 0) throw ConfigError("sweep.trials", "must be >= 1");
  }
};

namespace cfgdetail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt_range(double lo, double hi) {
  auto f = [](double v) {
    if (std::isinf(v)) return std::string(v > 0 ? "inf" : "-inf");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return std::string(buf);
  };
  return "[" + f(lo) + ", " + f(hi) + "]";
}

inline double to_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(x))
    throw ConfigError(key, "'" + v + "' is not a finite number");
  return x;
}

inline std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty())
    throw ConfigError(key, "'" + v + "' is not a non-negative integer");
  return x;
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError(key, "'" + v + "' is not one of {true, false}");
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
std::string join(const std::vector<T>& xs, const std::function<std::string(const T&)>& f) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + f(xs[i]);
  return s;
}

template <class C>
struct Key {
  std::string name;
  std::function<std::string(const C&)> get;
  std::function<void(C&, const std::string&)> set;
};

// Builders over accessor lambdas returning a reference into the config.
template <class C, class F>
Key<C> real(std::string name, F ref, double lo, double hi, bool lo_open = false) {
  return {name, [ref](const C& c) { return fmt_double(ref(const_cast<C&>(c))); },
          [ref, name, lo, hi, lo_open](C& c, const std::string& v) {
            const double x = to_double(name, v);
            if (x < lo || x > hi || (lo_open && x == lo))
              throw ConfigError(name, "value " + v + " outside accepted range " +
                                          (lo_open ? "(" + fmt_range(lo, hi).substr(1) : fmt_range(lo, hi)));
            ref(c) = x;
          }};
}

template <class C, class F>
Key<C> integer(std::string name, F ref, std::uint64_t lo, std::uint64_t hi) {
  return {name, [ref](const C& c) { return std::to_string(ref(const_cast<C&>(c))); },
          [ref, name, lo, hi](C& c, const std::string& v) {
            const std::uint64_t x = to_uint(name, v);
            if (x < lo || x > hi)
              throw ConfigError(name, "value " + v + " outside accepted range [" + std::to_string(lo) + ", " +
                                          std::to_string(hi) + "]");
            ref(c) = static_cast<std::remove_reference_t<decltype(ref(c))>>(x);
          }};
}

template <class C, class F>
Key<C> boolean(std::string name, F ref) {
  return {name, [ref](const C& c) { return std::string(ref(const_cast<C&>(c)) ? "true" : "false"); },
          [ref, name](C& c, const std::string& v) { ref(c) = to_bool(name, v); }};
}

template <class C, class E, class F>
Key<C> choice(std::string name, F ref, std::vector<std::pair<std::string, E>> options) {
  return {name,
          [ref, options](const C& c) {
            for (const auto& [s, e] : options)
              if (ref(const_cast<C&>(c)) == e) return s;
            return std::string("?");
          },
          [ref, name, options](C& c, const std::string& v) {
            std::string accepted;
            for (const auto& [s, e] : options) {
              if (s == v) {
                ref(c) = e;
                return;
              }
              accepted += (accepted.empty() ? "" : ", ") + s;
            }
            throw ConfigError(name, "'" + v + "' is not one of {" + accepted + "}");
          }};
}

inline void set_dataset(DatasetSpec& d, const std::string& key, const std::string& v) {
  if (v == "mackey_glass") {
    d.kind = DatasetKind::mackey_glass;
  } else if (v == "lorenz") {
    d.kind = DatasetKind::lorenz;
  } else if (v.rfind("csv:", 0) == 0 && v.size() > 4) {
    d.kind = DatasetKind::csv;
    d.csv_path = v.substr(4);
  } else {
    throw ConfigError(key, "'" + v + "' is not one of {mackey_glass, lorenz, csv:<path>}");
  }
}

using EC = ExperimentConfig;

inline const std::vector<Key<EC>>& experiment_keys() {
  static const std::vector<Key<EC>> keys = [] {
    constexpr double inf = std::numeric_limits<double>::infinity();
    constexpr std::uint64_t umax = std::numeric_limits<std::uint64_t>::max();
    std::vector<Key<EC>> k;
    k.push_back({"model", [](const EC& c) { return c.model; },
                 [](EC& c, const std::string& v) {
                   if (v != "hpqrc" && v != "quantum_only" && v != "esn" && v != "ar")
                     throw ConfigError("model", "'" + v + "' is not one of {hpqrc, quantum_only, esn, ar}");
                   c.model = v;
                 }});
    k.push_back({"dataset", [](const EC& c) { return c.dataset.name(); },
                 [](EC& c, const std::string& v) { set_dataset(c.dataset, "dataset", v); }});
    k.push_back({"dataset.csv_column", [](const EC& c) { return c.dataset.csv_column; },
                 [](EC& c, const std::string& v) {
                   if (v.empty()) throw ConfigError("dataset.csv_column", "must not be empty");
                   c.dataset.csv_column = v;
                 }});
    k.push_back(integer<EC>("dataset.transient_frames", [](EC& c) -> std::size_t& { return c.dataset.transient; }, 0, 1000000));
    k.push_back(boolean<EC>("dataset.jitter_init", [](EC& c) -> bool& { return c.dataset.jitter_init; }));
    k.push_back(real<EC>("mackey_glass.a", [](EC& c) -> double& { return c.dataset.mackey_glass.a; }, -inf, inf));
    k.push_back(real<EC>("mackey_glass.b", [](EC& c) -> double& { return c.dataset.mackey_glass.b; }, -inf, inf));
    k.push_back(real<EC>("mackey_glass.n", [](EC& c) -> double& { return c.dataset.mackey_glass.n; }, 0, inf, true));
    k.push_back(real<EC>("mackey_glass.tau", [](EC& c) -> double& { return c.dataset.mackey_glass.tau; }, 0, inf, true));
    k.push_back(real<EC>("mackey_glass.dt", [](EC& c) -> double& { return c.dataset.mackey_glass.dt; }, 0, inf, true));
    k.push_back(real<EC>("mackey_glass.history", [](EC& c) -> double& { return c.dataset.mackey_glass.history; }, -inf, inf));
    k.push_back(integer<EC>("mackey_glass.sample_every", [](EC& c) -> std::size_t& { return c.dataset.mackey_glass.sample_every; }, 1, 1000000));
    k.push_back(real<EC>("lorenz.sigma", [](EC& c) -> double& { return c.dataset.lorenz.sigma; }, -inf, inf));
    k.push_back(real<EC>("lorenz.rho", [](EC& c) -> double& { return c.dataset.lorenz.rho; }, -inf, inf));
    k.push_back(real<EC>("lorenz.beta", [](EC& c) -> double& { return c.dataset.lorenz.beta; }, -inf, inf));
    k.push_back(real<EC>("lorenz.dt", [](EC& c) -> double& { return c.dataset.lorenz.dt; }, 0, inf, true));
    k.push_back(integer<EC>("lorenz.sample_every", [](EC& c) -> std::size_t& { return c.dataset.lorenz.sample_every; }, 1, 1000000));
    k.push_back(integer<EC>("lorenz.component", [](EC& c) -> std::size_t& { return c.dataset.lorenz_component; }, 0, 2));
    k.push_back(integer<EC>("data.n_train", [](EC& c) -> std::size_t& { return c.n_train; }, 1, 100000000));
    k.push_back(integer<EC>("data.n_test", [](EC& c) -> std::size_t& { return c.n_test; }, 2, 100000000));
    k.push_back(integer<EC>("data.washout", [](EC& c) -> std::size_t& { return c.washout; }, 0, 100000000));
    k.push_back(integer<EC>("data.horizon", [](EC& c) -> std::size_t& { return c.horizon; }, 1, 100000));
    k.push_back(real<EC>("noise.sigma", [](EC& c) -> double& { return c.noise_sigma; }, 0, inf));
    k.push_back(choice<EC, bool>("noise.eval_target", [](EC& c) -> bool& { return c.eval_clean; },
                                 {{"clean", true}, {"noisy", false}}));
    k.push_back(integer<EC>("seed", [](EC& c) -> std::uint64_t& { return c.seed; }, 0, umax));

    k.push_back(choice<EC, Topology>("hybrid.topology", [](EC& c) -> Topology& { return c.hybrid.topology; },
                                     {{"parallel", Topology::parallel}, {"sequential", Topology::sequential}}));
    k.push_back(choice<EC, Fusion>("hybrid.fusion", [](EC& c) -> Fusion& { return c.hybrid.fusion; },
                                   {{"concat", Fusion::concat}, {"concat_plus_products", Fusion::concat_plus_products}}));
    k.push_back(choice<EC, BridgePrecision>("hybrid.bridge_precision",
                                            [](EC& c) -> BridgePrecision& { return c.hybrid.bridge_precision; },
                                            {{"single", BridgePrecision::single}, {"double", BridgePrecision::double_}}));
    k.push_back(real<EC>("hybrid.bridge_latency_ms", [](EC& c) -> double& { return c.hybrid.bridge_latency_ms; }, 0, inf));

    k.push_back(integer<EC>("quantum.n_qubits", [](EC& c) -> std::size_t& { return c.hybrid.quantum.n_qubits; }, 1, 10));
    k.push_back(integer<EC>("quantum.n_layers", [](EC& c) -> std::size_t& { return c.hybrid.quantum.n_layers; }, 1, 1000));
    k.push_back(real<EC>("quantum.coupling_j", [](EC& c) -> double& { return c.hybrid.quantum.coupling_j; }, -inf, inf));
    k.push_back(real<EC>("quantum.field_h", [](EC& c) -> double& { return c.hybrid.quantum.field_h; }, -inf, inf));
    k.push_back(real<EC>("quantum.layer_dt_us", [](EC& c) -> double& { return c.hybrid.quantum.layer_dt_us; }, 0, inf));
    k.push_back(real<EC>("quantum.t1_us", [](EC& c) -> double& { return c.hybrid.quantum.t1_us; }, 0, inf, true));
    k.push_back(real<EC>("quantum.t2_us", [](EC& c) -> double& { return c.hybrid.quantum.t2_us; }, 0, inf, true));
    k.push_back(real<EC>("quantum.meas_strength", [](EC& c) -> double& { return c.hybrid.quantum.meas_strength; }, 0, 1));
    k.push_back(boolean<EC>("quantum.input_masks", [](EC& c) -> bool& { return c.hybrid.quantum.input_masks; }));

    k.push_back(integer<EC>("photonic.n_virtual", [](EC& c) -> std::size_t& { return c.hybrid.photonic.n_virtual; }, 1, 100000));
    k.push_back(real<EC>("photonic.feedback_gain", [](EC& c) -> double& { return c.hybrid.photonic.feedback_gain; }, 0, 1));
    k.push_back(real<EC>("photonic.input_gain", [](EC& c) -> double& { return c.hybrid.photonic.input_gain; }, -inf, inf));
    k.push_back(real<EC>("photonic.kerr_coeff", [](EC& c) -> double& { return c.hybrid.photonic.kerr_coeff; }, -inf, inf));
    k.push_back(real<EC>("photonic.loss_db_per_cm", [](EC& c) -> double& { return c.hybrid.photonic.loss_db_per_cm; }, 0, inf));
    k.push_back(real<EC>("photonic.length_cm", [](EC& c) -> double& { return c.hybrid.photonic.length_cm; }, 0, inf));
    k.push_back(real<EC>("photonic.bias_phase", [](EC& c) -> double& { return c.hybrid.photonic.bias_phase; }, -inf, inf));
    k.push_back(real<EC>("photonic.actuator_limit", [](EC& c) -> double& { return c.hybrid.photonic.actuator_limit; }, 0, inf, true));
    k.push_back(integer<EC>("photonic.ring_shift", [](EC& c) -> std::size_t& { return c.hybrid.photonic.ring_shift; }, 0, 100000));
    k.push_back(real<EC>("photonic.wavelength_nm", [](EC& c) -> double& { return c.hybrid.photonic.wavelength_nm; }, 0, inf, true));
    k.push_back(real<EC>("photonic.rise_time_us", [](EC& c) -> double& { return c.hybrid.photonic.rise_time_us; }, 0, inf));

    k.push_back(boolean<EC>("pid.enabled", [](EC& c) -> bool& { return c.hybrid.pid_enabled; }));
    k.push_back(real<EC>("pid.kp", [](EC& c) -> double& { return c.hybrid.pid.kp; }, -inf, inf));
    k.push_back(real<EC>("pid.ki", [](EC& c) -> double& { return c.hybrid.pid.ki; }, -inf, inf));
    k.push_back(real<EC>("pid.kd", [](EC& c) -> double& { return c.hybrid.pid.kd; }, -inf, inf));
    k.push_back(real<EC>("pid.dt_s", [](EC& c) -> double& { return c.hybrid.pid.dt_s; }, 0, inf, true));
    k.push_back(real<EC>("pid.lpf_cutoff_hz", [](EC& c) -> double& { return c.hybrid.pid.lpf_cutoff_hz; }, 0, inf, true));

    k.push_back(integer<EC>("esn.n_nodes", [](EC& c) -> std::size_t& { return c.esn.n_nodes; }, 1, 20000));
    k.push_back(real<EC>("esn.spectral_radius", [](EC& c) -> double& { return c.esn.spectral_radius; }, 0, inf, true));
    k.push_back(real<EC>("esn.leak_rate", [](EC& c) -> double& { return c.esn.leak_rate; }, 0, 1, true));
    k.push_back(real<EC>("esn.input_scale", [](EC& c) -> double& { return c.esn.input_scale; }, -inf, inf));
    k.push_back(real<EC>("esn.density", [](EC& c) -> double& { return c.esn.density; }, 0, 1, true));

    k.push_back(integer<EC>("quantum_only.n_qubits", [](EC& c) -> std::size_t& { return c.quantum_only.n_qubits; }, 1, 10));
    k.push_back(integer<EC>("ar.p_max", [](EC& c) -> std::size_t& { return c.ar_p_max; }, 0, 1000));
    k.push_back(boolean<EC>("ar.difference", [](EC& c) -> bool& { return c.ar_difference; }));

    k.push_back(real<EC>("readout.lambda", [](EC& c) -> double& { return c.readout.lambda; }, 0, inf));
    k.push_back(choice<EC, Trainer>("readout.trainer", [](EC& c) -> Trainer& { return c.readout.trainer; },
                                    {{"ridge", Trainer::ridge}, {"iterative", Trainer::iterative}}));
    k.push_back(integer<EC>("readout.cv_folds", [](EC& c) -> std::size_t& { return c.readout.cv_folds; }, 0, 1000));
    k.push_back({"readout.lambda_grid",
                 [](const EC& c) { return join<double>(c.readout.lambda_grid, fmt_double); },
                 [](EC& c, const std::string& v) {
                   std::vector<double> g;
                   for (const auto& s : split_list(v)) {
                     const double x = to_double("readout.lambda_grid", s);
                     if (x < 0) throw ConfigError("readout.lambda_grid", "value " + s + " outside accepted range [0, inf]");
                     g.push_back(x);
                   }
                   if (g.empty()) throw ConfigError("readout.lambda_grid", "must not be empty");
                   c.readout.lambda_grid = g;
                 }});
    k.push_back(real<EC>("readout.lr", [](EC& c) -> double& { return c.readout.adam.lr; }, 0, inf, true));
    k.push_back(integer<EC>("readout.epochs", [](EC& c) -> std::size_t& { return c.readout.adam.epochs; }, 1, 1000000));
    k.push_back(integer<EC>("readout.batch_size", [](EC& c) -> std::size_t& { return c.readout.adam.batch_size; }, 1, 100000000));
    k.push_back(integer<EC>("eval.free_run_steps", [](EC& c) -> std::size_t& { return c.free_run_steps; }, 0, 100000000));
    return k;
  }();
  return keys;
}

using EG = ExperimentGrid;

inline const std::vector<Key<EG>>& grid_keys() {
  static const std::vector<Key<EG>> keys = [] {
    std::vector<Key<EG>> k;
    k.push_back({"sweep.models", [](const EG& g) { return join<std::string>(g.models, [](const std::string& s) { return s; }); },
                 [](EG& g, const std::string& v) {
                   g.models = split_list(v);
                   for (const auto& m : g.models)
                     if (m != "hpqrc" && m != "quantum_only" && m != "esn" && m != "ar")
                       throw ConfigError("sweep.models", "'" + m + "' is not one of {hpqrc, quantum_only, esn, ar}");
                   if (g.models.empty()) throw ConfigError("sweep.models", "must not be empty");
                 }});
    k.push_back({"sweep.datasets", [](const EG& g) { return join<std::string>(g.datasets, [](const std::string& s) { return s; }); },
                 [](EG& g, const std::string& v) {
                   g.datasets = split_list(v);
                   DatasetSpec probe;
                   for (const auto& d : g.datasets) set_dataset(probe, "sweep.datasets", d);
                   if (g.datasets.empty()) throw ConfigError("sweep.datasets", "must not be empty");
                 }});
    k.push_back({"sweep.sigmas", [](const EG& g) { return join<double>(g.noise_sigmas, fmt_double); },
                 [](EG& g, const std::string& v) {
                   g.noise_sigmas.clear();
                   for (const auto& s : split_list(v)) {
                     const double x = to_double("sweep.sigmas", s);
                     if (x < 0) throw ConfigError("sweep.sigmas", "value " + s + " outside accepted range [0, inf]");
                     g.noise_sigmas.push_back(x);
                   }
                   if (g.noise_sigmas.empty()) throw ConfigError("sweep.sigmas", "must not be empty");
                 }});
    k.push_back({"sweep.seeds",
                 [](const EG& g) { return join<std::uint64_t>(g.seeds, [](const std::uint64_t& s) { return std::to_string(s); }); },
                 [](EG& g, const std::string& v) {
                   g.seeds.clear();
                   for (const auto& s : split_list(v)) g.seeds.push_back(to_uint("sweep.seeds", s));
                 }});
    k.push_back(integer<EG>("sweep.trials", [](EG& g) -> std::size_t& { return g.trials; }, 1, 100000));
    return k;
  }();
  return keys;
}

}  // namespace cfgdetail

struct ConfigFile {
  ExperimentConfig experiment;
  ExperimentGrid grid;
  bool has_grid = false;
};

/// Applies one `key = value` assignment.
inline void set_config_value(ConfigFile& cf, const std::string& key, const std::string& value) {
  for (const auto& k : cfgdetail::experiment_keys())
    if (k.name == key) return k.set(cf.experiment, value);
  for (const auto& k : cfgdetail::grid_keys())
    if (k.name == key) {
      cf.has_grid = true;
      return k.set(cf.grid, value);
    }
  throw ConfigError(key, "unknown key");
}

/// Cross-field checks after all keys are applied.
inline void validate_config(const ExperimentConfig& c) {
  auto wrap = [](const char* key, auto&& fn) {
    try {
      fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const ParameterError& e) {
      throw ConfigError(key, e.what());
    }
  };
  wrap("quantum", [&] { c.hybrid.quantum.validate(); });
  wrap("photonic", [&] { c.hybrid.photonic.validate(); });
  wrap("pid", [&] { c.hybrid.pid.validate(); });
  wrap("esn", [&] { c.esn.validate(); });
  wrap("quantum_only", [&] { c.quantum_only.validate(); });
  wrap("mackey_glass", [&] { c.dataset.mackey_glass.validate(); });
  if (c.readout.cv_folds == 1) throw ConfigError("readout.cv_folds", "value 1 outside accepted range {0} or [2, 1000]");
  if (c.readout.cv_folds > c.n_train)
    throw ConfigError("readout.cv_folds", "exceeds data.n_train");
}

inline ConfigFile parse_config_text(const std::string& text) {
  ConfigFile cf;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::map<std::string, std::size_t> seen;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = cfgdetail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(t, "line " + std::to_string(lineno) + " is not of the form key = value");
    const std::string key = cfgdetail::trim(std::string_view(t).substr(0, eq));
    const std::string value = cfgdetail::trim(std::string_view(t).substr(eq + 1));
    if (auto it = seen.find(key); it != seen.end())
      throw ConfigError(key, "duplicate key (lines " + std::to_string(it->second) + " and " + std::to_string(lineno) + ")");
    seen[key] = lineno;
    set_config_value(cf, key, value);
  }
  validate_config(cf.experiment);
  if (cf.has_grid) cf.grid.validate();
  return cf;
}

inline ConfigFile load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IngestionError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

/// Canonical text of every experiment key, in table order.
inline std::string serialize_config(const ExperimentConfig& c) {
  std::string s;
  for (const auto& k : cfgdetail::experiment_keys()) s += k.name + " = " + k.get(c) + "\n";
  return s;
}

inline std::string serialize_config(const ConfigFile& cf) {
  std::string s = serialize_config(cf.experiment);
  if (cf.has_grid)
    for (const auto& k : cfgdetail::grid_keys()) s += k.name + " = " + k.get(cf.grid) + "\n";
  return s;
}

/// Key -> canonical value, for manifests.
inline std::map<std::string, std::string> config_map(const ExperimentConfig& c) {
  std::map<std::string, std::string> m;
  for (const auto& k : cfgdetail::experiment_keys()) m[k.name] = k.get(c);
  return m;
}

}  // namespace hpqrc
