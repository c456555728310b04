#pragma once

// Benchmark harness: run manifests, single runs, grid sweeps, paired
// comparisons and plot-data reports. All outputs are UTF-8 CSV or JSON.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <ctime>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "hpqrc/config.hpp"
#include "hpqrc/experiment.hpp"
#include "hpqrc/metrics_stats.hpp"

namespace hpqrc {

namespace fs = std::filesystem;

inline constexpr const char* kAccuracyDefinition = "accuracy_pct = 100 * max(0, 1 - NMSE) on the test split";

struct RunManifest {
  std::string run_id;
  std::string timestamp;
  std::string toolkit_version = kToolkitVersion;
  std::map<std::string, std::string> config;  // canonical key -> value

  std::string model;
  std::string dataset;
  double sigma = 0.0;
  std::uint64_t seed = 0;

  MetricReport metrics;
  double train_nmse = 0.0;
  double train_target_var = 0.0;
  double chosen_lambda = 0.0;
  std::size_t feature_dim = 0;
  std::vector<double> cv_fold_scores;
  std::vector<double> epoch_loss;
  std::size_t ar_order = 0;
  std::size_t free_run_steps = 0;
  bool free_run_bounded = true;
  double free_run_max_excursion = 0.0;

  double train_time_s = 0.0;
  double test_time_s = 0.0;
  double latency_ms = 0.0;
  double throughput_pps = 0.0;

  std::map<std::string, std::string> artifacts;
  std::map<std::string, std::string> metadata;

  bool operator==(const RunManifest&) const = default;
};

namespace benchdetail {

// Non-finite doubles are stored as strings so the JSON stays valid.
inline nlohmann::json num(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

inline double get_num(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    return s == "inf" ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  }
  return j.get<double>();
}

inline std::string sanitize(std::string s) {
  for (char& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') c = '_';
  return s;
}

inline std::string fmt(double v, int prec = 17) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw IngestionError("cannot write '" + p.string() + "'");
  f << text;
  if (!f) throw IngestionError("write failed for '" + p.string() + "'");
}

inline std::string read_text(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw IngestionError("cannot open '" + p.string() + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace benchdetail

inline nlohmann::json to_json(const RunManifest& m) {
  using benchdetail::num;
  nlohmann::json j;
  j["run_id"] = m.run_id;
  j["timestamp"] = m.timestamp;
  j["toolkit_version"] = m.toolkit_version;
  j["config"] = m.config;
  j["cell"] = {{"model", m.model}, {"dataset", m.dataset}, {"sigma", num(m.sigma)}, {"seed", m.seed}};
  j["metrics"] = {{"nmse", num(m.metrics.nmse)},
                  {"accuracy_pct", num(m.metrics.accuracy_pct)},
                  {"n", m.metrics.n},
                  {"train_nmse", num(m.train_nmse)},
                  {"train_target_var", num(m.train_target_var)},
                  {"chosen_lambda", num(m.chosen_lambda)},
                  {"feature_dim", m.feature_dim},
                  {"ar_order", m.ar_order},
                  {"free_run_steps", m.free_run_steps},
                  {"free_run_bounded", m.free_run_bounded},
                  {"free_run_max_excursion", num(m.free_run_max_excursion)}};
  nlohmann::json cv = nlohmann::json::array();
  for (double v : m.cv_fold_scores) cv.push_back(num(v));
  j["metrics"]["cv_fold_scores"] = cv;
  nlohmann::json ep = nlohmann::json::array();
  for (double v : m.epoch_loss) ep.push_back(num(v));
  j["epoch_loss"] = ep;
  j["timings"] = {{"train_s", num(m.train_time_s)},
                  {"test_s", num(m.test_time_s)},
                  {"latency_ms", num(m.latency_ms)},
                  {"throughput_pps", num(m.throughput_pps)}};
  j["artifacts"] = m.artifacts;
  j["metadata"] = m.metadata;
  return j;
}

inline RunManifest manifest_from_json(const nlohmann::json& j) {
  using benchdetail::get_num;
  RunManifest m;
  try {
    m.run_id = j.at("run_id").get<std::string>();
    m.timestamp = j.at("timestamp").get<std::string>();
    m.toolkit_version = j.at("toolkit_version").get<std::string>();
    m.config = j.at("config").get<std::map<std::string, std::string>>();
    const auto& c = j.at("cell");
    m.model = c.at("model").get<std::string>();
    m.dataset = c.at("dataset").get<std::string>();
    m.sigma = get_num(c.at("sigma"));
    m.seed = c.at("seed").get<std::uint64_t>();
    const auto& mt = j.at("metrics");
    m.metrics.nmse = get_num(mt.at("nmse"));
    m.metrics.accuracy_pct = get_num(mt.at("accuracy_pct"));
    m.metrics.n = mt.at("n").get<std::size_t>();
    m.train_nmse = get_num(mt.at("train_nmse"));
    m.train_target_var = get_num(mt.at("train_target_var"));
    m.chosen_lambda = get_num(mt.at("chosen_lambda"));
    m.feature_dim = mt.at("feature_dim").get<std::size_t>();
    m.ar_order = mt.at("ar_order").get<std::size_t>();
    m.free_run_steps = mt.at("free_run_steps").get<std::size_t>();
    m.free_run_bounded = mt.at("free_run_bounded").get<bool>();
    m.free_run_max_excursion = get_num(mt.at("free_run_max_excursion"));
    for (const auto& v : mt.at("cv_fold_scores")) m.cv_fold_scores.push_back(get_num(v));
    for (const auto& v : j.at("epoch_loss")) m.epoch_loss.push_back(get_num(v));
    const auto& t = j.at("timings");
    m.train_time_s = get_num(t.at("train_s"));
    m.test_time_s = get_num(t.at("test_s"));
    m.latency_ms = get_num(t.at("latency_ms"));
    m.throughput_pps = get_num(t.at("throughput_pps"));
    m.artifacts = j.at("artifacts").get<std::map<std::string, std::string>>();
    m.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

inline std::string serialize_manifest(const RunManifest& m) { return to_json(m).dump(2) + "\n"; }

inline RunManifest parse_manifest(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError(std::string("manifest is not valid JSON: ") + e.what());
  }
  return manifest_from_json(j);
}

inline RunManifest load_manifest(const fs::path& p) { return parse_manifest(benchdetail::read_text(p)); }

/// Rebuilds the experiment configuration recorded in a manifest.
inline ExperimentConfig manifest_config(const RunManifest& m) {
  ConfigFile cf;
  for (const auto& [k, v] : m.config) set_config_value(cf, k, v);
  validate_config(cf.experiment);
  return cf.experiment;
}

inline RunManifest make_manifest(const ExperimentConfig& cfg, const RunResult& r) {
  RunManifest m;
  m.timestamp = benchdetail::utc_timestamp();
  m.config = config_map(cfg);
  m.model = cfg.model;
  m.dataset = cfg.dataset.name();
  m.sigma = cfg.noise_sigma;
  m.seed = cfg.seed;
  m.metrics = r.metrics;
  m.train_nmse = r.train_nmse;
  m.train_target_var = r.train_target_var;
  m.chosen_lambda = r.chosen_lambda;
  m.feature_dim = r.feature_dim;
  if (r.cv) m.cv_fold_scores = r.cv->fold_scores;
  m.epoch_loss = r.epoch_loss;
  m.ar_order = r.ar ? r.ar->order_p : 0;
  m.free_run_steps = r.free_run_steps;
  m.free_run_bounded = r.free_run_bounded;
  m.free_run_max_excursion = r.free_run_max_excursion;
  m.train_time_s = r.train_time_s;
  m.test_time_s = r.test_time_s;
  m.latency_ms = r.latency_ms;
  m.throughput_pps = r.throughput_pps;
  m.metadata = {{"accuracy_definition", kAccuracyDefinition},
                {"photonic.wavelength_nm", benchdetail::fmt(cfg.hybrid.photonic.wavelength_nm)},
                {"photonic.rise_time_us", benchdetail::fmt(cfg.hybrid.photonic.rise_time_us)},
                {"hybrid.bridge_latency_ms", benchdetail::fmt(cfg.hybrid.bridge_latency_ms)},
                {"timings_note", "wall-clock; excluded from reproducibility"}};
  return m;
}

/// Default output root: $HPQRC_OUT_ROOT, else ./runs.
inline fs::path default_out_root() {
  if (const char* env = std::getenv("HPQRC_OUT_ROOT"); env && *env) return env;
  return "runs";
}

namespace benchdetail {

inline std::string base_run_id(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << sanitize(cfg.model) << "_" << sanitize(cfg.dataset.name()) << "_s" << fmt(cfg.noise_sigma, 6) << "_seed"
     << cfg.seed << "_" << std::hex << std::setw(8) << std::setfill('0')
     << (fnv1a(serialize_config(cfg)) & 0xffffffffULL);
  return os.str();
}

/// Claims a fresh directory for the run; repeated ids get a numeric suffix.
inline std::pair<std::string, fs::path> claim_run_dir(const fs::path& out_dir, const std::string& base) {
  fs::create_directories(out_dir);
  for (int k = 1;; ++k) {
    const std::string id = k == 1 ? base : base + "-" + std::to_string(k);
    const fs::path p = out_dir / id;
    if (fs::create_directory(p)) return {id, p};
  }
}

inline void append_index(const fs::path& out_dir, const RunManifest& m) {
  const fs::path idx = out_dir / "index.csv";
  const bool fresh = !fs::exists(idx);
  std::ofstream f(idx, std::ios::app);
  if (!f) throw IngestionError("cannot write '" + idx.string() + "'");
  if (fresh) f << "run_id,model,dataset,sigma,seed,nmse,accuracy_pct,latency_ms\n";
  f << m.run_id << "," << m.model << "," << m.dataset << "," << fmt(m.sigma) << "," << m.seed << ","
    << fmt(m.metrics.nmse) << "," << fmt(m.metrics.accuracy_pct) << "," << fmt(m.latency_ms) << "\n";
}

}  // namespace benchdetail

/// Writes config.txt, predictions.csv and manifest.json under out_dir/<run_id>
/// and appends the run to out_dir/index.csv.
inline RunManifest persist_run(const ExperimentConfig& cfg, const RunResult& r, const fs::path& out_dir) {
  RunManifest m = make_manifest(cfg, r);
  auto [id, dir] = benchdetail::claim_run_dir(out_dir, benchdetail::base_run_id(cfg));
  m.run_id = id;
  benchdetail::write_text(dir / "config.txt", serialize_config(cfg));
  std::ostringstream pred;
  pred << "index,target,prediction\n";
  for (std::size_t i = 0; i < r.predictions.size(); ++i)
    pred << i << "," << benchdetail::fmt(r.test_targets[i]) << "," << benchdetail::fmt(r.predictions[i]) << "\n";
  benchdetail::write_text(dir / "predictions.csv", pred.str());
  m.artifacts = {{"config", "config.txt"}, {"predictions", "predictions.csv"}, {"manifest", "manifest.json"}};
  benchdetail::write_text(dir / "manifest.json", serialize_manifest(m));
  benchdetail::append_index(out_dir, m);
  return m;
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

/// Writes `n_frames` of the configured dataset (after no transient) with a
/// commented header of the generator parameters and seed.
inline void cmd_generate(const DatasetSpec& ds, std::size_t n_frames, std::uint64_t seed, const fs::path& out_path) {
  if (ds.kind == DatasetKind::csv) throw ParameterError("generate: dataset must be mackey_glass or lorenz");
  if (n_frames < 1) throw ParameterError("generate: steps must be >= 1");
  const TimeSeries s = generate_series(ds, n_frames, seed);
  std::vector<std::string> header{"generated by hpqrc " + std::string(kToolkitVersion), "dataset = " + ds.name(),
                                  "seed = " + std::to_string(seed),
                                  std::string("jitter_init = ") + (ds.jitter_init ? "true" : "false")};
  using benchdetail::fmt;
  if (ds.kind == DatasetKind::mackey_glass) {
    const auto& p = ds.mackey_glass;
    header.push_back("mackey_glass.a = " + fmt(p.a));
    header.push_back("mackey_glass.b = " + fmt(p.b));
    header.push_back("mackey_glass.n = " + fmt(p.n));
    header.push_back("mackey_glass.tau = " + fmt(p.tau));
    header.push_back("mackey_glass.dt = " + fmt(p.dt));
    header.push_back("mackey_glass.history = " + fmt(p.history));
    header.push_back("mackey_glass.sample_every = " + std::to_string(p.sample_every));
  } else {
    const auto& p = ds.lorenz;
    header.push_back("lorenz.sigma = " + fmt(p.sigma));
    header.push_back("lorenz.rho = " + fmt(p.rho));
    header.push_back("lorenz.beta = " + fmt(p.beta));
    header.push_back("lorenz.dt = " + fmt(p.dt));
    header.push_back("lorenz.sample_every = " + std::to_string(p.sample_every));
  }
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  write_csv(s, out_path.string(), header);
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

inline RunManifest cmd_run(const ExperimentConfig& cfg, const fs::path& out_dir) {
  validate_config(cfg);
  const RunResult r = run_experiment(cfg);
  return persist_run(cfg, r, out_dir);
}

inline RunManifest cmd_run(const fs::path& config_path, const fs::path& out_dir) {
  return cmd_run(load_config(config_path.string()).experiment, out_dir);
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepCell {
  std::string model;
  std::string dataset;
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

struct SweepRow {
  SweepCell cell;
  std::optional<RunManifest> manifest;
  std::string error;
};

struct SweepSummary {
  std::vector<SweepRow> rows;  // grid order
  std::size_t n_failed = 0;
};

inline std::vector<SweepCell> expand_grid(const ExperimentGrid& g, std::uint64_t base_seed) {
  g.validate();
  std::vector<SweepCell> cells;
  for (const auto& d : g.datasets)
    for (double s : g.noise_sigmas)
      for (const auto& m : g.models)
        for (auto seed : g.seed_list(base_seed)) cells.push_back({m, d, s, seed});
  return cells;
}

inline ExperimentConfig cell_config(const ExperimentConfig& base, const SweepCell& c) {
  ExperimentConfig cfg = base;
  ConfigFile cf;
  cf.experiment = cfg;
  set_config_value(cf, "model", c.model);
  set_config_value(cf, "dataset", c.dataset);
  cf.experiment.noise_sigma = c.sigma;
  cf.experiment.seed = c.seed;
  return cf.experiment;
}

/// Runs every cell; `workers` threads compute while this thread collects
/// results and writes manifests. Failures are recorded per cell.
inline SweepSummary cmd_sweep(const ExperimentConfig& base, const ExperimentGrid& grid, const fs::path& out_dir,
                              std::size_t workers = 1) {
  validate_config(base);
  const auto cells = expand_grid(grid, base.seed);
  fs::create_directories(out_dir);
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(1, cells.size()));

  struct Done {
    std::size_t index;
    ExperimentConfig cfg;
    std::optional<RunResult> result;
    std::string error;
  };
  std::mutex mu;
  std::condition_variable cv;
  std::deque<Done> done;
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      Done d{i, {}, std::nullopt, {}};
      try {
        d.cfg = cell_config(base, cells[i]);
        d.result = run_experiment(d.cfg);
      } catch (const std::exception& e) {
        d.error = e.what();
      }
      {
        std::lock_guard lk(mu);
        done.push_back(std::move(d));
      }
      cv.notify_one();
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);

  SweepSummary summary;
  summary.rows.resize(cells.size());
  for (std::size_t got = 0; got < cells.size(); ++got) {
    Done d;
    {
      std::unique_lock lk(mu);
      cv.wait(lk, [&] { return !done.empty(); });
      d = std::move(done.front());
      done.pop_front();
    }
    SweepRow& row = summary.rows[d.index];
    row.cell = cells[d.index];
    if (d.result) {
      try {
        row.manifest = persist_run(d.cfg, *d.result, out_dir);
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    } else {
      row.error = d.error;
    }
    if (!row.manifest) ++summary.n_failed;
  }
  for (auto& t : pool) t.join();

  using benchdetail::fmt;
  std::ostringstream longf, fails;
  longf << "model,dataset,sigma,seed,nmse,accuracy,time,run_id\n";
  fails << "model,dataset,sigma,seed,error\n";
  // Pivot: one line per (model, dataset, sigma) in grid order.
  std::vector<std::tuple<std::string, std::string, double>> keys;
  std::map<std::tuple<std::string, std::string, double>, std::vector<const RunManifest*>> groups;
  for (const auto& r : summary.rows) {
    const auto key = std::make_tuple(r.cell.model, r.cell.dataset, r.cell.sigma);
    if (!groups.count(key)) keys.push_back(key);
    auto& g = groups[key];
    if (r.manifest) {
      const auto& m = *r.manifest;
      longf << m.model << "," << m.dataset << "," << fmt(m.sigma) << "," << m.seed << "," << fmt(m.metrics.nmse) << ","
            << fmt(m.metrics.accuracy_pct) << "," << fmt(m.latency_ms) << "," << m.run_id << "\n";
      g.push_back(&m);
    } else {
      std::string err = r.error;
      std::replace(err.begin(), err.end(), ',', ';');
      std::replace(err.begin(), err.end(), '\n', ' ');
      fails << r.cell.model << "," << r.cell.dataset << "," << fmt(r.cell.sigma) << "," << r.cell.seed << "," << err
            << "\n";
    }
  }
  std::ostringstream piv;
  piv << "model,dataset,sigma,n,nmse_mean,nmse_std,accuracy_mean,accuracy_std,time_mean,time_std\n";
  for (const auto& key : keys) {
    const auto& g = groups[key];
    std::vector<double> e, a, t;
    for (const auto* m : g) {
      e.push_back(m->metrics.nmse);
      a.push_back(m->metrics.accuracy_pct);
      t.push_back(m->latency_ms);
    }
    const auto& [model, dataset, sigma] = key;
    piv << model << "," << dataset << "," << fmt(sigma) << "," << g.size();
    for (const auto* v : {&e, &a, &t}) {
      if (v->empty())
        piv << ",nan,nan";
      else
        piv << "," << fmt(mean(*v)) << "," << fmt(stddev(*v));
    }
    piv << "\n";
  }
  benchdetail::write_text(out_dir / "results.csv", longf.str());
  benchdetail::write_text(out_dir / "summary.csv", piv.str());
  benchdetail::write_text(out_dir / "failures.csv", fails.str());
  return summary;
}

// ---------------------------------------------------------------------------
// compare / report
// ---------------------------------------------------------------------------

/// Every manifest.json below the given directories, sorted by run_id.
inline std::vector<RunManifest> collect_manifests(const std::vector<fs::path>& dirs) {
  std::vector<RunManifest> out;
  for (const auto& d : dirs) {
    if (!fs::is_directory(d)) throw IngestionError("'" + d.string() + "' is not a directory");
    for (const auto& e : fs::recursive_directory_iterator(d))
      if (e.is_regular_file() && e.path().filename() == "manifest.json") out.push_back(load_manifest(e.path()));
  }
  if (out.empty()) throw IngestionError("no run manifests found");
  std::sort(out.begin(), out.end(), [](const RunManifest& a, const RunManifest& b) { return a.run_id < b.run_id; });
  return out;
}

class PairingError : public ParameterError {
public:
  using ParameterError::ParameterError;
};

struct ComparisonRow {
  std::string model_a, model_b, dataset, metric;
  double sigma = 0.0;
  std::size_t n = 0;
  double mean_a = 0.0, mean_b = 0.0;
  bool zero_variance = false;
  StatResult t;          // paired t on a - b
  StatResult bootstrap;  // bootstrap CI of mean(a - b)
  double roi_pct = 0.0;
};

struct CompareReport {
  std::vector<ComparisonRow> rows;
  std::string summary_text;
};

/// Paired comparisons of model_a against model_b on matched (dataset, sigma,
/// seed) cells. ROI: accuracy uses (a - b)/b; NMSE and latency use the
/// relative reduction (b - a)/b.
inline CompareReport compare_manifests(const std::vector<RunManifest>& all, const std::string& model_a,
                                       const std::string& model_b) {
  using Key = std::tuple<std::string, double, std::uint64_t>;
  std::map<Key, const RunManifest*> a, b;
  for (const auto& m : all) {
    const Key k{m.dataset, m.sigma, m.seed};
    if (m.model == model_a) a[k] = &m;
    if (m.model == model_b) b[k] = &m;
  }
  if (a.empty() || b.empty())
    throw PairingError("compare: need results for both '" + model_a + "' and '" + model_b + "'");
  std::vector<std::string> missing;
  for (const auto& [k, m] : a)
    if (!b.count(k))
      missing.push_back(model_b + "@" + std::get<0>(k) + "/sigma=" + benchdetail::fmt(std::get<1>(k), 6) +
                        "/seed=" + std::to_string(std::get<2>(k)));
  for (const auto& [k, m] : b)
    if (!a.count(k))
      missing.push_back(model_a + "@" + std::get<0>(k) + "/sigma=" + benchdetail::fmt(std::get<1>(k), 6) +
                        "/seed=" + std::to_string(std::get<2>(k)));
  if (!missing.empty()) {
    std::string msg = "compare: unmatched cells, missing";
    for (const auto& s : missing) msg += " " + s;
    throw PairingError(msg);
  }

  CompareReport rep;
  std::map<std::pair<std::string, double>, std::vector<Key>> cells;
  for (const auto& [k, m] : a) cells[{std::get<0>(k), std::get<1>(k)}].push_back(k);
  for (const auto& [cell, ks] : cells) {
    for (const char* metric : {"accuracy_pct", "nmse", "latency_ms"}) {
      std::vector<double> va, vb, diff;
      for (const auto& k : ks) {
        auto pick = [&](const RunManifest* m) {
          const std::string s = metric;
          return s == "accuracy_pct" ? m->metrics.accuracy_pct : s == "nmse" ? m->metrics.nmse : m->latency_ms;
        };
        va.push_back(pick(a[k]));
        vb.push_back(pick(b[k]));
        diff.push_back(va.back() - vb.back());
      }
      ComparisonRow r;
      r.model_a = model_a;
      r.model_b = model_b;
      r.dataset = cell.first;
      r.sigma = cell.second;
      r.metric = metric;
      r.n = ks.size();
      r.mean_a = mean(va);
      r.mean_b = mean(vb);
      const double nan = std::numeric_limits<double>::quiet_NaN();
      r.t = {nan, nan, static_cast<double>(r.n) - 1.0, nan, nan};
      r.bootstrap = {mean(diff), nan, r.t.df, nan, nan};
      if (r.n >= 2) {
        try {
          r.t = paired_t_test(va, vb);
        } catch (const DegenerateError&) {
          r.zero_variance = true;
        }
        r.bootstrap = bootstrap_ci(diff, 1000, 0.95, 42);
      }
      const std::string s = metric;
      if (r.mean_b != 0.0)
        r.roi_pct = s == "accuracy_pct" ? roi(r.mean_a, r.mean_b) : time_roi(r.mean_b, r.mean_a);
      else
        r.roi_pct = nan;
      rep.rows.push_back(r);
    }
  }

  using benchdetail::fmt;
  std::ostringstream txt;
  txt << "Paired comparison: " << model_a << " vs " << model_b << "\n";
  txt << kAccuracyDefinition << "\n";
  txt << "Tests: paired t (two-sided) and 1000-resample percentile bootstrap of the mean difference (a - b).\n";
  txt << "Multiple comparisons: " << rep.rows.size()
      << " tests in this report; no correction applied. Bonferroni threshold at 0.05: "
      << fmt(0.05 / static_cast<double>(rep.rows.size()), 4) << "\n\n";
  for (const auto& r : rep.rows) {
    txt << r.dataset << " sigma=" << fmt(r.sigma, 6) << " " << r.metric << " n=" << r.n << ": " << fmt(r.mean_a, 6)
        << " vs " << fmt(r.mean_b, 6);
    if (r.zero_variance)
      txt << "  zero-variance differences, t undefined";
    else
      txt << "  t=" << fmt(r.t.statistic, 4) << " p=" << fmt(r.t.p_value, 4);
    txt << "  ROI=" << fmt(r.roi_pct, 4) << "%\n";
  }
  rep.summary_text = txt.str();
  return rep;
}

/// Pairing "a:b"; empty picks hpqrc against each other model, or the first
/// two models alphabetically when hpqrc is absent.
inline std::vector<std::pair<std::string, std::string>> resolve_pairings(const std::vector<RunManifest>& all,
                                                                         const std::string& pairing) {
  if (!pairing.empty()) {
    const auto colon = pairing.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == pairing.size())
      throw PairingError("pairing must look like model_a:model_b, got '" + pairing + "'");
    return {{pairing.substr(0, colon), pairing.substr(colon + 1)}};
  }
  std::set<std::string> models;
  for (const auto& m : all) models.insert(m.model);
  if (models.size() < 2) throw PairingError("compare: need at least two models");
  std::vector<std::pair<std::string, std::string>> out;
  if (models.count("hpqrc")) {
    for (const auto& m : models)
      if (m != "hpqrc") out.emplace_back("hpqrc", m);
  } else {
    out.emplace_back(*models.begin(), *std::next(models.begin()));
  }
  return out;
}

inline CompareReport cmd_compare(const std::vector<fs::path>& dirs, const std::string& pairing, const fs::path& out_dir) {
  const auto all = collect_manifests(dirs);
  CompareReport total;
  for (const auto& [a, b] : resolve_pairings(all, pairing)) {
    auto rep = compare_manifests(all, a, b);
    total.rows.insert(total.rows.end(), rep.rows.begin(), rep.rows.end());
    total.summary_text += rep.summary_text + "\n";
  }
  using benchdetail::fmt;
  std::ostringstream csv;
  csv << "model_a,model_b,dataset,sigma,metric,n,mean_a,mean_b,mean_diff,t,df,p_value,t_ci95_low,t_ci95_high,"
         "boot_ci95_low,boot_ci95_high,roi_pct,note\n";
  for (const auto& r : total.rows)
    csv << r.model_a << "," << r.model_b << "," << r.dataset << "," << fmt(r.sigma) << "," << r.metric << "," << r.n
        << "," << fmt(r.mean_a) << "," << fmt(r.mean_b) << "," << fmt(r.mean_a - r.mean_b) << "," << fmt(r.t.statistic)
        << "," << fmt(r.t.df) << "," << fmt(r.t.p_value) << "," << fmt(r.t.ci_low) << "," << fmt(r.t.ci_high) << ","
        << fmt(r.bootstrap.ci_low) << "," << fmt(r.bootstrap.ci_high) << "," << fmt(r.roi_pct) << ","
        << (r.zero_variance ? "zero-variance" : "") << "\n";
  fs::create_directories(out_dir);
  benchdetail::write_text(out_dir / "compare.csv", csv.str());
  benchdetail::write_text(out_dir / "compare.txt", total.summary_text);
  return total;
}

/// Plot-ready CSVs from every manifest under `manifest_dir`:
///   nmse_bars.csv         noise-free runs, bootstrap 95% CI of the mean NMSE
///   accuracy_vs_sigma.csv mean/std/CI of accuracy per noise level
///   time_vs_accuracy.csv  per-run latency and accuracy
///   accuracy_vs_epoch.csv per-epoch loss of iteratively trained readouts
inline std::vector<fs::path> cmd_report(const fs::path& manifest_dir, const fs::path& out_dir) {
  const auto all = collect_manifests({manifest_dir});
  using benchdetail::fmt;
  fs::create_directories(out_dir);
  auto ci = [](const std::vector<double>& v) {
    if (v.size() < 2) return std::make_pair(v.front(), v.front());
    const auto r = bootstrap_ci(v, 1000, 0.95, 42);
    return std::make_pair(r.ci_low, r.ci_high);
  };

  std::map<std::pair<std::string, std::string>, std::vector<double>> bars;
  std::map<std::tuple<std::string, std::string, double>, std::vector<double>> acc;
  for (const auto& m : all) {
    if (m.sigma == 0.0) bars[{m.model, m.dataset}].push_back(m.metrics.nmse);
    acc[{m.model, m.dataset, m.sigma}].push_back(m.metrics.accuracy_pct);
  }
  std::ostringstream b;
  b << "model,dataset,nmse_mean,ci95_low,ci95_high\n";
  for (const auto& [k, v] : bars) {
    const auto [lo, hi] = ci(v);
    b << k.first << "," << k.second << "," << fmt(mean(v)) << "," << fmt(lo) << "," << fmt(hi) << "\n";
  }
  std::ostringstream s;
  s << "model,dataset,sigma,n,accuracy_mean,accuracy_std,ci95_low,ci95_high\n";
  for (const auto& [k, v] : acc) {
    const auto [lo, hi] = ci(v);
    s << std::get<0>(k) << "," << std::get<1>(k) << "," << fmt(std::get<2>(k)) << "," << v.size() << ","
      << fmt(mean(v)) << "," << fmt(stddev(v)) << "," << fmt(lo) << "," << fmt(hi) << "\n";
  }
  std::ostringstream t;
  t << "run_id,model,dataset,sigma,seed,latency_ms,accuracy_pct\n";
  for (const auto& m : all)
    t << m.run_id << "," << m.model << "," << m.dataset << "," << fmt(m.sigma) << "," << m.seed << ","
      << fmt(m.latency_ms) << "," << fmt(m.metrics.accuracy_pct) << "\n";
  // Accuracy proxy from the training loss: 100 * max(0, 1 - loss / var(y)).
  std::ostringstream e;
  e << "run_id,model,dataset,epoch,loss,accuracy_pct\n";
  for (const auto& m : all)
    for (std::size_t i = 0; i < m.epoch_loss.size(); ++i) {
      const double a = m.train_target_var > 0 ? 100.0 * std::max(0.0, 1.0 - m.epoch_loss[i] / m.train_target_var) : 0.0;
      e << m.run_id << "," << m.model << "," << m.dataset << "," << i + 1 << "," << fmt(m.epoch_loss[i]) << ","
        << fmt(a) << "\n";
    }
  const std::vector<std::pair<std::string, std::string>> files{{"nmse_bars.csv", b.str()},
                                                               {"accuracy_vs_sigma.csv", s.str()},
                                                               {"time_vs_accuracy.csv", t.str()},
                                                               {"accuracy_vs_epoch.csv", e.str()}};
  std::vector<fs::path> written;
  for (const auto& [name, text] : files) {
    benchdetail::write_text(out_dir / name, "# " + std::string(kAccuracyDefinition) + "\n" + text);
    written.push_back(out_dir / name);
  }
  return written;
}

/// Process exit code for an exception escaping a command.
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ParameterError*>(&e) || dynamic_cast<const IngestionError*>(&e) ||
      dynamic_cast<const SizingError*>(&e) || dynamic_cast<const DimensionError*>(&e))
    return 1;
  return 2;
}

}  // namespace hpqrc
