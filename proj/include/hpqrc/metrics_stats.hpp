#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "hpqrc/common.hpp"

namespace hpqrc {

struct MetricReport {
  double nmse = 0.0;
  double accuracy_pct = 0.0;
  std::size_t n = 0;

  bool operator==(const MetricReport&) const = default;
};

struct StatResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double df = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw SizingError("mean of empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

/// Sample standard deviation (n - 1 denominator).
inline double stddev(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

/// Sum (y - yhat)^2 / Sum (y - mean(y))^2.
inline double nmse(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size() || y.empty())
    throw DimensionError("nmse: targets and predictions must have equal non-zero length");
  const double m = mean(y);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    num += (y[i] - yhat[i]) * (y[i] - yhat[i]);
    den += (y[i] - m) * (y[i] - m);
  }
  if (den == 0.0) throw DegenerateError("nmse: targets have zero variance");
  return num / den;
}

/// 100 * max(0, 1 - NMSE).
inline double accuracy_pct(std::span<const double> y, std::span<const double> yhat) {
  return 100.0 * std::max(0.0, 1.0 - nmse(y, yhat));
}

inline MetricReport metric_report(std::span<const double> y, std::span<const double> yhat) {
  const double e = nmse(y, yhat);
  return {e, 100.0 * std::max(0.0, 1.0 - e), y.size()};
}

/// (gain - baseline) / baseline * 100.
inline double roi(double gain, double baseline) {
  if (baseline == 0.0) throw DegenerateError("roi: baseline is zero");
  return (gain - baseline) / baseline * 100.0;
}

/// Relative reduction of a cost: (baseline - improved) / baseline * 100.
inline double time_roi(double baseline_time, double improved_time) {
  if (baseline_time == 0.0) throw DegenerateError("time_roi: baseline is zero");
  return (baseline_time - improved_time) / baseline_time * 100.0;
}

/// Mann-Whitney AUC with midranks for ties. labels: nonzero = positive.
inline double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size() || scores.empty())
    throw DimensionError("auc: scores and labels must have equal non-zero length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[idx[j + 1]] == scores[idx[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = mid;
    i = j + 1;
  }
  double pos = 0.0, rank_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (labels[i] != 0) {
      pos += 1.0;
      rank_sum += rank[i];
    }
  const double neg = static_cast<double>(n) - pos;
  if (pos == 0.0 || neg == 0.0) throw DegenerateError("auc: both classes must be present");
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

/// Two-sided p-value of Student's t with df degrees of freedom,
/// I_{df/(df+t^2)}(df/2, 1/2).
inline double t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) throw ParameterError("t distribution needs df > 0");
  if (std::isinf(t)) return 0.0;
  const double x = df / (df + t * t);
  return std::clamp(boost::math::ibeta(df / 2.0, 0.5, x), 0.0, 1.0);
}

inline StatResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("paired_t_test: unequal sample sizes");
  if (a.size() < 2) throw SizingError("paired_t_test: need at least 2 pairs");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const double n = static_cast<double>(d.size());
  const double md = mean(d);
  const double sd = stddev(d);
  if (sd == 0.0) throw DegenerateError("paired_t_test: differences have zero variance");
  const double se = sd / std::sqrt(n);
  StatResult r;
  r.statistic = md / se;
  r.df = n - 1.0;
  r.p_value = t_two_sided_p(r.statistic, r.df);
  // 95% interval of the mean difference; invert the two-sided p by bisection.
  double lo = 0.0, hi = 1e3;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (t_two_sided_p(mid, r.df) > 0.05 ? lo : hi) = mid;
  }
  r.ci_low = md - hi * se;
  r.ci_high = md + hi * se;
  return r;
}

/// Sample standard deviation over mean.
inline double coeff_variation(std::span<const double> xs) {
  const double m = mean(xs);
  if (m == 0.0) throw DegenerateError("coeff_variation: mean is zero");
  return stddev(xs) / m;
}

/// Percentile bootstrap interval of the mean. p_value is the two-sided
/// bootstrap tail mass at zero.
inline StatResult bootstrap_ci(std::span<const double> xs, std::size_t n_resamples = 1000,
                               double level = 0.95, std::uint64_t seed = 42) {
  if (xs.size() < 2) throw SizingError("bootstrap_ci: need at least 2 values");
  if (n_resamples == 0) throw ParameterError("bootstrap_ci: n_resamples must be >= 1");
  if (!(level > 0.0 && level < 1.0)) throw ParameterError("bootstrap_ci: level must lie in (0,1)");
  Rng rng(seed);
  const std::size_t n = xs.size();
  std::vector<double> means(n_resamples);
  for (double& m : means) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += xs[rng.below(n)];
    m = s / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  // Linear interpolation between order statistics.
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(n_resamples - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const std::size_t j = std::min(i + 1, n_resamples - 1);
    return means[i] + (pos - static_cast<double>(i)) * (means[j] - means[i]);
  };
  StatResult r;
  r.statistic = mean(xs);
  r.df = static_cast<double>(n - 1);
  r.ci_low = quantile((1.0 - level) / 2.0);
  r.ci_high = quantile(1.0 - (1.0 - level) / 2.0);
  if (r.ci_low > r.ci_high) std::swap(r.ci_low, r.ci_high);
  const auto le = static_cast<double>(std::count_if(means.begin(), means.end(), [](double m) { return m <= 0.0; }));
  const auto ge = static_cast<double>(std::count_if(means.begin(), means.end(), [](double m) { return m >= 0.0; }));
  r.p_value = std::min(1.0, 2.0 * std::min(le, ge) / static_cast<double>(n_resamples));
  return r;
}

struct ThroughputReport {
  double points_per_sec = 0.0;
  double mean_latency_s = 0.0;  // per point
  double batch_mean_s = 0.0;  // per point, averaged over batches
  double batch_std_s = 0.0;
  double batch_cv = 0.0;
  std::size_t n_points = 0;
  std::size_t n_batches = 0;
};

/// Times `runner(i)` for i in [0, n_points) in batches after a warm-up of
/// `warmup` calls. Timings are wall-clock and not reproducible.
inline ThroughputReport measure_throughput(const std::function<void(std::size_t)>& runner,
                                           std::size_t n_points, std::size_t batch = 0,
                                           std::size_t warmup = 0) {
  if (n_points < 100) throw SizingError("measure_throughput: need at least 100 points");
  if (batch == 0) batch = std::max<std::size_t>(1, n_points / 20);
  if (warmup == 0) warmup = std::min<std::size_t>(n_points / 10, 1000);
  for (std::size_t i = 0; i < warmup; ++i) runner(i);

  using clock = std::chrono::steady_clock;
  std::vector<double> batch_s;
  const auto start = clock::now();
  for (std::size_t i = 0; i < n_points;) {
    const std::size_t begin = i;
    const std::size_t stop = std::min(n_points, i + batch);
    const auto t0 = clock::now();
    for (; i < stop; ++i) runner(i);
    // Per-point time within the batch, so a short final batch is comparable.
    batch_s.push_back(std::chrono::duration<double>(clock::now() - t0).count() /
                      static_cast<double>(stop - begin));
  }
  const double total = std::chrono::duration<double>(clock::now() - start).count();

  ThroughputReport r;
  r.n_points = n_points;
  r.n_batches = batch_s.size();
  r.points_per_sec = total > 0.0 ? static_cast<double>(n_points) / total
                                 : std::numeric_limits<double>::infinity();
  r.mean_latency_s = total / static_cast<double>(n_points);
  r.batch_mean_s = mean(batch_s);
  r.batch_std_s = stddev(batch_s);
  r.batch_cv = r.batch_mean_s > 0.0 ? r.batch_std_s / r.batch_mean_s : 0.0;
  return r;
}

}  // namespace hpqrc
