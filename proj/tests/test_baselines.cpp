#include <catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "hpqrc/baselines.hpp"
#include "hpqrc/hybrid_pipeline.hpp"

using namespace hpqrc;

TEST_CASE("esn spectral radius is rescaled exactly") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    EsnConfig c;
    c.n_nodes = seed == 1 ? 500 : 150;
    c.seed = seed;
    Esn esn(c);
    REQUIRE(std::abs(spectral_radius(esn.recurrent()) - 0.95) <= 1e-6);
  }
}

TEST_CASE("spectral radius matches the 2x2 closed form") {
  Rng rng(17);
  for (int t = 0; t < 200; ++t) {
    Eigen::MatrixXd w(2, 2);
    w << rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1);
    const double tr = w.trace(), det = w.determinant();
    const std::complex<double> disc = std::sqrt(std::complex<double>(tr * tr / 4.0 - det));
    const double expect = std::max(std::abs(tr / 2.0 + disc), std::abs(tr / 2.0 - disc));
    REQUIRE(std::abs(spectral_radius(w) - expect) < 1e-12);
  }
  EsnConfig c;
  c.n_nodes = 2;
  c.density = 1.0;
  const auto d = esn_draw(c);
  REQUIRE((d.w.array() != 0.0).all());
}

TEST_CASE("esn states") {
  EsnConfig c;
  c.n_nodes = 100;
  const std::vector<double> zeros(50, 0.0);
  const auto z = esn_run(zeros, c);
  REQUIRE(z.isZero(0.0));

  std::vector<double> u;
  Rng rng(3);
  for (int i = 0; i < 300; ++i) u.push_back(rng.uniform(-5.0, 5.0));
  const auto s = esn_run(u, c, 100);
  REQUIRE(s.rows() == 200);
  REQUIRE(s.cols() == 100);
  REQUIRE(s.cwiseAbs().maxCoeff() < 1.0);

  REQUIRE(esn_run(u, c) == esn_run(u, c));
}

TEST_CASE("echo-state contraction") {
  EsnConfig c;
  Esn a(c), b(c);
  Rng rng(5);
  Eigen::VectorXd x0(500);
  for (Eigen::Index i = 0; i < 500; ++i) x0(i) = rng.uniform(-1.0, 1.0);
  b.set_state(x0);
  for (int t = 0; t < 500; ++t) {
    const double u = 0.5 + 0.4 * std::sin(0.3 * t);
    a.step(u);
    b.step(u);
  }
  REQUIRE((a.state() - b.state()).norm() < 1e-6);
}

TEST_CASE("esn validation") {
  EsnConfig c;
  c.leak_rate = 0.0;
  REQUIRE_THROWS_AS(Esn(c), ParameterError);
  c = {};
  c.density = 0.0;
  REQUIRE_THROWS_AS(Esn(c), ParameterError);
}

TEST_CASE("quantum-only baseline is the hybrid's quantum block") {
  const auto preset = quantum_only_preset();
  REQUIRE(preset.n_qubits == 8);
  REQUIRE(preset.feature_dim() == 15);

  std::vector<double> u;
  for (int t = 0; t < 25; ++t) u.push_back(0.5 + 0.4 * std::sin(0.2 * t));
  const auto q = quantum_only_run(u, preset);
  REQUIRE(q.cols() == 15);
  HybridConfig h;
  h.quantum = preset;
  const auto run = run_pipeline(u, h);
  REQUIRE(run.features.leftCols(15) == q);
}

TEST_CASE("AR(1) coefficient recovery") {
  Rng rng(1);
  std::vector<double> y{1.0};
  for (int t = 1; t < 60; ++t) y.push_back(0.7 * y.back() + 1e-10 * rng.normal());
  // p_max = 1: with vanishing noise any higher order only fits rounding error.
  const auto m = fit_ar_aic(y, 1);
  REQUIRE(m.order_p == 1);
  REQUIRE(std::abs(m.coeffs[0] - 0.7) < 1e-6);

  // Closed-form simple regression of y[t] on y[t-1], t = 1..N-1.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(y.size() - 1);
  for (std::size_t t = 1; t < y.size(); ++t) {
    sx += y[t - 1];
    sy += y[t];
    sxx += y[t - 1] * y[t - 1];
    sxy += y[t - 1] * y[t];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  REQUIRE(std::abs(m.coeffs[0] - slope) < 1e-6);
  REQUIRE(m.predict_next(y) == Catch::Approx(m.intercept + m.coeffs[0] * y.back()));
}

TEST_CASE("AIC values follow T ln(RSS/T) + 2(p+1)") {
  Rng rng(2);
  std::vector<double> y;
  for (int t = 0; t < 120; ++t) y.push_back(rng.normal());
  const std::size_t p_max = 3;
  const auto m = fit_ar_aic(y, p_max);
  REQUIRE(m.aic_by_order.size() == p_max + 1);
  const double T = static_cast<double>(y.size() - p_max);
  double mean = 0.0;
  for (std::size_t t = p_max; t < y.size(); ++t) mean += y[t] / T;
  double rss0 = 0.0;
  for (std::size_t t = p_max; t < y.size(); ++t) rss0 += (y[t] - mean) * (y[t] - mean);
  REQUIRE(std::abs(m.aic_by_order[0] - (T * std::log(rss0 / T) + 2.0)) < 1e-9);
  REQUIRE(m.aic == *std::min_element(m.aic_by_order.begin(), m.aic_by_order.end()));
}

TEST_CASE("AR errors and differencing") {
  REQUIRE_THROWS_AS(fit_ar_aic(std::vector<double>(50, 3.0), 2), DegenerateError);
  REQUIRE_THROWS_AS(fit_ar_aic(std::vector<double>(12, 1.0), 5), SizingError);

  Rng rng(4);
  std::vector<double> walk{0.0};
  for (int t = 0; t < 300; ++t) walk.push_back(walk.back() + 1.0 + 0.1 * rng.normal());
  const auto m = fit_ar_aic(walk, 3, true);
  REQUIRE(m.differenced);
  REQUIRE(std::abs(m.predict_next(walk) - (walk.back() + 1.0)) < 0.1);
}

TEST_CASE("white noise selection rate matches the likelihood-ratio law") {
  // With p_max = 1, AIC keeps p = 0 when T ln(RSS0/RSS1) < 2. Under white
  // noise that statistic is asymptotically chi-square(1), so the rate is
  // P(chi2_1 < 2) = erf(1).
  const double expect = std::erf(1.0);
  int zeros = 0;
  const int trials = 400;
  for (int s = 0; s < trials; ++s) {
    Rng rng(1000 + static_cast<std::uint64_t>(s));
    std::vector<double> y;
    for (int t = 0; t < 400; ++t) y.push_back(rng.normal());
    zeros += fit_ar_aic(y, 1).order_p == 0;
  }
  const double rate = static_cast<double>(zeros) / trials;
  const double se = std::sqrt(expect * (1.0 - expect) / trials);
  REQUIRE(std::abs(rate - expect) < 4.0 * se);
}
