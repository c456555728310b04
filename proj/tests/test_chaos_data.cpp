#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "hpqrc/chaos_data.hpp"

using namespace hpqrc;
using Catch::Approx;

namespace {

// Forward Euler on the delay equation with a constant pre-history, one value
// per fine step. Independent of the library's RK4 and interpolation.
std::vector<double> mackey_glass_euler(double history, double t_end, double h) {
  const double a = 0.2, b = 0.1, n = 10.0, tau = 17.0;
  const auto lag = static_cast<std::size_t>(std::llround(tau / h));
  const auto steps = static_cast<std::size_t>(std::llround(t_end / h));
  std::vector<double> x(steps + 1);
  x[0] = history;
  for (std::size_t k = 0; k < steps; ++k) {
    const double xd = k >= lag ? x[k - lag] : history;
    x[k + 1] = x[k] + h * (a * xd / (1.0 + std::pow(xd, n)) - b * x[k]);
  }
  return x;
}

std::filesystem::path temp_file(const std::string& name, const std::string& body) {
  const auto p = std::filesystem::temp_directory_path() / ("hpqrc_test_" + name);
  std::ofstream(p) << body;
  return p;
}

}  // namespace

TEST_CASE("mackey-glass zero history stays zero") {
  MackeyGlassParams p;
  p.history = 0.0;
  const auto s = gen_mackey_glass(p, 500);
  REQUIRE(s.values.size() == 500);
  for (double v : s.values) REQUIRE(v == 0.0);
}

TEST_CASE("mackey-glass unit history is a fixed point") {
  MackeyGlassParams p;
  p.history = 1.0;
  const auto s = gen_mackey_glass(p, 10000);
  for (double v : s.values) REQUIRE(std::abs(v - 1.0) < 1e-9);
}

TEST_CASE("mackey-glass RK4 tracks a fine-step Euler integration") {
  MackeyGlassParams p;
  p.history = 1.2;
  const auto s = gen_mackey_glass(p, 5000);
  const double h = 0.001;
  const auto ref = mackey_glass_euler(1.2, 100.0, h);
  double worst = 0.0;
  for (std::size_t k = 0; k <= 1000; ++k) worst = std::max(worst, std::abs(s.values[k] - ref[k * 100]));
  REQUIRE(worst < 5e-3);
}

TEST_CASE("mackey-glass subsampling keeps every k-th step") {
  MackeyGlassParams p;
  const auto full = gen_mackey_glass(p, 1000);
  p.sample_every = 10;
  const auto sub = gen_mackey_glass(p, 100);
  for (std::size_t i = 0; i < 100; ++i) REQUIRE(sub.values[i] == full.values[i * 10]);
}

TEST_CASE("mackey-glass parameter validation") {
  MackeyGlassParams p;
  p.dt = 0.3;  // 17 / 0.3 is not an integer
  REQUIRE_THROWS_AS(gen_mackey_glass(p, 10), ParameterError);
  p = {};
  p.tau = -1.0;
  REQUIRE_THROWS_AS(gen_mackey_glass(p, 10), ParameterError);
}

TEST_CASE("lorenz equilibria") {
  LorenzParams p;
  p.init = {0.0, 0.0, 0.0};
  auto s = gen_lorenz(p, 1000);
  for (double v : s.values) REQUIRE(v == 0.0);

  const double c = std::sqrt(72.0);
  p.init = {c, c, 27.0};
  s = gen_lorenz(p, 1000);
  for (std::size_t f = 0; f < s.frames(); ++f) {
    REQUIRE(std::abs(s.at(f, 0) - c) < 1e-12);
    REQUIRE(std::abs(s.at(f, 1) - c) < 1e-12);
    REQUIRE(std::abs(s.at(f, 2) - 27.0) < 1e-12);
  }
}

TEST_CASE("lorenz trajectory stays on the attractor") {
  LorenzParams p;
  const auto s = gen_lorenz(p, 10000);
  REQUIRE(s.dim == 3);
  REQUIRE(s.frames() == 10000);
  double mx = 0.0, mz = 0.0;
  for (std::size_t f = 0; f < s.frames(); ++f) {
    mx = std::max(mx, std::abs(s.at(f, 0)));
    mz = std::max(mz, std::abs(s.at(f, 2)));
  }
  REQUIRE(mx < 25.0);
  REQUIRE(mz < 55.0);
}

TEST_CASE("lorenz divergence reports the step") {
  LorenzParams p;
  p.dt = 10.0;
  try {
    gen_lorenz(p, 1000);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    REQUIRE(e.step() > 0);
  }
}

TEST_CASE("generators are bitwise deterministic") {
  MackeyGlassParams p;
  REQUIRE(gen_mackey_glass(p, 2000).values == gen_mackey_glass(p, 2000).values);
  LorenzParams l;
  REQUIRE(gen_lorenz(l, 2000).values == gen_lorenz(l, 2000).values);
}

TEST_CASE("load_csv by name and index") {
  const auto p = temp_file("ok.csv", "t,v\n0,1.0\n1,2.0\n2,3.0\n");
  const auto s = load_csv(p.string(), std::string("v"));
  REQUIRE(s.values == std::vector<double>{1.0, 2.0, 3.0});
  const auto s2 = load_csv(p.string(), std::size_t{1});
  REQUIRE(s2.values == s.values);
  REQUIRE_THROWS_AS(load_csv(p.string(), std::string("missing")), IngestionError);
}

TEST_CASE("load_csv errors name the problem") {
  const auto empty = temp_file("empty.csv", "t,v\n");
  REQUIRE_THROWS_WITH(load_csv(empty.string(), std::string("v")), Catch::Matchers::ContainsSubstring("no rows"));
  const auto nan = temp_file("nan.csv", "t,v\n0,1.0\n1,NaN\n2,3.0\n");
  REQUIRE_THROWS_WITH(load_csv(nan.string(), std::string("v")), Catch::Matchers::ContainsSubstring("row 2"));
  REQUIRE_THROWS_AS(load_csv("/nonexistent/file.csv", std::string("v")), IngestionError);
}

TEST_CASE("write_csv then load_csv round-trips") {
  MackeyGlassParams p;
  const auto s = gen_mackey_glass(p, 50);
  const auto path = std::filesystem::temp_directory_path() / "hpqrc_test_roundtrip.csv";
  write_csv(s, path.string(), {"a comment"});
  const auto back = load_csv(path.string(), std::string("value"));
  REQUIRE(back.values == s.values);
}

TEST_CASE("normalize examples and inversion") {
  TimeSeries s{{0.0, 1.0, 2.0}};
  auto [n, np] = normalize(s, 0.0, kPi);
  REQUIRE(n.values[0] == 0.0);
  REQUIRE(n.values[1] == Approx(kPi / 2).epsilon(1e-15));
  REQUIRE(n.values[2] == kPi);

  TimeSeries id{{0.0, 0.5, 1.0}};
  REQUIRE(normalize(id, 0.0, 1.0).first.values == id.values);
  TimeSeries two{{-3.0, 7.0}};
  REQUIRE(normalize(two, 0.0, 1.0).first.values == std::vector<double>{0.0, 1.0});

  REQUIRE_THROWS_AS(normalize(TimeSeries{{2.0, 2.0, 2.0}}, 0.0, 1.0), DegenerateError);

  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    TimeSeries r;
    for (int i = 0; i < 50; ++i) r.values.push_back(rng.uniform(-100.0, 100.0));
    auto [u, prm] = normalize(r, -1.0, 2.0);
    const auto back = denormalize(u, prm);
    for (std::size_t i = 0; i < r.values.size(); ++i)
      REQUIRE(std::abs(back.values[i] - r.values[i]) <= 1e-12 * std::max(1.0, std::abs(r.values[i])));
  }
}

TEST_CASE("gaussian noise protocol") {
  TimeSeries unit{{0.0, 0.5, 1.0}};
  REQUIRE(add_gaussian_noise(unit, 0.0, 42).values == unit.values);
  REQUIRE_THROWS_AS(add_gaussian_noise(unit, -0.1, 42), ParameterError);

  TimeSeries sine;
  for (int i = 0; i < 10000; ++i) sine.values.push_back(std::sin(2.0 * kPi * i / 250.0));
  const auto ns = inject_noise(sine, 0.1, 42);
  const double snr = snr_db(ns.clean_unit, ns.noisy_raw);
  REQUIRE(std::abs(snr - 20.0) <= 1.5);

  const auto a = add_gaussian_noise(sine, 0.1, 42);
  const auto b = add_gaussian_noise(sine, 0.1, 42);
  REQUIRE(a.values == b.values);
  for (double v : a.values) REQUIRE((v >= 0.0 && v <= 1.0));
}

TEST_CASE("noise draws have zero mean") {
  TimeSeries flat;
  for (int i = 0; i < 1000000; ++i) flat.values.push_back(i % 2 ? 1.0 : 0.0);
  const auto ns = inject_noise(flat, 0.3, 7);
  double sum = 0.0;
  for (std::size_t i = 0; i < flat.values.size(); ++i) sum += ns.noisy_raw.values[i] - ns.clean_unit.values[i];
  const double m = sum / static_cast<double>(flat.values.size());
  REQUIRE(std::abs(m) < 3.0 * 0.3 / std::sqrt(1e6));
}

TEST_CASE("make_supervised counting") {
  TimeSeries s;
  for (int i = 1; i <= 100; ++i) s.values.push_back(i);
  auto [train, test] = make_supervised(s, 1, 0, 0.8);
  REQUIRE(train.size() == 79);
  REQUIRE(test.size() == 20);
  REQUIRE(train.inputs[0] == 1.0);
  REQUIRE(train.targets[0] == 2.0);

  auto [tr24, te24] = make_supervised(s, 24, 0, 0.8);
  REQUIRE(tr24.targets[0] == 25.0);

  auto [trw, tew] = make_supervised(s, 1, 50, 0.8);
  REQUIRE(trw.inputs[0] == 51.0);
  REQUIRE(trw.start_index == 50);

  TimeSeries shortie{{1, 2, 3, 4, 5}};
  REQUIRE_THROWS_AS(make_supervised(shortie, 1, 0, 0.8), SizingError);
}
