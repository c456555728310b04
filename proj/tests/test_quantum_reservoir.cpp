#include <catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "hpqrc/quantum_reservoir.hpp"

using namespace hpqrc;

namespace {

using Mat = Eigen::MatrixXcd;
const std::complex<double> I(0.0, 1.0);

QuantumConfig bare(std::size_t n) {
  QuantumConfig c;
  c.n_qubits = n;
  c.n_layers = 1;
  c.coupling_j = 0.0;
  c.field_h = 0.0;
  c.layer_dt_us = 0.0;
  c.meas_strength = 0.0;
  c.input_masks = false;
  return c;
}

// Kronecker product with qubit 0 as the least significant bit: ops[0] acts
// on qubit 0.
Mat kron_ops(const std::vector<Mat>& ops) {
  Mat out = Mat::Identity(1, 1);
  for (const auto& op : ops) {
    Mat next(out.rows() * op.rows(), out.cols() * op.cols());
    for (Eigen::Index i = 0; i < op.rows(); ++i)
      for (Eigen::Index j = 0; j < op.cols(); ++j)
        next.block(i * out.rows(), j * out.cols(), out.rows(), out.cols()) = op(i, j) * out;
    out = next;
  }
  return out;
}

Mat pauli_x() {
  Mat m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}
Mat pauli_z() {
  Mat m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

DensityMatrix random_state(std::size_t n, Rng& rng) {
  const auto d = static_cast<Eigen::Index>(1) << n;
  const auto rank = static_cast<Eigen::Index>(1 + rng.below(static_cast<std::uint64_t>(d)));
  Mat a(d, rank);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < rank; ++j) a(i, j) = {rng.normal(), rng.normal()};
  Mat rho = a * a.adjoint();
  rho /= rho.trace();
  return DensityMatrix(n, rho);
}

void require_valid(const DensityMatrix& r) {
  REQUIRE(std::abs(r.trace() - 1.0) < 1e-10);
  REQUIRE(r.hermiticity_error() < 1e-12);
  REQUIRE(r.min_eigenvalue() > -1e-9);
}

}  // namespace

TEST_CASE("encode_input examples") {
  auto cfg = bare(1);
  Rng rng(1);
  const auto r = random_state(1, rng);
  REQUIRE((encode_input(r, 0.0, cfg).matrix() - r.matrix()).cwiseAbs().maxCoeff() == 0.0);

  auto flipped = encode_input(DensityMatrix::ground(1), kPi, cfg);
  REQUIRE(flipped.expect_z(0) == Catch::Approx(-1.0).margin(1e-12));
  auto half = encode_input(DensityMatrix::ground(1), kPi / 2, cfg);
  REQUIRE(std::abs(half.expect_z(0)) < 1e-12);
  REQUIRE(std::abs(half.trace() - 1.0) < 1e-12);
}

TEST_CASE("input masks scale the angle per qubit") {
  auto cfg = bare(3);
  cfg.input_masks = true;
  const auto scales = detail::input_scales(cfg);
  REQUIRE(scales.size() == 3);
  for (double s : scales) REQUIRE((s >= 0.5 && s <= 1.0));
  const auto r = encode_input(DensityMatrix::ground(3), 1.0, cfg);
  for (std::size_t q = 0; q < 3; ++q) REQUIRE(r.expect_z(q) == Catch::Approx(std::cos(scales[q])).margin(1e-12));
}

TEST_CASE("apply_layer matches direct exponentiation") {
  SECTION("identity layer") {
    auto cfg = bare(3);
    Rng rng(2);
    const auto r = random_state(3, rng);
    REQUIRE((apply_layer(r, cfg).matrix() - r.matrix()).cwiseAbs().maxCoeff() < 1e-15);
  }
  SECTION("J = pi flips <X1> of |++>") {
    auto cfg = bare(2);
    cfg.coupling_j = kPi;
    Eigen::VectorXcd plus = Eigen::VectorXcd::Constant(4, 0.5);
    const auto out = apply_layer(DensityMatrix::pure(2, plus), cfg);
    const Mat x1 = kron_ops({pauli_x(), Mat::Identity(2, 2)});
    REQUIRE(std::abs((out.matrix() * x1).trace().real() - (-1.0)) < 1e-12);
  }
  SECTION("4x4 oracle at random angles") {
    Rng rng(5);
    for (int t = 0; t < 20; ++t) {
      auto cfg = bare(2);
      cfg.coupling_j = rng.uniform(-3, 3);
      cfg.field_h = rng.uniform(-3, 3);
      const auto r = random_state(2, rng);
      const Mat zz = kron_ops({pauli_z(), pauli_z()});
      const Mat xsum = kron_ops({pauli_x(), Mat::Identity(2, 2)}) + kron_ops({Mat::Identity(2, 2), pauli_x()});
      const Mat u = (-I * cfg.field_h / 2.0 * xsum).exp() * (-I * cfg.coupling_j / 2.0 * zz).exp();
      REQUIRE((u.adjoint() * u - Mat::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-12);
      const Mat expect = u * r.matrix() * u.adjoint();
      const auto got = apply_layer(r, cfg);
      REQUIRE((got.matrix() - expect).cwiseAbs().maxCoeff() < 1e-12);
      const auto e0 = r.eigenvalues(), e1 = got.eigenvalues();
      REQUIRE((e0 - e1).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("decoherence channel") {
  auto cfg = bare(1);
  Eigen::VectorXcd one(2);
  one << 0, 1;
  const auto excited = DensityMatrix::pure(1, one);

  REQUIRE((apply_decoherence(excited, 0.0, cfg).matrix() - excited.matrix()).cwiseAbs().maxCoeff() == 0.0);
  const auto relaxed = apply_decoherence(excited, 1e6, cfg);
  REQUIRE(relaxed.expect_z(0) == 1.0);

  const auto decayed = apply_decoherence(excited, 10.0, cfg);
  REQUIRE(std::abs(decayed.matrix()(1, 1).real() - std::exp(-0.2)) < 1e-12);

  cfg.t2_us = 120.0;
  REQUIRE_THROWS_AS(apply_decoherence(excited, 1.0, cfg), ParameterError);
}

TEST_CASE("coherence decays at exactly 1/T2") {
  auto cfg = bare(1);
  Eigen::VectorXcd plus(2);
  plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  const auto out = apply_decoherence(DensityMatrix::pure(1, plus), 7.0, cfg);
  REQUIRE(std::abs(std::abs(out.matrix()(0, 1)) - 0.5 * std::exp(-7.0 / cfg.t2_us)) < 1e-12);
}

TEST_CASE("kraus completeness and closed form agree") {
  Rng rng(9);
  QuantumConfig cfg;
  for (int t = 0; t < 100; ++t) {
    const double dt = rng.uniform(0.0, 200.0);
    const auto [p1, pphi] = decoherence_probabilities(dt, cfg);
    for (const auto& ops : {amplitude_damping_kraus(p1), dephasing_kraus(pphi)}) {
      Mat2 s = Mat2::Zero();
      for (const auto& k : ops) s += k.adjoint() * k;
      REQUIRE((s - Mat2::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  auto c3 = bare(3);
  c3.layer_dt_us = 4.0;
  const auto [p1, pphi] = decoherence_probabilities(4.0, c3);
  const auto r = random_state(3, rng);
  Eigen::MatrixXcd via_kraus = r.matrix();
  for (std::size_t q = 0; q < 3; ++q) {
    const auto ad = amplitude_damping_kraus(p1);
    const auto dp = dephasing_kraus(pphi);
    apply_kraus(via_kraus, q, ad);
    apply_kraus(via_kraus, q, dp);
  }
  const auto closed = apply_decoherence(r, 4.0, c3);
  REQUIRE((closed.matrix() - via_kraus).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("weak measurement") {
  auto cfg = bare(1);
  cfg.meas_strength = 0.7;
  auto [f0, r0] = weak_measure(DensityMatrix::ground(1), cfg);
  REQUIRE(f0.z[0] == 1.0);
  REQUIRE((r0.matrix() - DensityMatrix::ground(1).matrix()).cwiseAbs().maxCoeff() == 0.0);

  Eigen::VectorXcd plus(2);
  plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  const auto p = DensityMatrix::pure(1, plus);
  cfg.meas_strength = 0.0;
  auto [fa, ra] = weak_measure(p, cfg);
  REQUIRE((ra.matrix() - p.matrix()).cwiseAbs().maxCoeff() == 0.0);
  cfg.meas_strength = 1.0;
  auto [fb, rb] = weak_measure(p, cfg);
  REQUIRE(std::abs(fb.z[0]) < 1e-12);
  REQUIRE(std::abs(rb.matrix()(0, 1)) < 1e-12);
  REQUIRE(fa.z == fb.z);  // features are read before back-action
}

TEST_CASE("weak measurement features equal trace expectations") {
  Rng rng(4);
  auto cfg = bare(4);
  const auto r = random_state(4, rng);
  auto [f, out] = weak_measure(r, cfg);
  const Mat id = Mat::Identity(2, 2);
  for (std::size_t q = 0; q < 4; ++q) {
    std::vector<Mat> ops(4, id);
    ops[q] = pauli_z();
    REQUIRE(std::abs(f.z[q] - (r.matrix() * kron_ops(ops)).trace().real()) < 1e-12);
  }
  for (std::size_t q = 0; q < 3; ++q) {
    std::vector<Mat> ops(4, id);
    ops[q] = pauli_z();
    ops[q + 1] = pauli_z();
    REQUIRE(std::abs(f.zz[q] - (r.matrix() * kron_ops(ops)).trace().real()) < 1e-12);
  }
}

TEST_CASE("q_step contracts") {
  SECTION("identity pipeline") {
    auto cfg = bare(2);
    Rng rng(6);
    const auto r = random_state(2, rng);
    auto [out, f] = q_step(r, 0.0, cfg);
    REQUIRE((out.matrix() - r.matrix()).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(f.z[0] == Catch::Approx(r.expect_z(0)).margin(1e-15));
  }
  SECTION("default shape and range") {
    QuantumConfig cfg;
    auto rho = DensityMatrix::ground(5);
    for (double x : {0.0, 0.7, 2.0, kPi}) {
      auto [next, f] = q_step(rho, x, cfg);
      REQUIRE(f.size() == 9);
      for (double v : f.flat()) REQUIRE((v >= -1.0 && v <= 1.0));
      rho = next;
    }
  }
  SECTION("single-qubit hand oracle") {
    auto cfg = bare(1);
    cfg.coupling_j = 0.8;
    auto [out, f] = q_step(DensityMatrix::ground(1), kPi / 2, cfg);
    REQUIRE(std::abs(f.z[0]) < 1e-12);
  }
  SECTION("class and free function agree") {
    QuantumConfig cfg;
    cfg.n_qubits = 3;
    QuantumReservoir qr(cfg);
    auto rho = DensityMatrix::ground(3);
    for (double x : {0.3, 1.1, 2.9}) {
      const auto fa = qr.step(x);
      auto [next, fb] = q_step(rho, x, cfg);
      rho = next;
      for (std::size_t i = 0; i < fa.size(); ++i) REQUIRE(std::abs(fa.flat()[i] - fb.flat()[i]) < 1e-13);
    }
  }
}

TEST_CASE("random operation sequences keep states valid") {
  Rng rng(11);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng.below(4);
    QuantumConfig cfg;
    cfg.n_qubits = n;
    cfg.coupling_j = rng.uniform(-3, 3);
    cfg.field_h = rng.uniform(-3, 3);
    cfg.meas_strength = rng.uniform();
    auto r = random_state(n, rng);
    for (int k = 0; k < 5; ++k) {
      switch (rng.below(4)) {
        case 0: r = encode_input(r, rng.uniform(0, kPi), cfg); break;
        case 1: r = apply_layer(r, cfg); break;
        case 2: r = apply_decoherence(r, rng.uniform(0, 20), cfg); break;
        default: r = weak_measure(r, cfg).second; break;
      }
    }
    require_valid(r);
  }
}

TEST_CASE("fading memory of the initial state") {
  QuantumConfig cfg;
  cfg.meas_strength = 0.5;
  Rng rng(12);
  std::vector<double> xs(200);
  for (double& x : xs) x = rng.uniform(0, kPi);
  auto a = DensityMatrix::ground(5);
  auto b = random_state(5, rng);
  QuantumFeatures fa, fb;
  for (double x : xs) {
    std::tie(a, fa) = q_step(a, x, cfg);
    std::tie(b, fb) = q_step(b, x, cfg);
  }
  double dist = 0.0;
  for (std::size_t i = 0; i < fa.size(); ++i) dist += std::pow(fa.flat()[i] - fb.flat()[i], 2);
  REQUIRE(std::sqrt(dist) < 1e-3);
}

TEST_CASE("config validation") {
  QuantumConfig c;
  c.n_qubits = 11;
  REQUIRE_THROWS_AS(c.validate(), ParameterError);
  c = {};
  c.meas_strength = 1.5;
  REQUIRE_THROWS_AS(c.validate(), ParameterError);
  c = {};
  c.n_layers = 0;
  REQUIRE_THROWS_AS(c.validate(), ParameterError);
}
