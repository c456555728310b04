#pragma once

// Linear readout: closed-form ridge regression, an Adam-trained variant of
// the same objective, and chronological k-fold cross-validation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hpqrc/common.hpp"

namespace hpqrc {

/// Rows are per-timestep features; the last column is the constant-1 bias.
using FeatureMatrix = Eigen::MatrixXd;

/// Appends the bias column to raw features.
inline FeatureMatrix with_bias(const Eigen::MatrixXd& raw) {
  FeatureMatrix x(raw.rows(), raw.cols() + 1);
  x.leftCols(raw.cols()) = raw;
  x.col(raw.cols()).setOnes();
  return x;
}

struct ReadoutModel {
  Eigen::VectorXd weights;  // D + 1, bias last
  double lambda = 0.01;
  std::string created_by;

  std::size_t feature_dim() const {
    return weights.size() == 0 ? 0 : static_cast<std::size_t>(weights.size() - 1);
  }
};

namespace detail {

inline void require_rows(const FeatureMatrix& x, std::span<const double> y) {
  if (x.rows() != static_cast<Eigen::Index>(y.size()))
    throw DimensionError("feature rows (" + std::to_string(x.rows()) + ") != targets (" +
                         std::to_string(y.size()) + ")");
  if (x.rows() < 1 || x.cols() < 2) throw DimensionError("feature matrix is empty");
  if (!x.allFinite()) throw ParameterError("feature matrix has non-finite entries");
}

inline Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> y) {
  return {y.data(), static_cast<Eigen::Index>(y.size())};
}

}  // namespace detail

/// Normal-equations matrix X^T X + lambda I, with no penalty on the bias.
inline Eigen::MatrixXd ridge_gram(const FeatureMatrix& x, double lambda) {
  Eigen::MatrixXd a = Eigen::MatrixXd(x.cols(), x.cols()).setZero();
  a.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
  a = a.selfadjointView<Eigen::Lower>();
  for (Eigen::Index i = 0; i + 1 < a.rows(); ++i) a(i, i) += lambda;
  return a;
}

/// Solves (X^T X + lambda I') w = X^T y by Cholesky.
inline ReadoutModel fit_ridge(const FeatureMatrix& x, std::span<const double> y, double lambda) {
  detail::require_rows(x, y);
  if (!(lambda >= 0.0)) throw ParameterError("ridge lambda must be >= 0");
  const Eigen::MatrixXd a = ridge_gram(x, lambda);
  const Eigen::VectorXd b = x.transpose() * detail::as_vector(y);
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-15)
    throw SolverError("ridge normal equations are singular; use lambda > 0");
  ReadoutModel m;
  m.weights = llt.solve(b);
  m.lambda = lambda;
  m.created_by = "ridge";
  if (!m.weights.allFinite()) throw SolverError("ridge solution is not finite");
  return m;
}

inline std::vector<double> predict(const ReadoutModel& m, const FeatureMatrix& x) {
  if (x.cols() != m.weights.size())
    throw DimensionError("feature width " + std::to_string(x.cols()) + " != model width " +
                         std::to_string(m.weights.size()));
  const Eigen::VectorXd p = x * m.weights;
  return {p.data(), p.data() + p.size()};
}

inline double predict_row(const ReadoutModel& m, std::span<const double> row_with_bias) {
  if (static_cast<Eigen::Index>(row_with_bias.size()) != m.weights.size())
    throw DimensionError("feature width does not match model");
  return detail::as_vector(row_with_bias).dot(m.weights);
}

/// Ridge objective (||Xw - y||^2 + lambda ||w_nobias||^2) / T.
inline double ridge_loss(const FeatureMatrix& x, std::span<const double> y,
                         const Eigen::VectorXd& w, double lambda) {
  const Eigen::VectorXd r = x * w - detail::as_vector(y);
  const double pen = w.head(w.size() - 1).squaredNorm();
  return (r.squaredNorm() + lambda * pen) / static_cast<double>(x.rows());
}

struct AdamOptions {
  double lr = 0.001;
  std::size_t epochs = 100;
  std::size_t batch_size = 1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 42;
};

struct IterativeFit {
  ReadoutModel model;
  std::vector<double> epoch_loss;  // full-data ridge loss after each epoch
};

/// Mini-batch Adam on the ridge objective from zero weights. Batches come
/// from a seeded shuffle each epoch.
inline IterativeFit fit_iterative(const FeatureMatrix& x, std::span<const double> y, double lambda,
                                  const AdamOptions& opt = {}) {
  detail::require_rows(x, y);
  if (!(lambda >= 0.0)) throw ParameterError("lambda must be >= 0");
  if (opt.batch_size == 0 || opt.epochs == 0) throw ParameterError("epochs and batch_size must be >= 1");
  const Eigen::Index t = x.rows(), d = x.cols();
  const auto yv = detail::as_vector(y);

  Eigen::VectorXd w = Eigen::VectorXd::Zero(d), m = w, v = w, g(d);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(t));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng(opt.seed);
  double b1t = 1.0, b2t = 1.0;

  IterativeFit out;
  out.epoch_loss.reserve(opt.epochs);
  const double inv_t = 1.0 / static_cast<double>(t);
  for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
      const std::size_t stop = std::min(order.size(), start + opt.batch_size);
      const double scale = 1.0 / static_cast<double>(stop - start);
      g.setZero();
      for (std::size_t k = start; k < stop; ++k) {
        const Eigen::Index r = order[k];
        const double resid = x.row(r).dot(w) - yv(r);
        g.noalias() += (2.0 * resid * scale) * x.row(r).transpose();
      }
      // The penalty is spread evenly so one epoch applies it once overall.
      g.head(d - 1) += (2.0 * lambda * inv_t) * w.head(d - 1);

      b1t *= opt.beta1;
      b2t *= opt.beta2;
      m = opt.beta1 * m + (1.0 - opt.beta1) * g;
      v = opt.beta2 * v + (1.0 - opt.beta2) * g.cwiseAbs2();
      const double lr_t = opt.lr * std::sqrt(1.0 - b2t) / (1.0 - b1t);
      w.array() -= lr_t * m.array() / (v.array().sqrt() + opt.eps);
    }
    const double loss = ridge_loss(x, y, w, lambda);
    if (!std::isfinite(loss)) throw DivergenceError("iterative readout diverged", epoch + 1);
    out.epoch_loss.push_back(loss);
  }
  out.model.weights = std::move(w);
  out.model.lambda = lambda;
  out.model.created_by = "adam";
  return out;
}

// ---------------------------------------------------------------------------
// Cross-validation
// ---------------------------------------------------------------------------

struct FoldRange {
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Contiguous folds; the first T mod k folds take one extra row.
inline std::vector<FoldRange> fold_ranges(std::size_t rows, std::size_t k) {
  if (k < 2) throw ParameterError("cross-validation needs k >= 2");
  if (rows < 2 * k) throw SizingError("cross-validation needs at least 2k rows");
  std::vector<FoldRange> f;
  std::size_t start = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t len = rows / k + (i < rows % k ? 1 : 0);
    f.push_back({start, start + len});
    start += len;
  }
  return f;
}

/// Ridge fit on every row outside [fold.begin, fold.end).
inline ReadoutModel fit_out_of_fold(const FeatureMatrix& x, std::span<const double> y,
                                    FoldRange fold, double lambda) {
  const Eigen::Index n = x.rows();
  const Eigen::Index keep = n - static_cast<Eigen::Index>(fold.end - fold.begin);
  FeatureMatrix xs(keep, x.cols());
  std::vector<double> ys;
  ys.reserve(static_cast<std::size_t>(keep));
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    if (ui >= fold.begin && ui < fold.end) continue;
    xs.row(r++) = x.row(i);
    ys.push_back(y[ui]);
  }
  return fit_ridge(xs, ys, lambda);
}

struct CvReport {
  std::vector<double> fold_scores;  // per-fold NMSE at chosen_lambda
  double mean = 0.0;
  double std = 0.0;
  double chosen_lambda = 0.0;
  std::vector<double> lambdas;
  std::vector<double> lambda_means;  // mean out-of-fold NMSE per lambda
};

namespace detail {

inline double fold_nmse(std::span<const double> y, std::span<const double> yhat) {
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    num += (y[i] - yhat[i]) * (y[i] - yhat[i]);
    den += (y[i] - mean) * (y[i] - mean);
  }
  if (den == 0.0) throw DegenerateError("fold targets are constant");
  return num / den;
}

}  // namespace detail

/// Picks the lambda with the lowest mean out-of-fold NMSE; near-ties (within
/// 1e-12) go to the larger lambda.
inline CvReport cross_validate(const FeatureMatrix& x, std::span<const double> y, std::size_t k,
                               std::vector<double> lambdas) {
  detail::require_rows(x, y);
  if (lambdas.empty()) throw ParameterError("lambda grid is empty");
  std::sort(lambdas.begin(), lambdas.end());
  const auto folds = fold_ranges(static_cast<std::size_t>(x.rows()), k);

  CvReport rep;
  rep.lambdas = lambdas;
  std::vector<std::vector<double>> scores;
  for (double lam : lambdas) {
    std::vector<double> s;
    for (const auto& f : folds) {
      const auto m = fit_out_of_fold(x, y, f, lam);
      const auto len = static_cast<Eigen::Index>(f.end - f.begin);
      const auto p = predict(m, x.middleRows(static_cast<Eigen::Index>(f.begin), len));
      s.push_back(detail::fold_nmse(y.subspan(f.begin, f.end - f.begin), p));
    }
    rep.lambda_means.push_back(std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size()));
    scores.push_back(std::move(s));
  }
  const double best = *std::min_element(rep.lambda_means.begin(), rep.lambda_means.end());
  std::size_t pick = 0;
  for (std::size_t i = 0; i < lambdas.size(); ++i)
    if (rep.lambda_means[i] <= best + 1e-12) pick = i;
  rep.chosen_lambda = lambdas[pick];
  rep.fold_scores = scores[pick];
  rep.mean = rep.lambda_means[pick];
  double ss = 0.0;
  for (double s : rep.fold_scores) ss += (s - rep.mean) * (s - rep.mean);
  rep.std = std::sqrt(ss / static_cast<double>(rep.fold_scores.size() - 1));
  return rep;
}

// ---------------------------------------------------------------------------
// Model persistence
// ---------------------------------------------------------------------------

// Plain-text record:
//   hpqrc-readout v1
//   created_by <tag>
//   lambda <value>
//   feature_dim <D>
//   weights <D+1 values>
inline void save_model(const ReadoutModel& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write model '" + path + "'");
  out << "hpqrc-readout v1\n"
      << "created_by " << (m.created_by.empty() ? "unknown" : m.created_by) << '\n'
      << std::setprecision(17) << "lambda " << m.lambda << '\n'
      << "feature_dim " << m.feature_dim() << '\n'
      << "weights";
  for (Eigen::Index i = 0; i < m.weights.size(); ++i) out << ' ' << m.weights(i);
  out << '\n';
}

inline ReadoutModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open model '" + path + "'");
  std::string magic, version, key;
  in >> magic >> version;
  if (magic != "hpqrc-readout" || version != "v1")
    throw IngestionError("'" + path + "' is not a readout model file");
  ReadoutModel m;
  std::size_t dim = 0;
  while (in >> key) {
    if (key == "created_by") {
      in >> m.created_by;
    } else if (key == "lambda") {
      in >> m.lambda;
    } else if (key == "feature_dim") {
      in >> dim;
    } else if (key == "weights") {
      m.weights.resize(static_cast<Eigen::Index>(dim + 1));
      for (Eigen::Index i = 0; i < m.weights.size(); ++i)
        if (!(in >> m.weights(i))) throw IngestionError("'" + path + "': truncated weights");
    } else {
      throw IngestionError("'" + path + "': unknown field '" + key + "'");
    }
  }
  if (m.weights.size() != static_cast<Eigen::Index>(dim + 1))
    throw IngestionError("'" + path + "': weights missing");
  return m;
}

}  // namespace hpqrc
