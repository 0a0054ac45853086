#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <utility>

#include <Eigen/Dense>

#include "trimap/rng.hpp"
#include "trimap/types.hpp"

namespace trimap {

// Top-d principal directions of a dataset.
struct PcaModel {
  Vector mean;                // m
  RowMatrix components;       // d x m, orthonormal rows (zero rows for zero-variance directions)
  Vector explained_variance;  // d, nonincreasing, sample variance (n - 1 denominator)
};

struct PcaFit {
  PcaModel model;
  Embedding embedding;
};

// Dense eigensolver up to this many input dimensions, randomized subspace iteration above.
inline constexpr Index kDensePcaMaxDims = 1000;
inline constexpr Index kRandomizedOversampling = 10;
inline constexpr Index kRandomizedPowerIters = 7;

inline std::pair<DataMatrix, Vector> center(const DataMatrix& x) {
  Vector mean = x.values().colwise().mean().transpose();
  RowMatrix centered = x.values().rowwise() - mean.transpose();
  return {DataMatrix(std::move(centered)), std::move(mean)};
}

inline RowMatrix centered_values(const RowMatrix& values) {
  return values.rowwise() - values.colwise().mean();
}

namespace detail {

// Makes the largest-magnitude entry of every row positive.
inline void canonicalize_signs(RowMatrix& rows) {
  for (Index r = 0; r < rows.rows(); ++r) {
    Index arg = 0;
    double best = -1.0;
    for (Index c = 0; c < rows.cols(); ++c) {
      if (std::abs(rows(r, c)) > best) {
        best = std::abs(rows(r, c));
        arg = c;
      }
    }
    if (rows(r, arg) < 0.0) rows.row(r) *= -1.0;
  }
}

struct TopEigen {
  Vector values;       // descending
  RowMatrix vectors;   // one eigenvector per row
};

inline TopEigen dense_top_eigen(const RowMatrix& xc, Index d) {
  const double denom = static_cast<double>(std::max<Index>(xc.rows() - 1, 1));
  const Eigen::MatrixXd cov = (xc.transpose() * xc) / denom;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw Error("symmetric eigensolver failed to converge");
  const Index m = cov.rows();
  TopEigen out{Vector(d), RowMatrix(d, m)};
  for (Index k = 0; k < d; ++k) {
    out.values(k) = solver.eigenvalues()(m - 1 - k);
    out.vectors.row(k) = solver.eigenvectors().col(m - 1 - k).transpose();
  }
  return out;
}

inline TopEigen randomized_top_eigen(const RowMatrix& xc, Index d, std::uint64_t seed) {
  const Index m = xc.cols();
  const Index width = std::min(m, d + kRandomizedOversampling);
  const double denom = static_cast<double>(std::max<Index>(xc.rows() - 1, 1));
  Rng rng = substream(seed, 0, stream_tag::kPca);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd basis(m, width);
  for (Index c = 0; c < width; ++c) {
    for (Index r = 0; r < m; ++r) basis(r, c) = normal(rng);
  }
  auto orthonormalize = [](Eigen::MatrixXd& q) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(q);
    q = qr.householderQ() * Eigen::MatrixXd::Identity(q.rows(), q.cols());
  };
  orthonormalize(basis);
  for (Index it = 0; it < kRandomizedPowerIters; ++it) {
    const Eigen::MatrixXd projected = xc * basis;
    basis = xc.transpose() * projected;
    orthonormalize(basis);
  }
  const Eigen::MatrixXd projected = xc * basis;
  const Eigen::MatrixXd small = (projected.transpose() * projected) / denom;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(small);
  if (solver.info() != Eigen::Success) throw Error("symmetric eigensolver failed to converge");
  TopEigen out{Vector(d), RowMatrix(d, m)};
  for (Index k = 0; k < d; ++k) {
    out.values(k) = solver.eigenvalues()(width - 1 - k);
    out.vectors.row(k) = (basis * solver.eigenvectors().col(width - 1 - k)).transpose();
  }
  return out;
}

}  // namespace detail

// Projects onto the top-d variance directions. Directions whose variance is below
// 1e-12 of the largest get zero components and zero variance, ordered last.
inline PcaFit fit_pca(const DataMatrix& x, Index d, std::uint64_t seed = 0) {
  if (x.n() < 2) throw ArgumentError("fit_pca needs at least 2 points");
  if (d < 1 || d > std::min(x.n() - 1, x.m())) {
    throw ArgumentError("fit_pca: d = " + std::to_string(d) + " outside [1, min(n - 1, m)] = [1, " +
                        std::to_string(std::min(x.n() - 1, x.m())) + "]");
  }
  PcaModel model;
  model.mean = x.values().colwise().mean().transpose();
  const RowMatrix xc = x.values().rowwise() - model.mean.transpose();

  detail::TopEigen top = x.m() <= kDensePcaMaxDims ? detail::dense_top_eigen(xc, d)
                                                    : detail::randomized_top_eigen(xc, d, seed);
  const double largest = std::max(top.values(0), 0.0);
  for (Index k = 0; k < d; ++k) {
    if (!(top.values(k) > 1e-12 * largest)) {
      top.values(k) = 0.0;
      top.vectors.row(k).setZero();
    }
  }
  detail::canonicalize_signs(top.vectors);
  model.components = std::move(top.vectors);
  model.explained_variance = std::move(top.values);
  RowMatrix projected = xc * model.components.transpose();
  return {std::move(model), Embedding(std::move(projected))};
}

// PCA down to target_dims when the input has more columns than that; otherwise identity.
inline DataMatrix pre_reduce(const DataMatrix& x, Index target_dims = 100) {
  if (x.m() <= target_dims) return x;
  if (x.n() < 2) return DataMatrix(RowMatrix::Zero(x.n(), target_dims));
  const Index d = std::min(target_dims, x.n() - 1);
  return DataMatrix(fit_pca(x, d).embedding.values());
}

// Least-squares linear map A (m x d) minimizing ||X - Y A^T||_F^2 for centered X (n x m)
// and Y (n x d). Singular Y^T Y falls back to the pseudo-inverse (minimum-norm solution)
// with cutoff 1e-12 times its largest eigenvalue.
inline Eigen::MatrixXd solve_inverse_map(const RowMatrix& xc, const RowMatrix& yc) {
  if (xc.rows() != yc.rows()) {
    throw ArgumentError("solve_inverse_map: X has " + std::to_string(xc.rows()) + " rows, Y has " +
                        std::to_string(yc.rows()));
  }
  const Eigen::MatrixXd gram = yc.transpose() * yc;
  const Eigen::MatrixXd cross = xc.transpose() * yc;  // m x d
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
  if (solver.info() != Eigen::Success) throw Error("symmetric eigensolver failed to converge");
  const Vector& evals = solver.eigenvalues();
  const double cutoff = 1e-12 * std::max(evals.cwiseAbs().maxCoeff(), 0.0);
  Vector inv = Vector::Zero(evals.size());
  for (Index k = 0; k < evals.size(); ++k) {
    if (evals(k) > cutoff) inv(k) = 1.0 / evals(k);
  }
  const Eigen::MatrixXd pinv = solver.eigenvectors() * inv.asDiagonal() * solver.eigenvectors().transpose();
  return cross * pinv;
}

inline Eigen::MatrixXd solve_inverse_map(const DataMatrix& xc, const Embedding& yc) {
  return solve_inverse_map(xc.values(), yc.values());
}

// ||X - Y A^T||_F^2
inline double reconstruction_residual(const RowMatrix& xc, const RowMatrix& yc, const Eigen::MatrixXd& a) {
  return (xc - yc * a.transpose()).squaredNorm();
}

}  // namespace trimap
