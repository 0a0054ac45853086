#pragma once

// Independent reference computations for the test suites. Nothing here calls into the
// library's numerical routines; inputs are plain vectors/Eigen storage only.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "trimap/types.hpp"

namespace trimap::oracle {

using LongMatrix = std::vector<std::vector<long double>>;

inline LongMatrix to_long(const RowMatrix& m) {
  LongMatrix out(static_cast<std::size_t>(m.rows()), std::vector<long double>(static_cast<std::size_t>(m.cols())));
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) out[r][c] = m(r, c);
  return out;
}

// Sample covariance (n - 1 denominator) in extended precision.
inline LongMatrix covariance(const RowMatrix& x) {
  const auto n = x.rows();
  const auto m = x.cols();
  std::vector<long double> mean(m, 0.0L);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j) mean[j] += x(i, j);
  for (auto& v : mean) v /= n;
  LongMatrix cov(m, std::vector<long double>(m, 0.0L));
  for (Index i = 0; i < n; ++i)
    for (Index a = 0; a < m; ++a)
      for (Index b = a; b < m; ++b) cov[a][b] += (x(i, a) - mean[a]) * (x(i, b) - mean[b]);
  for (Index a = 0; a < m; ++a)
    for (Index b = a; b < m; ++b) {
      cov[a][b] /= (n - 1);
      cov[b][a] = cov[a][b];
    }
  return cov;
}

// Cyclic Jacobi rotations; returns eigenvalues sorted descending.
inline std::vector<long double> jacobi_eigenvalues(LongMatrix a) {
  const std::size_t m = a.size();
  for (int sweep = 0; sweep < 100; ++sweep) {
    long double off = 0.0L;
    for (std::size_t p = 0; p < m; ++p)
      for (std::size_t q = p + 1; q < m; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-36L) break;
    for (std::size_t p = 0; p < m; ++p) {
      for (std::size_t q = p + 1; q < m; ++q) {
        if (std::fabs(a[p][q]) < 1e-300L) continue;
        const long double theta = (a[q][q] - a[p][p]) / (2.0L * a[p][q]);
        const long double t = (theta >= 0 ? 1.0L : -1.0L) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0L));
        const long double c = 1.0L / std::sqrt(t * t + 1.0L);
        const long double s = t * c;
        for (std::size_t k = 0; k < m; ++k) {
          const long double akp = a[k][p];
          const long double akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < m; ++k) {
          const long double apk = a[p][k];
          const long double aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<long double> ev(m);
  for (std::size_t i = 0; i < m; ++i) ev[i] = a[i][i];
  std::sort(ev.begin(), ev.end(), std::greater<>());
  return ev;
}

// Solves the square system by Gaussian elimination with partial pivoting.
inline std::vector<long double> solve(LongMatrix a, std::vector<long double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    std::swap(a[col], a[piv]);
    std::swap(b[col], b[piv]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const long double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<long double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    long double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
    x[i] = s / a[i][i];
  }
  return x;
}

inline RowMatrix centered(const RowMatrix& x) {
  RowMatrix out = x;
  for (Index j = 0; j < x.cols(); ++j) {
    long double mean = 0.0L;
    for (Index i = 0; i < x.rows(); ++i) mean += x(i, j);
    mean /= x.rows();
    for (Index i = 0; i < x.rows(); ++i) out(i, j) = static_cast<double>(x(i, j) - mean);
  }
  return out;
}

// Least-squares residual ||X - Y B||^2 solving the normal equations column by column.
inline long double least_squares_residual_normal_eq(const RowMatrix& x, const RowMatrix& y) {
  const Index n = x.rows();
  const Index d = y.cols();
  LongMatrix gram(d, std::vector<long double>(d, 0.0L));
  for (Index i = 0; i < n; ++i)
    for (Index a = 0; a < d; ++a)
      for (Index b = 0; b < d; ++b) gram[a][b] += static_cast<long double>(y(i, a)) * y(i, b);
  long double residual = 0.0L;
  for (Index col = 0; col < x.cols(); ++col) {
    std::vector<long double> rhs(d, 0.0L);
    for (Index i = 0; i < n; ++i)
      for (Index a = 0; a < d; ++a) rhs[a] += static_cast<long double>(y(i, a)) * x(i, col);
    const auto coef = solve(gram, rhs);
    for (Index i = 0; i < n; ++i) {
      long double fit = 0.0L;
      for (Index a = 0; a < d; ++a) fit += coef[a] * y(i, a);
      const long double r = x(i, col) - fit;
      residual += r * r;
    }
  }
  return residual;
}

// Least-squares residual ||X - Y B||^2 found by plain gradient descent on B.
inline double least_squares_residual_gd(const RowMatrix& x, const RowMatrix& y, int iterations = 20000) {
  const Index d = y.cols();
  const Index m = x.cols();
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(d, m);
  // step below 1 / lambda_max(Y^T Y), bounded by the trace
  const double step = 1.0 / (y.squaredNorm());
  for (int it = 0; it < iterations; ++it) {
    const Eigen::MatrixXd r = y * b - x;
    b -= step * (y.transpose() * r);
  }
  return (x - y * b).squaredNorm();
}

// Neumaier-compensated sum in extended precision.
inline long double compensated_sum(const std::vector<double>& values) {
  long double sum = 0.0L;
  long double comp = 0.0L;
  for (double v : values) {
    const long double t = sum + v;
    if (std::fabs(sum) >= std::fabs(static_cast<long double>(v))) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

struct PlainTriplet {
  Index i, j, k;
  double w;
};

// Loss written from the similarity definition, in extended precision.
inline long double loss(const std::vector<PlainTriplet>& triples, const std::vector<long double>& y, Index d) {
  long double total = 0.0L;
  for (const auto& t : triples) {
    long double dij = 0.0L;
    long double dik = 0.0L;
    for (Index c = 0; c < d; ++c) {
      const long double a = y[t.i * d + c] - y[t.j * d + c];
      const long double b = y[t.i * d + c] - y[t.k * d + c];
      dij += a * a;
      dik += b * b;
    }
    const long double s_ij = 1.0L / (1.0L + dij);
    const long double s_ik = 1.0L / (1.0L + dik);
    total += t.w * s_ik / (s_ij + s_ik);
  }
  return total;
}

// Central finite differences of `loss`.
inline std::vector<long double> finite_difference_gradient(const std::vector<PlainTriplet>& triples, const RowMatrix& y,
                                                           long double h = 1e-5L) {
  const Index d = y.cols();
  std::vector<long double> flat(y.size());
  for (Index r = 0; r < y.rows(); ++r)
    for (Index c = 0; c < d; ++c) flat[r * d + c] = y(r, c);
  std::vector<long double> grad(flat.size());
  for (std::size_t p = 0; p < flat.size(); ++p) {
    const long double keep = flat[p];
    flat[p] = keep + h;
    const long double up = loss(triples, flat, d);
    flat[p] = keep - h;
    const long double down = loss(triples, flat, d);
    flat[p] = keep;
    grad[p] = (up - down) / (2.0L * h);
  }
  return grad;
}

// The triplet loss has no finite minimizer once most triples are satisfied: scaling Y by
// s -> infinity sends each term to w a / (a + b), so its infimum is the minimum of that
// scale-free objective over layouts. Fixed-step descent on it, projecting back to centered
// unit-RMS layouts after every step; returns the final objective value.
inline double scale_free_infimum(const std::vector<PlainTriplet>& triples, RowMatrix y, double step, int iterations) {
  auto normalize = [&] {
    y.rowwise() -= y.colwise().mean();
    y /= std::sqrt(y.squaredNorm() / static_cast<double>(y.rows()));
  };
  auto objective = [&] {
    double f = 0.0;
    for (const auto& t : triples) {
      const double a = (y.row(t.i) - y.row(t.j)).squaredNorm();
      const double b = (y.row(t.i) - y.row(t.k)).squaredNorm();
      f += t.w * a / (a + b);
    }
    return f;
  };
  normalize();
  RowMatrix grad(y.rows(), y.cols());
  for (int it = 0; it < iterations; ++it) {
    grad.setZero();
    for (const auto& t : triples) {
      const Eigen::RowVectorXd u = y.row(t.i) - y.row(t.j);
      const Eigen::RowVectorXd v = y.row(t.i) - y.row(t.k);
      const double a = u.squaredNorm();
      const double b = v.squaredNorm();
      // f = w a / (a + b): df/da = w b / (a + b)^2, df/db = -w a / (a + b)^2, da/du = 2u
      const double q = (a + b) * (a + b);
      const Eigen::RowVectorXd gu = (2.0 * t.w * b / q) * u;
      const Eigen::RowVectorXd gv = (-2.0 * t.w * a / q) * v;
      grad.row(t.i) += gu + gv;
      grad.row(t.j) -= gu;
      grad.row(t.k) -= gv;
    }
    y -= step * grad;
    normalize();
  }
  return objective();
}

// O(n^2) leave-one-out 1-NN label agreement; ties resolved to the smaller index.
inline double nn_accuracy_bruteforce(const RowMatrix& y, const std::vector<std::int64_t>& labels) {
  const Index n = y.rows();
  Index agree = 0;
  for (Index i = 0; i < n; ++i) {
    Index best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      double dist = 0.0;
      for (Index c = 0; c < y.cols(); ++c) dist += (y(i, c) - y(j, c)) * (y(i, c) - y(j, c));
      if (dist < best_d) {
        best_d = dist;
        best = j;
      }
    }
    agree += labels[best] == labels[i];
  }
  return static_cast<double>(agree) / static_cast<double>(n);
}

inline RowMatrix random_matrix(Index rows, Index cols, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  RowMatrix m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = normal(rng);
  return m;
}

// Random orthogonal matrix from Gram-Schmidt on a Gaussian matrix.
inline Eigen::MatrixXd random_orthogonal(Index d, std::uint64_t seed) {
  RowMatrix g = random_matrix(d, d, seed);
  Eigen::MatrixXd q(d, d);
  for (Index c = 0; c < d; ++c) {
    Eigen::VectorXd v = g.row(c).transpose();
    for (Index p = 0; p < c; ++p) v -= q.col(p).dot(v) * q.col(p);
    q.col(c) = v.normalized();
  }
  return q;
}

}  // namespace trimap::oracle
