#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "trimap/knn.hpp"
#include "trimap/linalg.hpp"
#include "trimap/parallel.hpp"
#include "trimap/rng.hpp"
#include "trimap/types.hpp"

namespace trimap {

inline constexpr Index kNnAccuracyMaxPoints = 20000;

struct MetricsReport {
  double mre = 0.0;
  double mre_pca = 0.0;
  double global_score = 0.0;
  std::optional<double> nn_accuracy;
  Index nn_points = 0;  // points the NN accuracy was evaluated on
  bool degenerate_pca = false;
};

// Minimum reconstruction error min_A ||X_c - Y_c A^T||_F^2 of the data from a linear map of the embedding.
inline double mre(const DataMatrix& x, const Embedding& y) {
  if (x.n() != y.n()) {
    throw ArgumentError("mre: data has " + std::to_string(x.n()) + " points, embedding has " + std::to_string(y.n()));
  }
  const RowMatrix xc = centered_values(x.values());
  const RowMatrix yc = centered_values(y.values());
  return reconstruction_residual(xc, yc, solve_inverse_map(xc, yc));
}

struct GlobalScore {
  double score = 0.0;
  double mre = 0.0;
  double mre_pca = 0.0;
  // data has rank <= d, so the PCA error is zero and the ratio is undefined
  bool degenerate = false;
};

// exp(-(E - E_pca) / E_pca) clamped to [0, 1], with E_pca supplied by the caller.
inline GlobalScore global_score_from(const DataMatrix& x, const Embedding& y, double mre_pca) {
  GlobalScore out;
  out.mre = mre(x, y);
  out.mre_pca = mre_pca;
  const double total = centered_values(x.values()).squaredNorm();
  const double floor = 1e-12 * std::max(total, 1.0);
  if (mre_pca <= floor) {
    out.degenerate = true;
    out.score = out.mre <= floor ? 1.0 : 0.0;
    return out;
  }
  out.score = std::clamp(std::exp(-(out.mre - mre_pca) / mre_pca), 0.0, 1.0);
  return out;
}

inline GlobalScore global_score_detail(const DataMatrix& x, const Embedding& y) {
  if (x.n() != y.n()) throw ArgumentError("global_score: point counts differ");
  const Index d = std::min({y.d(), x.m(), x.n() - 1});
  if (d < 1) throw ArgumentError("global_score needs at least 2 points");
  const PcaFit pca = fit_pca(x, d);
  return global_score_from(x, y, mre(x, pca.embedding));
}

inline double global_score(const DataMatrix& x, const Embedding& y) { return global_score_detail(x, y).score; }

struct NnAccuracy {
  double value = 0.0;
  Index points = 0;
};

// Leave-one-out 1-NN label agreement in the embedding, exact search, ties to the smaller
// index. Above max_points a seeded subsample of that size is evaluated against itself.
inline NnAccuracy nn_accuracy(const Embedding& y, const LabelVector& labels, std::uint64_t seed = 0,
                              Index max_points = kNnAccuracyMaxPoints) {
  if (static_cast<Index>(labels.size()) != y.n()) {
    throw ArgumentError("nn_accuracy: " + std::to_string(labels.size()) + " labels for " + std::to_string(y.n()) + " points");
  }
  if (y.n() < 2) throw ArgumentError("nn_accuracy needs at least 2 points");
  std::vector<Index> subset(static_cast<std::size_t>(y.n()));
  std::iota(subset.begin(), subset.end(), Index{0});
  if (y.n() > max_points) {
    Rng rng = substream(seed, 0, stream_tag::kSubsample);
    std::shuffle(subset.begin(), subset.end(), rng);
    subset.resize(static_cast<std::size_t>(max_points));
    std::sort(subset.begin(), subset.end());
  }
  const auto count = static_cast<Index>(subset.size());
  const RowMatrix& values = y.values();
  std::vector<std::uint8_t> hit(static_cast<std::size_t>(count), 0);
  parallel_for(count, [&](Index a) {
    const Index i = subset[static_cast<std::size_t>(a)];
    double best = std::numeric_limits<double>::infinity();
    Index best_j = -1;
    for (Index b = 0; b < count; ++b) {
      const Index j = subset[static_cast<std::size_t>(b)];
      if (j == i) continue;
      const double dist = detail::squared_distance(values, i, j);
      if (dist < best) {
        best = dist;
        best_j = j;
      }
    }
    hit[static_cast<std::size_t>(a)] = labels[static_cast<std::size_t>(best_j)] == labels[static_cast<std::size_t>(i)];
  });
  const auto agree = std::count(hit.begin(), hit.end(), std::uint8_t{1});
  return {static_cast<double>(agree) / static_cast<double>(count), count};
}

}  // namespace trimap
