#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "trimap/config.hpp"
#include "trimap/parallel.hpp"
#include "trimap/triplets.hpp"
#include "trimap/types.hpp"

namespace trimap {

// Heavy-tailed similarity (1 + ||a - b||^2)^-1.
template <typename RowA, typename RowB>
double similarity(const RowA& a, const RowB& b) {
  return 1.0 / (1.0 + (a - b).squaredNorm());
}

// omega * s(i,k) / (s(i,j) + s(i,k)), written in squared distances a = |y_i - y_j|^2,
// b = |y_i - y_k|^2 as omega (1 + a) / (2 + a + b).
inline double triplet_loss_from_sqdist(double weight, double sq_ij, double sq_ik) {
  return weight * (1.0 + sq_ij) / (2.0 + sq_ij + sq_ik);
}

inline double triplet_loss(const Triplet& t, double weight, const Embedding& y) {
  return triplet_loss_from_sqdist(weight, (y.row(t.i) - y.row(t.j)).squaredNorm(), (y.row(t.i) - y.row(t.k)).squaredNorm());
}

struct LossReport {
  double total = 0.0;
  std::vector<double> history;
};

namespace detail {

inline void check_triplets(const TripletSet& set, Index n) {
  if (!set.weighted()) throw ArgumentError("triplet set has no weights; run weight_triplets first");
  for (std::size_t t = 0; t < set.triples.size(); ++t) {
    const auto& tr = set.triples[t];
    if (static_cast<Index>(tr.i) >= n || static_cast<Index>(tr.j) >= n || static_cast<Index>(tr.k) >= n) {
      throw ArgumentError("triplet " + std::to_string(t) + " references a point outside the embedding (n = " + std::to_string(n) + ")");
    }
  }
}

// Adds the loss of triples [begin, end) and their gradient into `grad` (n x d, row-major).
template <int Dims>
double accumulate_range(const TripletSet& set, const double* y, Index d, Index begin, Index end, double* grad) {
  const Index dims = Dims > 0 ? Dims : d;
  double loss = 0.0;
  double dij[Dims > 0 ? Dims : 8];
  double dik[Dims > 0 ? Dims : 8];
  std::vector<double> heap_ij, heap_ik;
  double* pij = dij;
  double* pik = dik;
  if (Dims <= 0 && dims > 8) {
    heap_ij.resize(static_cast<std::size_t>(dims));
    heap_ik.resize(static_cast<std::size_t>(dims));
    pij = heap_ij.data();
    pik = heap_ik.data();
  }
  for (Index t = begin; t < end; ++t) {
    const Triplet& tr = set.triples[static_cast<std::size_t>(t)];
    const double w = set.weights[static_cast<std::size_t>(t)];
    const double* yi = y + tr.i * dims;
    const double* yj = y + tr.j * dims;
    const double* yk = y + tr.k * dims;
    double a = 0.0;
    double b = 0.0;
    for (Index c = 0; c < dims; ++c) {
      pij[c] = yi[c] - yj[c];
      pik[c] = yi[c] - yk[c];
      a += pij[c] * pij[c];
      b += pik[c] * pik[c];
    }
    const double denom = 2.0 + a + b;
    loss += w * (1.0 + a) / denom;
    // d loss / d a = w (1 + b) / denom^2, d loss / d b = -w (1 + a) / denom^2
    const double scale = 2.0 * w / (denom * denom);
    const double ga = scale * (1.0 + b);
    const double gb = -scale * (1.0 + a);
    double* gi = grad + tr.i * dims;
    double* gj = grad + tr.j * dims;
    double* gk = grad + tr.k * dims;
    for (Index c = 0; c < dims; ++c) {
      const double fj = ga * pij[c];
      const double fk = gb * pik[c];
      gi[c] += fj + fk;
      gj[c] -= fj;
      gk[c] -= fk;
    }
  }
  return loss;
}

inline double accumulate(const TripletSet& set, const double* y, Index d, Index begin, Index end, double* grad) {
  switch (d) {
    case 1: return accumulate_range<1>(set, y, d, begin, end, grad);
    case 2: return accumulate_range<2>(set, y, d, begin, end, grad);
    case 3: return accumulate_range<3>(set, y, d, begin, end, grad);
    default: return accumulate_range<0>(set, y, d, begin, end, grad);
  }
}

// Scratch buffers for sharded gradient accumulation, reused across iterations.
class GradientWorkspace {
 public:
  // Loss of `set` at `y`; gradient written into `grad` (resized to y's shape).
  // Triples are split into contiguous shards summed in shard order, so output depends
  // only on the shard count.
  double evaluate(const TripletSet& set, const RowMatrix& y, RowMatrix& grad) {
    const Index n = y.rows();
    const Index d = y.cols();
    const Index count = set.size();
    const int shards = static_cast<int>(std::clamp<Index>(num_threads(), 1, std::max<Index>(count / 4096, 1)));
    grad.setZero(n, d);
    if (static_cast<int>(buffers_.size()) < shards - 1) buffers_.resize(static_cast<std::size_t>(shards - 1));
    std::vector<double> losses(static_cast<std::size_t>(shards), 0.0);
    parallel_shards(count, shards, [&](int s, Index begin, Index end) {
      double* target = grad.data();
      if (s > 0) {
        auto& buf = buffers_[static_cast<std::size_t>(s - 1)];
        buf.setZero(n, d);
        target = buf.data();
      }
      losses[static_cast<std::size_t>(s)] = accumulate(set, y.data(), d, begin, end, target);
    });
    double loss = losses[0];
    for (int s = 1; s < shards; ++s) {
      grad += buffers_[static_cast<std::size_t>(s - 1)];
      loss += losses[static_cast<std::size_t>(s)];
    }
    return loss;
  }

 private:
  std::vector<RowMatrix> buffers_;
};

// Points per tile edge: y and gradient rows of two tiles fit in about 1 MiB.
inline Index tile_points(Index d) { return std::max<Index>(1, (Index{1} << 19) / (16 * d)); }

// Triples stably grouped by (tile of j, tile of k), so the scattered rows touched by one
// group stay cache resident while i advances monotonically. Identity order when n fits
// in one tile.
inline TripletSet tile_by_endpoints(const TripletSet& set, Index n, Index d) {
  const Index edge = tile_points(d);
  const Index tiles = (n + edge - 1) / edge;
  if (tiles <= 1) return set;
  auto tile_of = [&](const Triplet& t) {
    return static_cast<std::size_t>((static_cast<Index>(t.j) / edge) * tiles + static_cast<Index>(t.k) / edge);
  };
  std::vector<std::size_t> start(static_cast<std::size_t>(tiles * tiles) + 1, 0);
  for (const auto& t : set.triples) ++start[tile_of(t) + 1];
  for (std::size_t c = 1; c < start.size(); ++c) start[c] += start[c - 1];
  TripletSet out;
  out.triples.resize(set.triples.size());
  out.weights.resize(set.weights.size());
  for (std::size_t t = 0; t < set.triples.size(); ++t) {
    const std::size_t slot = start[tile_of(set.triples[t])]++;
    out.triples[slot] = set.triples[t];
    out.weights[slot] = set.weights[t];
  }
  return out;
}

}  // namespace detail

// Sum of per-triple losses, accumulated in triple order.
inline LossReport total_loss(const TripletSet& set, const Embedding& y) {
  detail::check_triplets(set, y.n());
  LossReport report;
  for (std::size_t t = 0; t < set.triples.size(); ++t) report.total += triplet_loss(set.triples[t], set.weights[t], y);
  return report;
}

// Gradient of the total loss with respect to every embedding coordinate.
inline RowMatrix gradient(const TripletSet& set, const Embedding& y) {
  detail::check_triplets(set, y.n());
  RowMatrix grad;
  detail::GradientWorkspace workspace;
  workspace.evaluate(set, y.values(), grad);
  return grad;
}

struct OptimizeResult {
  Embedding embedding;
  LossReport loss;
  double final_learning_rate = 0.0;
  Index step_halvings = 0;
};

using IterationCallback = std::function<void(Index iteration, double loss)>;

// Full-batch gradient descent with momentum and per-coordinate delta-bar-delta gains.
// Base step is learning_rate * n / |T|; momentum switches from momentum_initial to
// momentum_final at momentum_switch_iter. A loss jump of more than 10x halves the step
// and clears the velocity.
inline OptimizeResult optimize(const TripletSet& set, const Embedding& initial, const RunConfig& config,
                               const IterationCallback& on_iteration = {}) {
  detail::check_triplets(set, initial.n());
  const Index n = initial.n();
  const Index d = initial.d();
  const TripletSet tiled = detail::tile_by_endpoints(set, n, d);
  RowMatrix y = initial.values();
  RowMatrix velocity = RowMatrix::Zero(n, d);
  RowMatrix gain = RowMatrix::Ones(n, d);
  RowMatrix smoothed = RowMatrix::Zero(n, d);
  RowMatrix grad(n, d);
  detail::GradientWorkspace workspace;

  OptimizeResult result;
  result.loss.history.reserve(static_cast<std::size_t>(config.iters));
  double eta = set.size() > 0 ? config.learning_rate * static_cast<double>(n) / static_cast<double>(set.size()) : 0.0;
  double previous = 0.0;

  for (Index it = 0; it < config.iters; ++it) {
    const double loss = workspace.evaluate(tiled, y, grad);
    if (!std::isfinite(loss) || !grad.allFinite()) {
      throw DivergenceError("non-finite loss or gradient at iteration " + std::to_string(it), it);
    }
    result.loss.history.push_back(loss);
    if (on_iteration) on_iteration(it, loss);
    if (it > 0 && loss > 10.0 * previous) {
      eta *= 0.5;
      velocity.setZero();
      ++result.step_halvings;
    }
    previous = loss;

    const double momentum = it < config.momentum_switch_iter ? config.momentum_initial : config.momentum_final;
    double* g = grad.data();
    double* gn = gain.data();
    double* sm = smoothed.data();
    double* v = velocity.data();
    double* pos = y.data();
    for (Index c = 0; c < n * d; ++c) {
      sm[c] = config.grad_smoothing * sm[c] + (1.0 - config.grad_smoothing) * g[c];
      // sign agreement with the smoothed gradient grows the gain
      if (g[c] * sm[c] > 0.0) {
        gn[c] += config.gain_increment;
      } else {
        gn[c] *= config.gain_decay;
      }
      gn[c] = std::clamp(gn[c], config.gain_min, config.gain_max);
      v[c] = momentum * v[c] - eta * gn[c] * g[c];
      pos[c] += v[c];
    }
  }

  const double final_loss = workspace.evaluate(tiled, y, grad);
  if (!std::isfinite(final_loss) || !y.allFinite()) {
    throw DivergenceError("non-finite embedding after iteration " + std::to_string(config.iters), config.iters);
  }
  result.loss.total = final_loss;
  result.final_learning_rate = eta;
  result.embedding = Embedding(std::move(y));
  return result;
}

}  // namespace trimap
