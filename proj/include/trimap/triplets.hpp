#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "trimap/config.hpp"
#include "trimap/knn.hpp"
#include "trimap/parallel.hpp"
#include "trimap/rng.hpp"
#include "trimap/types.hpp"

namespace trimap {

using SigmaVector = std::vector<double>;

inline constexpr double kSigmaFloor = 1e-10;
inline constexpr int kMaxRejectionAttempts = 200;

// (i, j, k): i is closer to j than to k.
struct Triplet {
  std::uint32_t i;
  std::uint32_t j;
  std::uint32_t k;
  friend bool operator==(const Triplet&, const Triplet&) = default;
};

struct TripletSet {
  std::vector<Triplet> triples;
  // log of the unnormalized weight: scaled d2(i,k) - scaled d2(i,j), always >= 0
  std::vector<double> log_raw_weights;
  // transformed weights, empty until weight_triplets runs
  std::vector<double> weights;

  Index size() const noexcept { return static_cast<Index>(triples.size()); }
  bool weighted() const noexcept { return weights.size() == triples.size(); }
};

// Local scale of each point: mean distance to its 4th, 5th and 6th nearest neighbors.
inline SigmaVector compute_sigmas(const NeighborTable& neighbors) {
  if (neighbors.k() < 6) {
    throw ArgumentError("compute_sigmas needs at least 6 neighbors per point, table has " + std::to_string(neighbors.k()));
  }
  SigmaVector sigmas(static_cast<std::size_t>(neighbors.n()));
  for (Index i = 0; i < neighbors.n(); ++i) {
    const double mean = (neighbors.distance(i, 3) + neighbors.distance(i, 4) + neighbors.distance(i, 5)) / 3.0;
    sigmas[static_cast<std::size_t>(i)] = std::max(mean, kSigmaFloor);
  }
  return sigmas;
}

// ||x_i - x_j||^2 / (sigma_i sigma_j)
inline double scaled_sqdist(Index i, Index j, const RowMatrix& x, const SigmaVector& sigmas) {
  if (i == j) return 0.0;
  return detail::squared_distance(x, i, j) / (sigmas[static_cast<std::size_t>(i)] * sigmas[static_cast<std::size_t>(j)]);
}

inline double scaled_sqdist(Index i, Index j, const DataMatrix& x, const SigmaVector& sigmas) {
  return scaled_sqdist(i, j, x.values(), sigmas);
}

namespace detail {

// Uniform over [0, n) \ {a, b} with a != b.
inline Index draw_excluding(Rng& rng, Index n, Index a, Index b) {
  std::uniform_int_distribution<Index> dist(0, n - 3);
  Index v = dist(rng);
  const Index lo = std::min(a, b);
  const Index hi = std::max(a, b);
  if (v >= lo) ++v;
  if (v >= hi) ++v;
  return v;
}

inline Index draw_excluding(Rng& rng, Index n, Index a) {
  std::uniform_int_distribution<Index> dist(0, n - 2);
  Index v = dist(rng);
  if (v >= a) ++v;
  return v;
}

}  // namespace detail

// Per point i: for each of its m nearest neighbors j, m' triplets (i, j, k) with k drawn
// uniformly among points farther from i than j (scaled distances; rejection sampling capped
// at 200 draws, then the farthest draw); plus r triplets with j, k uniform and ordered by
// nearness to i. Output is grouped by i in ascending order and independent of thread count.
inline TripletSet sample_triplets(const DataMatrix& x, const NeighborTable& neighbors, const SigmaVector& sigmas,
                                  const RunConfig& config, std::uint64_t seed) {
  const Index n = x.n();
  const Index m = config.m_neighbors;
  if (n <= m + 1) {
    throw ArgumentError("sample_triplets: n = " + std::to_string(n) + " too small for m_neighbors = " + std::to_string(m));
  }
  if (neighbors.n() != n || neighbors.k() < m) throw ArgumentError("sample_triplets: neighbor table does not cover m_neighbors");
  if (static_cast<Index>(sigmas.size()) != n) throw ArgumentError("sample_triplets: sigma vector length mismatch");
  if (n > static_cast<Index>(std::numeric_limits<std::uint32_t>::max())) throw ArgumentError("sample_triplets: too many points");

  const Index per_point = config.triplets_per_point();
  TripletSet set;
  set.triples.resize(static_cast<std::size_t>(n * per_point));
  set.log_raw_weights.resize(static_cast<std::size_t>(n * per_point));
  const RowMatrix& values = x.values();

  parallel_for(n, [&](Index i) {
    Rng rng = substream(seed, static_cast<std::uint64_t>(i), stream_tag::kTriplets);
    auto slot = static_cast<std::size_t>(i * per_point);
    auto emit = [&](Index j, Index k, double d_ij, double d_ik) {
      if (d_ik < d_ij) {
        std::swap(j, k);
        std::swap(d_ij, d_ik);
      }
      set.triples[slot] = {static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(k)};
      set.log_raw_weights[slot] = d_ik - d_ij;
      ++slot;
    };
    for (Index r = 0; r < m; ++r) {
      const Index j = neighbors.index(i, r);
      const double d_ij = scaled_sqdist(i, j, values, sigmas);
      for (Index p = 0; p < config.m_prime; ++p) {
        Index far = -1;
        double far_d = -1.0;
        bool accepted = false;
        for (int attempt = 0; attempt < kMaxRejectionAttempts; ++attempt) {
          const Index k = detail::draw_excluding(rng, n, i, j);
          const double d_ik = scaled_sqdist(i, k, values, sigmas);
          if (d_ik > d_ij) {
            emit(j, k, d_ij, d_ik);
            accepted = true;
            break;
          }
          if (d_ik > far_d) {
            far_d = d_ik;
            far = k;
          }
        }
        if (!accepted) emit(j, far, d_ij, far_d);
      }
    }
    for (Index r = 0; r < config.r_random; ++r) {
      const Index j = detail::draw_excluding(rng, n, i);
      const Index k = detail::draw_excluding(rng, n, i, j);
      emit(j, k, scaled_sqdist(i, j, values, sigmas), scaled_sqdist(i, k, values, sigmas));
    }
  });
  return set;
}

// omega = log(1 + gamma (w / W + delta)) with w = exp(log_raw_weight) and W the largest w,
// evaluated as exp(log w - log W) so large exponents never overflow.
inline void weight_triplets(TripletSet& set, double gamma, double delta) {
  if (set.triples.empty()) throw ArgumentError("weight_triplets: empty triplet set");
  if (set.log_raw_weights.size() != set.triples.size()) throw ArgumentError("weight_triplets: log weights missing");
  if (!(gamma > 0.0) || !(delta > 0.0)) throw ArgumentError("weight_triplets: gamma and delta must be positive");
  double top = -std::numeric_limits<double>::infinity();
  for (double lw : set.log_raw_weights) {
    if (!std::isfinite(lw)) throw ArgumentError("weight_triplets: non-finite log weight");
    top = std::max(top, lw);
  }
  set.weights.resize(set.log_raw_weights.size());
  for (std::size_t t = 0; t < set.log_raw_weights.size(); ++t) {
    set.weights[t] = std::log1p(gamma * (std::exp(set.log_raw_weights[t] - top) + delta));
  }
}

}  // namespace trimap
