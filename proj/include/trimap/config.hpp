#pragma once

#include <cstdint>
#include <string>

#include "trimap/types.hpp"

namespace trimap {

// Every tunable of the embedding pipeline. Defaults reproduce the reference setting
// (10 neighbors, 5 triplets per neighbor, 5 random triplets, gamma 500, delta 1e-4, 400 iterations).
struct RunConfig {
  Index m_neighbors = 10;
  Index m_prime = 5;
  Index r_random = 5;
  double gamma = 500.0;
  double delta = 1e-4;
  Index out_dims = 2;
  Index iters = 400;
  Index momentum_switch_iter = 250;
  double momentum_initial = 0.5;
  double momentum_final = 0.8;
  std::uint64_t seed = 0;
  Index pre_reduce_dims = 100;

  // Approximate k-NN forest.
  Index knn_trees = 20;
  Index knn_leaf_size = 64;
  // Neighbors-of-neighbors refinement rounds after the forest pass.
  Index knn_search_factor = 1;
  bool exact_knn = false;

  // Delta-bar-delta step control.
  double learning_rate = 1.0;
  double gain_increment = 0.2;
  double gain_decay = 0.8;
  double gain_min = 0.01;
  double gain_max = 100.0;
  double grad_smoothing = 0.9;

  // Multiplier applied to the PCA initialization.
  double init_scale = 0.01;

  // Neighbors requested from the k-NN stage: enough for sigma (6th neighbor) and
  // for triplet sampling, plus one of headroom.
  Index knn_k() const { return std::max<Index>(m_neighbors, 6) + 1; }

  Index triplets_per_point() const { return m_neighbors * m_prime + r_random; }

  void validate() const {
    auto positive = [](Index v, const char* name) {
      if (v < 1) throw ArgumentError(std::string(name) + " must be >= 1");
    };
    positive(m_neighbors, "m_neighbors");
    positive(m_prime, "m_prime");
    // r may be zero: random triplets are optional
    if (r_random < 0) throw ArgumentError("r_random must be >= 0");
    positive(out_dims, "out_dims");
    positive(iters, "iters");
    positive(pre_reduce_dims, "pre_reduce_dims");
    positive(knn_trees, "knn_trees");
    positive(knn_leaf_size, "knn_leaf_size");
    if (knn_search_factor < 0) throw ArgumentError("knn_search_factor must be >= 0");
    if (momentum_switch_iter < 0) throw ArgumentError("momentum_switch_iter must be >= 0");
    if (!(gamma > 0.0)) throw ArgumentError("gamma must be > 0");
    if (!(delta > 0.0)) throw ArgumentError("delta must be > 0");
    if (!(learning_rate > 0.0)) throw ArgumentError("learning_rate must be > 0");
    if (!(init_scale > 0.0)) throw ArgumentError("init_scale must be > 0");
    if (!(gain_min > 0.0 && gain_min <= gain_max)) throw ArgumentError("gain bounds must satisfy 0 < min <= max");
  }
};

}  // namespace trimap
