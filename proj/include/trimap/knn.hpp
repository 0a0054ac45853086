#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "trimap/parallel.hpp"
#include "trimap/rng.hpp"
#include "trimap/types.hpp"

namespace trimap {

// k nearest neighbors of every point, self excluded, sorted by (distance, index).
class NeighborTable {
 public:
  NeighborTable() = default;
  NeighborTable(Index n, Index k)
      : n_(n), k_(k), indices_(static_cast<std::size_t>(n * k), -1), distances_(static_cast<std::size_t>(n * k), 0.0) {}

  Index n() const noexcept { return n_; }
  Index k() const noexcept { return k_; }
  Index index(Index i, Index r) const { return indices_[static_cast<std::size_t>(i * k_ + r)]; }
  double distance(Index i, Index r) const { return distances_[static_cast<std::size_t>(i * k_ + r)]; }
  Index& index(Index i, Index r) { return indices_[static_cast<std::size_t>(i * k_ + r)]; }
  double& distance(Index i, Index r) { return distances_[static_cast<std::size_t>(i * k_ + r)]; }

  friend bool operator==(const NeighborTable&, const NeighborTable&) = default;

 private:
  Index n_ = 0;
  Index k_ = 0;
  std::vector<Index> indices_;
  std::vector<double> distances_;
};

// Binary space partition with random split directions and median thresholds.
struct RPTree {
  struct Node {
    Index left = -1;   // -1 for leaves
    Index right = -1;
    double threshold = 0.0;
    Index begin = 0;   // range into `items` covered by this node
    Index end = 0;
    bool leaf() const noexcept { return left < 0; }
    friend bool operator==(const Node&, const Node&) = default;
  };

  std::vector<Node> nodes;
  std::vector<double> directions;  // m values per internal node, indexed by node id
  std::vector<Index> items;        // point indices, leaves own contiguous ranges
  std::vector<Index> leaf_of;      // leaf node id containing each point

  friend bool operator==(const RPTree&, const RPTree&) = default;
};

struct RPForest {
  std::vector<RPTree> trees;
  Index leaf_size = 0;
  Index dims = 0;

  friend bool operator==(const RPForest&, const RPForest&) = default;
};

inline constexpr Index kDefaultForestTrees = 20;
inline constexpr Index kDefaultLeafSize = 64;
inline constexpr Index kDefaultRefineRounds = 1;

namespace detail {

inline double squared_distance(const RowMatrix& x, Index a, Index b) {
  const double* pa = x.data() + a * x.cols();
  const double* pb = x.data() + b * x.cols();
  double sum = 0.0;
  for (Index c = 0; c < x.cols(); ++c) {
    const double diff = pa[c] - pb[c];
    sum += diff * diff;
  }
  return sum;
}

struct Candidate {
  double sqdist;
  Index index;
  bool operator<(const Candidate& o) const noexcept {
    return sqdist < o.sqdist || (sqdist == o.sqdist && index < o.index);
  }
};

inline void store_top_k(std::vector<Candidate>& cands, Index i, Index k, NeighborTable& table) {
  const auto kk = static_cast<std::ptrdiff_t>(k);
  std::partial_sort(cands.begin(), cands.begin() + kk, cands.end());
  for (Index r = 0; r < k; ++r) {
    table.index(i, r) = cands[static_cast<std::size_t>(r)].index;
    table.distance(i, r) = std::sqrt(cands[static_cast<std::size_t>(r)].sqdist);
  }
}

// Node layout and split directions. Splits always halve a node, so the shape depends only
// on n and leaf_size; directions are drawn in depth-first order.
inline RPTree tree_skeleton(Index n, Index m, Index leaf_size, Rng rng, std::vector<Index>& depth) {
  RPTree tree;
  tree.nodes.push_back({-1, -1, 0.0, 0, n});
  depth.assign(1, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> direction(static_cast<std::size_t>(m));
  std::vector<Index> stack{0};
  while (!stack.empty()) {
    const Index id = stack.back();
    stack.pop_back();
    const Index begin = tree.nodes[static_cast<std::size_t>(id)].begin;
    const Index end = tree.nodes[static_cast<std::size_t>(id)].end;
    if (end - begin <= leaf_size) continue;
    double norm = 0.0;
    do {
      norm = 0.0;
      for (auto& v : direction) {
        v = normal(rng);
        norm += v * v;
      }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (auto& v : direction) v /= norm;

    const Index half = (end - begin) / 2;
    const Index left = static_cast<Index>(tree.nodes.size());
    tree.nodes.push_back({-1, -1, 0.0, begin, begin + half});
    tree.nodes.push_back({-1, -1, 0.0, begin + half, end});
    depth.push_back(depth[static_cast<std::size_t>(id)] + 1);
    depth.push_back(depth[static_cast<std::size_t>(id)] + 1);
    auto& node = tree.nodes[static_cast<std::size_t>(id)];
    node.left = left;
    node.right = left + 1;
    if (tree.directions.size() < static_cast<std::size_t>((id + 1) * m)) tree.directions.resize(static_cast<std::size_t>((id + 1) * m), 0.0);
    std::copy(direction.begin(), direction.end(), tree.directions.begin() + id * m);
    stack.push_back(left + 1);
    stack.push_back(left);
  }
  return tree;
}

// Fills in the trees one depth level at a time. Each level streams x once in row blocks and
// projects every point onto its current node's direction in every tree; nodes then split at
// the median of (projection, index).
inline void grow_trees(const RowMatrix& x, std::vector<RPTree>& trees, const std::vector<std::vector<Index>>& depths) {
  const Index n = x.rows();
  const Index m = x.cols();
  const auto n_trees = static_cast<Index>(trees.size());
  constexpr Index kRowBlock = 256;
  std::vector<std::vector<Index>> node_of(trees.size(), std::vector<Index>(static_cast<std::size_t>(n), 0));
  std::vector<std::vector<double>> keys(trees.size(), std::vector<double>(static_cast<std::size_t>(n), 0.0));
  Index max_depth = 0;
  for (const auto& d : depths) max_depth = std::max(max_depth, *std::max_element(d.begin(), d.end()));
  for (auto& tree : trees) {
    tree.items.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) tree.items[static_cast<std::size_t>(i)] = i;
    tree.leaf_of.assign(static_cast<std::size_t>(n), -1);
  }

  for (Index level = 0; level <= max_depth; ++level) {
    const Index blocks = (n + kRowBlock - 1) / kRowBlock;
    parallel_shards(blocks, num_threads(), [&](int, Index first, Index last) {
      std::vector<Index> active;
      for (Index blk = first; blk < last; ++blk) {
        const Index lo = blk * kRowBlock;
        const Index hi = std::min(n, lo + kRowBlock);
        for (Index t = 0; t < n_trees; ++t) {
          const auto& tree = trees[static_cast<std::size_t>(t)];
          const auto& depth = depths[static_cast<std::size_t>(t)];
          const auto& node = node_of[static_cast<std::size_t>(t)];
          auto& key = keys[static_cast<std::size_t>(t)];
          active.clear();
          for (Index i = lo; i < hi; ++i) {
            const Index id = node[static_cast<std::size_t>(i)];
            if (depth[static_cast<std::size_t>(id)] == level && !tree.nodes[static_cast<std::size_t>(id)].leaf()) active.push_back(i);
          }
          auto dir_of = [&](Index i) { return tree.directions.data() + node[static_cast<std::size_t>(i)] * m; };
          std::size_t a = 0;
          // four independent sums at a time; each keeps its own column order
          for (; a + 4 <= active.size(); a += 4) {
            const double* r0 = x.data() + active[a] * m;
            const double* r1 = x.data() + active[a + 1] * m;
            const double* r2 = x.data() + active[a + 2] * m;
            const double* r3 = x.data() + active[a + 3] * m;
            const double* d0 = dir_of(active[a]);
            const double* d1 = dir_of(active[a + 1]);
            const double* d2 = dir_of(active[a + 2]);
            const double* d3 = dir_of(active[a + 3]);
            double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
            for (Index c = 0; c < m; ++c) {
              s0 += r0[c] * d0[c];
              s1 += r1[c] * d1[c];
              s2 += r2[c] * d2[c];
              s3 += r3[c] * d3[c];
            }
            key[static_cast<std::size_t>(active[a])] = s0;
            key[static_cast<std::size_t>(active[a + 1])] = s1;
            key[static_cast<std::size_t>(active[a + 2])] = s2;
            key[static_cast<std::size_t>(active[a + 3])] = s3;
          }
          for (; a < active.size(); ++a) {
            const double* row = x.data() + active[a] * m;
            const double* dir = dir_of(active[a]);
            double dot = 0.0;
            for (Index c = 0; c < m; ++c) dot += row[c] * dir[c];
            key[static_cast<std::size_t>(active[a])] = dot;
          }
        }
      }
    });
    parallel_for(n_trees, [&](Index t) {
      auto& tree = trees[static_cast<std::size_t>(t)];
      const auto& depth = depths[static_cast<std::size_t>(t)];
      auto& node = node_of[static_cast<std::size_t>(t)];
      const auto& key = keys[static_cast<std::size_t>(t)];
      std::vector<Candidate> proj;
      for (Index id = 0; id < static_cast<Index>(tree.nodes.size()); ++id) {
        if (depth[static_cast<std::size_t>(id)] != level) continue;
        auto& nd = tree.nodes[static_cast<std::size_t>(id)];
        if (nd.leaf()) {
          for (Index p = nd.begin; p < nd.end; ++p) tree.leaf_of[static_cast<std::size_t>(tree.items[static_cast<std::size_t>(p)])] = id;
          continue;
        }
        proj.clear();
        for (Index p = nd.begin; p < nd.end; ++p) {
          const Index pt = tree.items[static_cast<std::size_t>(p)];
          proj.push_back({key[static_cast<std::size_t>(pt)], pt});
        }
        // (projection, index) order splits duplicates deterministically and keeps halves balanced
        const Index half = (nd.end - nd.begin) / 2;
        std::nth_element(proj.begin(), proj.begin() + half, proj.end());
        nd.threshold = proj[static_cast<std::size_t>(half)].sqdist;
        for (Index p = 0; p < nd.end - nd.begin; ++p) {
          const Index pt = proj[static_cast<std::size_t>(p)].index;
          tree.items[static_cast<std::size_t>(nd.begin + p)] = pt;
          node[static_cast<std::size_t>(pt)] = p < half ? nd.left : nd.right;
        }
      }
    });
  }
}

}  // namespace detail

// Independent trees, each seeded from its own substream of `seed`.
inline RPForest build_forest(const DataMatrix& x, Index n_trees = kDefaultForestTrees, Index leaf_size = kDefaultLeafSize,
                             std::uint64_t seed = 0) {
  if (x.n() < 2) throw ArgumentError("build_forest needs at least 2 points");
  if (n_trees < 1 || leaf_size < 1) throw ArgumentError("build_forest needs n_trees >= 1 and leaf_size >= 1");
  RPForest forest;
  forest.leaf_size = leaf_size;
  forest.dims = x.m();
  forest.trees.resize(static_cast<std::size_t>(n_trees));
  std::vector<std::vector<Index>> depths(static_cast<std::size_t>(n_trees));
  parallel_for(n_trees, [&](Index t) {
    forest.trees[static_cast<std::size_t>(t)] = detail::tree_skeleton(
        x.n(), x.m(), leaf_size, substream(seed, static_cast<std::uint64_t>(t), stream_tag::kForest), depths[static_cast<std::size_t>(t)]);
  });
  detail::grow_trees(x.values(), forest.trees, depths);
  return forest;
}

// Exact Euclidean k-NN by full scan.
inline NeighborTable exact_knn(const DataMatrix& x, Index k) {
  const Index n = x.n();
  if (k < 1 || k >= n) throw ArgumentError("exact_knn: k = " + std::to_string(k) + " must be in [1, n - 1] with n = " + std::to_string(n));
  NeighborTable table(n, k);
  parallel_shards(n, num_threads(), [&](int, Index begin, Index end) {
    std::vector<detail::Candidate> cands;
    cands.reserve(static_cast<std::size_t>(n));
    for (Index i = begin; i < end; ++i) {
      cands.clear();
      for (Index j = 0; j < n; ++j) {
        if (j != i) cands.push_back({detail::squared_distance(x.values(), i, j), j});
      }
      detail::store_top_k(cands, i, k, table);
    }
  });
  return table;
}

namespace detail {

// Best k candidates per point in (sqdist, index) order, duplicates ignored.
class TopKLists {
 public:
  TopKLists(Index n, Index k) : k_(k), count_(static_cast<std::size_t>(n), 0), best_(static_cast<std::size_t>(n * k)) {}

  Index count(Index i) const { return count_[static_cast<std::size_t>(i)]; }
  Index index(Index i, Index r) const { return best_[static_cast<std::size_t>(i * k_ + r)].index; }

  void offer(Index i, Candidate c) {
    Candidate* list = best_.data() + i * k_;
    Index& filled = count_[static_cast<std::size_t>(i)];
    if (filled == k_ && !(c < list[k_ - 1])) return;
    for (Index r = 0; r < filled; ++r) {
      if (list[r].index == c.index) return;
    }
    Index pos = filled < k_ ? filled++ : k_ - 1;
    while (pos > 0 && c < list[pos - 1]) {
      list[pos] = list[pos - 1];
      --pos;
    }
    list[pos] = c;
  }

  void store(Index i, NeighborTable& table) const {
    const Candidate* list = best_.data() + i * k_;
    for (Index r = 0; r < k_; ++r) {
      table.index(i, r) = list[r].index;
      table.distance(i, r) = std::sqrt(list[r].sqdist);
    }
  }

 private:
  Index k_;
  std::vector<Index> count_;
  std::vector<Candidate> best_;
};

// Exact distances between all pairs sharing a leaf in any tree. Leaf rows are copied into a
// contiguous block so each pair is computed once from cache-resident data.
inline void leaf_union_pass(const RPForest& forest, const RowMatrix& values, TopKLists& lists) {
  const Index m = values.cols();
  for (const auto& tree : forest.trees) {
    std::vector<Index> leaves;
    for (Index id = 0; id < static_cast<Index>(tree.nodes.size()); ++id) {
      if (tree.nodes[static_cast<std::size_t>(id)].leaf()) leaves.push_back(id);
    }
    // leaves of one tree hold disjoint points, so shards never touch the same list
    parallel_shards(static_cast<Index>(leaves.size()), num_threads(), [&](int, Index begin, Index end) {
      std::vector<double> block;
      for (Index l = begin; l < end; ++l) {
        const auto& leaf = tree.nodes[static_cast<std::size_t>(leaves[static_cast<std::size_t>(l)])];
        const Index size = leaf.end - leaf.begin;
        const Index* ids = tree.items.data() + leaf.begin;
        block.resize(static_cast<std::size_t>(size * m));
        for (Index a = 0; a < size; ++a) std::copy_n(values.data() + ids[a] * m, m, block.data() + a * m);
        for (Index a = 0; a < size; ++a) {
          const double* pa = block.data() + a * m;
          for (Index b = a + 1; b < size; ++b) {
            const double* pb = block.data() + b * m;
            double sum = 0.0;
            for (Index c = 0; c < m; ++c) {
              const double diff = pa[c] - pb[c];
              sum += diff * diff;
            }
            lists.offer(ids[a], {sum, ids[b]});
            lists.offer(ids[b], {sum, ids[a]});
          }
        }
      }
    });
  }
}

}  // namespace detail

// Approximate k-NN. Each point starts from exact distances over the union of its leaves
// across all trees, then `refine_rounds` times merges in its neighbors' neighbors from the
// previous round. A point left with fewer than k candidates falls back to a full scan.
inline NeighborTable query_all_knn(const RPForest& forest, const DataMatrix& x, Index k,
                                   Index refine_rounds = kDefaultRefineRounds) {
  const Index n = x.n();
  if (k < 1 || k >= n) throw ArgumentError("query_all_knn: k = " + std::to_string(k) + " must be in [1, n - 1] with n = " + std::to_string(n));
  if (forest.trees.empty() || static_cast<Index>(forest.trees.front().leaf_of.size()) != n) {
    throw ArgumentError("query_all_knn: forest was not built on this data");
  }
  if (refine_rounds < 0) throw ArgumentError("query_all_knn: refine_rounds must be >= 0");
  const RowMatrix& values = x.values();
  NeighborTable table(n, k);

  detail::TopKLists lists(n, k);
  detail::leaf_union_pass(forest, values, lists);
  parallel_shards(n, num_threads(), [&](int, Index begin, Index end) {
    for (Index i = begin; i < end; ++i) {
      if (lists.count(i) >= k) continue;
      for (Index j = 0; j < n; ++j) {
        if (j != i) lists.offer(i, {detail::squared_distance(values, i, j), j});
      }
    }
  });

  for (Index round = 0; round < refine_rounds; ++round) {
    const detail::TopKLists previous = lists;
    // points listing j, ascending
    std::vector<Index> rev_start(static_cast<std::size_t>(n) + 1, 0);
    for (Index i = 0; i < n; ++i) {
      for (Index r = 0; r < k; ++r) ++rev_start[static_cast<std::size_t>(previous.index(i, r)) + 1];
    }
    for (Index j = 0; j < n; ++j) rev_start[static_cast<std::size_t>(j) + 1] += rev_start[static_cast<std::size_t>(j)];
    std::vector<Index> rev(static_cast<std::size_t>(n * k));
    {
      std::vector<Index> fill(rev_start.begin(), rev_start.end() - 1);
      for (Index i = 0; i < n; ++i) {
        for (Index r = 0; r < k; ++r) rev[static_cast<std::size_t>(fill[static_cast<std::size_t>(previous.index(i, r))]++)] = i;
      }
    }
    // every i listing j receives j's neighbors; shards own disjoint ranges of i
    parallel_shards(n, num_threads(), [&](int, Index begin, Index end) {
      const Index m = values.cols();
      std::vector<double> block(static_cast<std::size_t>(k * m));
      for (Index j = 0; j < n; ++j) {
        const auto first = rev.begin() + rev_start[static_cast<std::size_t>(j)];
        const auto last = rev.begin() + rev_start[static_cast<std::size_t>(j) + 1];
        auto lo = std::lower_bound(first, last, begin);
        const auto hi = std::lower_bound(lo, last, end);
        if (lo == hi) continue;
        for (Index s = 0; s < k; ++s) std::copy_n(values.data() + previous.index(j, s) * m, m, block.data() + s * m);
        for (; lo != hi; ++lo) {
          const Index i = *lo;
          const double* pi = values.data() + i * m;
          for (Index s = 0; s < k; ++s) {
            const Index cand = previous.index(j, s);
            if (cand == i) continue;
            const double* pc = block.data() + s * m;
            double sum = 0.0;
            for (Index c = 0; c < m; ++c) {
              const double diff = pi[c] - pc[c];
              sum += diff * diff;
            }
            lists.offer(i, {sum, cand});
          }
        }
      }
    });
  }
  parallel_shards(n, num_threads(), [&](int, Index begin, Index end) {
    for (Index i = begin; i < end; ++i) lists.store(i, table);
  });
  return table;
}

// Mean fraction of the exact neighbor sets recovered by the approximate table.
inline double knn_recall(const NeighborTable& approx, const NeighborTable& exact) {
  if (approx.n() != exact.n() || approx.k() != exact.k()) throw ArgumentError("knn_recall: table shapes differ");
  if (approx.n() == 0) return 1.0;
  std::uint64_t hits = 0;
  std::vector<Index> truth(static_cast<std::size_t>(exact.k()));
  for (Index i = 0; i < exact.n(); ++i) {
    for (Index r = 0; r < exact.k(); ++r) truth[static_cast<std::size_t>(r)] = exact.index(i, r);
    std::sort(truth.begin(), truth.end());
    for (Index r = 0; r < approx.k(); ++r) hits += std::binary_search(truth.begin(), truth.end(), approx.index(i, r)) ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(exact.n() * exact.k());
}

}  // namespace trimap
