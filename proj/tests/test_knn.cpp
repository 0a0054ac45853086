#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "oracles.hpp"
#include "trimap/data_io.hpp"
#include "trimap/knn.hpp"

namespace trimap {
namespace {

DataMatrix line_points(std::initializer_list<double> xs) {
  RowMatrix v(static_cast<Index>(xs.size()), 1);
  Index i = 0;
  for (double x : xs) v(i++, 0) = x;
  return DataMatrix(v);
}

void expect_well_formed(const NeighborTable& t) {
  for (Index i = 0; i < t.n(); ++i) {
    std::set<Index> seen;
    for (Index r = 0; r < t.k(); ++r) {
      EXPECT_NE(t.index(i, r), i);
      EXPECT_GE(t.index(i, r), 0);
      EXPECT_GE(t.distance(i, r), 0.0);
      if (r > 0) {
        EXPECT_LE(t.distance(i, r - 1), t.distance(i, r));
      }
      seen.insert(t.index(i, r));
    }
    EXPECT_EQ(static_cast<Index>(seen.size()), t.k());
  }
}

TEST(BuildForest, TwoPointsFormOneLeaf) {
  const auto forest = build_forest(line_points({0.0, 1.0}), 4, 2, 1);
  ASSERT_EQ(forest.trees.size(), 4u);
  for (const auto& tree : forest.trees) {
    ASSERT_EQ(tree.nodes.size(), 1u);
    EXPECT_TRUE(tree.nodes[0].leaf());
    EXPECT_EQ(tree.items.size(), 2u);
  }
}

TEST(BuildForest, EveryPointInExactlyOneLeafPerTree) {
  const DataMatrix x(oracle::random_matrix(1000, 5, 1));
  const auto forest = build_forest(x, 6, 16, 3);
  for (const auto& tree : forest.trees) {
    std::vector<int> count(1000, 0);
    for (const auto& node : tree.nodes) {
      if (!node.leaf()) continue;
      EXPECT_LE(node.end - node.begin, 16);
      for (Index p = node.begin; p < node.end; ++p) ++count[static_cast<std::size_t>(tree.items[static_cast<std::size_t>(p)])];
    }
    for (Index i = 0; i < 1000; ++i) {
      EXPECT_EQ(count[static_cast<std::size_t>(i)], 1);
      const auto& leaf = tree.nodes[static_cast<std::size_t>(tree.leaf_of[static_cast<std::size_t>(i)])];
      EXPECT_TRUE(leaf.leaf());
    }
  }
}

TEST(BuildForest, SplitsHalveNodesAlongTheStoredDirection) {
  const Index m = 7;
  const DataMatrix x(oracle::random_matrix(1500, m, 11));
  const auto forest = build_forest(x, 3, 20, 4);
  for (const auto& tree : forest.trees) {
    for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
      const auto& node = tree.nodes[id];
      if (node.leaf()) continue;
      const auto& left = tree.nodes[static_cast<std::size_t>(node.left)];
      const auto& right = tree.nodes[static_cast<std::size_t>(node.right)];
      EXPECT_EQ(left.begin, node.begin);
      EXPECT_EQ(left.end, right.begin);
      EXPECT_EQ(right.end, node.end);
      EXPECT_EQ(left.end - left.begin, (node.end - node.begin) / 2);
      long double norm = 0.0L;
      for (Index c = 0; c < m; ++c) norm += std::pow(static_cast<long double>(tree.directions[id * m + c]), 2);
      EXPECT_NEAR(static_cast<double>(norm), 1.0, 1e-12);
      auto projection = [&](Index p) {
        const Index pt = tree.items[static_cast<std::size_t>(p)];
        long double dot = 0.0L;
        for (Index c = 0; c < m; ++c) dot += static_cast<long double>(x(pt, c)) * tree.directions[id * m + c];
        return static_cast<double>(dot);
      };
      for (Index p = left.begin; p < left.end; ++p) EXPECT_LE(projection(p), node.threshold + 1e-12);
      for (Index p = right.begin; p < right.end; ++p) EXPECT_GE(projection(p), node.threshold - 1e-12);
    }
  }
}

TEST(BuildForest, DeterministicPerSeed) {
  const DataMatrix x(oracle::random_matrix(500, 4, 2));
  EXPECT_EQ(build_forest(x, 5, 10, 7), build_forest(x, 5, 10, 7));
  EXPECT_NE(build_forest(x, 5, 10, 7), build_forest(x, 5, 10, 8));
}

TEST(BuildForest, DuplicateHeavyDataTerminates) {
  const DataMatrix x(RowMatrix::Ones(300, 3));
  const auto forest = build_forest(x, 2, 8, 1);
  for (const auto& tree : forest.trees) {
    for (const auto& node : tree.nodes) {
      if (node.leaf()) {
        EXPECT_LE(node.end - node.begin, 8);
      }
    }
  }
}

TEST(QueryAllKnn, CollinearHandChecked) {
  const DataMatrix x = line_points({0.0, 1.0, 3.0});
  for (const auto& table : {exact_knn(x, 1), query_all_knn(build_forest(x, 3, 2, 1), x, 1)}) {
    EXPECT_EQ(table.index(0, 0), 1);
    EXPECT_EQ(table.index(1, 0), 0);
    EXPECT_EQ(table.index(2, 0), 1);
    EXPECT_DOUBLE_EQ(table.distance(2, 0), 2.0);
  }
}

TEST(QueryAllKnn, DuplicatedPointsAreMutualAtDistanceZero) {
  RowMatrix v(4, 2);
  v << 0, 0, 5, 5, 0, 0, 9, -3;
  const DataMatrix x(v);
  const auto table = query_all_knn(build_forest(x, 2, 2, 4), x, 1);
  EXPECT_EQ(table.index(0, 0), 2);
  EXPECT_EQ(table.index(2, 0), 0);
  EXPECT_EQ(table.distance(0, 0), 0.0);
  EXPECT_EQ(table.distance(2, 0), 0.0);
}

TEST(ExactKnn, UnitSquareCorners) {
  RowMatrix v(4, 2);
  v << 0, 0, 1, 0, 1, 1, 0, 1;
  const auto table = exact_knn(DataMatrix(v), 2);
  const std::vector<std::set<Index>> adjacent = {{1, 3}, {0, 2}, {1, 3}, {0, 2}};
  for (Index i = 0; i < 4; ++i) {
    EXPECT_EQ((std::set<Index>{table.index(i, 0), table.index(i, 1)}), adjacent[static_cast<std::size_t>(i)]);
    EXPECT_DOUBLE_EQ(table.distance(i, 1), 1.0);
    // equal distances: smaller index first
    EXPECT_LT(table.index(i, 0), table.index(i, 1));
  }
}

TEST(ExactKnn, TwoPointsAndSortedRows) {
  const auto two = exact_knn(line_points({2.0, -1.0}), 1);
  EXPECT_EQ(two.index(0, 0), 1);
  EXPECT_EQ(two.index(1, 0), 0);
  const DataMatrix x(oracle::random_matrix(500, 10, 3));
  for (Index k : {1, 7, 30}) expect_well_formed(exact_knn(x, k));
}

TEST(Knn, RejectsKAtLeastN) {
  const DataMatrix x = line_points({0.0, 1.0, 2.0});
  EXPECT_THROW(exact_knn(x, 3), ArgumentError);
  EXPECT_THROW(query_all_knn(build_forest(x, 1, 2, 0), x, 3), ArgumentError);
  EXPECT_THROW(exact_knn(x, 0), ArgumentError);
}

TEST(QueryAllKnn, NeverReportsCloserThanExact) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const DataMatrix x(oracle::random_matrix(800, 6, 40 + seed));
    const auto forest = build_forest(x, 3, 16, seed);
    for (Index k : {1, 5, 15}) {
      const auto approx = query_all_knn(forest, x, k);
      const auto exact = exact_knn(x, k);
      expect_well_formed(approx);
      for (Index i = 0; i < x.n(); ++i) {
        for (Index r = 0; r < k; ++r) EXPECT_GE(approx.distance(i, r), exact.distance(i, r));
      }
    }
  }
}

// Top k of a candidate set by (distance, index), distances in extended precision.
std::vector<Index> best_k(const DataMatrix& x, Index i, const std::set<Index>& candidates, Index k) {
  std::vector<std::pair<long double, Index>> scored;
  for (Index j : candidates) {
    long double d = 0.0L;
    for (Index c = 0; c < x.m(); ++c) d += std::pow(static_cast<long double>(x(i, c)) - x(j, c), 2);
    scored.emplace_back(d, j);
  }
  std::sort(scored.begin(), scored.end());
  std::vector<Index> out;
  for (Index r = 0; r < k; ++r) out.push_back(scored[static_cast<std::size_t>(r)].second);
  return out;
}

TEST(QueryAllKnn, MatchesLeafUnionThenNeighborsOfNeighbors) {
  const DataMatrix x(oracle::random_matrix(700, 5, 21));
  const Index k = 8;
  const auto forest = build_forest(x, 4, 12, 6);
  std::vector<std::vector<Index>> reference(700);
  for (Index i = 0; i < 700; ++i) {
    std::set<Index> pool;
    for (const auto& tree : forest.trees) {
      const auto& leaf = tree.nodes[static_cast<std::size_t>(tree.leaf_of[static_cast<std::size_t>(i)])];
      for (Index p = leaf.begin; p < leaf.end; ++p) pool.insert(tree.items[static_cast<std::size_t>(p)]);
    }
    pool.erase(i);
    reference[static_cast<std::size_t>(i)] = best_k(x, i, pool, k);
  }
  for (Index rounds = 0; rounds <= 2; ++rounds) {
    if (rounds > 0) {
      auto next = reference;
      for (Index i = 0; i < 700; ++i) {
        std::set<Index> pool;
        for (Index j : reference[static_cast<std::size_t>(i)]) {
          pool.insert(j);
          pool.insert(reference[static_cast<std::size_t>(j)].begin(), reference[static_cast<std::size_t>(j)].end());
        }
        pool.erase(i);
        next[static_cast<std::size_t>(i)] = best_k(x, i, pool, k);
      }
      reference = next;
    }
    const auto table = query_all_knn(forest, x, k, rounds);
    for (Index i = 0; i < 700; ++i) {
      for (Index r = 0; r < k; ++r) {
        ASSERT_EQ(table.index(i, r), reference[static_cast<std::size_t>(i)][static_cast<std::size_t>(r)]) << "round " << rounds << " point " << i;
      }
    }
  }
}

TEST(QueryAllKnn, SmallLeavesTriggerExpansionAndStillReturnK) {
  const DataMatrix x(oracle::random_matrix(300, 3, 5));
  // one tree with 4-point leaves cannot supply 10 candidates on its own
  const auto approx = query_all_knn(build_forest(x, 1, 4, 2), x, 10);
  expect_well_formed(approx);
  EXPECT_GT(knn_recall(approx, exact_knn(x, 10)), 0.5);
}

TEST(QueryAllKnn, RecallOnSCurve) {
  const auto data = make_s_curve(5000, 1).data;
  const auto approx = query_all_knn(build_forest(data, kDefaultForestTrees, kDefaultLeafSize, 1), data, 12);
  EXPECT_GE(knn_recall(approx, exact_knn(data, 12)), 0.95);
}

TEST(QueryAllKnn, RecallOnGaussianBlob) {
  const auto data = make_gaussian_blobs(10000, 10, 1, 0.0, 2).data;
  const auto approx = query_all_knn(build_forest(data, kDefaultForestTrees, kDefaultLeafSize, 2), data, 10);
  EXPECT_GE(knn_recall(approx, exact_knn(data, 10)), 0.95);
}

TEST(QueryAllKnn, IndependentOfThreadCount) {
  const DataMatrix x(oracle::random_matrix(2000, 8, 6));
  set_num_threads(1);
  const auto forest1 = build_forest(x, 8, 32, 9);
  const auto one = query_all_knn(forest1, x, 10);
  set_num_threads(3);
  const auto forest3 = build_forest(x, 8, 32, 9);
  const auto three = query_all_knn(forest3, x, 10);
  set_num_threads(0);
  EXPECT_EQ(forest1, forest3);
  EXPECT_EQ(one, three);
}

}  // namespace
}  // namespace trimap
