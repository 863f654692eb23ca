#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "envdebias/errors.hpp"
#include "envdebias/graph.hpp"
#include "support.hpp"

namespace envdebias {
namespace {

PropagationGraph graph_with(int n, std::vector<Edge> edges) {
  PropagationGraph g;
  g.id = "t";
  g.features = Tensor2D::Ones(n, 2);
  g.edges = std::move(edges);
  return g;
}

TEST(NormalizeAdjacency, SingleNodeIsOne) {
  const auto adj = normalize_adjacency(graph_with(1, {}));
  ASSERT_EQ(adj.matrix.rows(), 1);
  EXPECT_DOUBLE_EQ(adj.matrix(0, 0), 1.0);
}

TEST(NormalizeAdjacency, SingleEdgeIsAllHalves) {
  const auto adj = normalize_adjacency(graph_with(2, {{0, 1}}));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) EXPECT_DOUBLE_EQ(adj.matrix(i, j), 0.5);
}

TEST(NormalizeAdjacency, StarByHand) {
  // Hub degree 4 (3 leaves + self), leaves degree 2.
  const auto adj = normalize_adjacency(graph_with(4, {{0, 1}, {0, 2}, {0, 3}}));
  EXPECT_NEAR(adj.matrix(0, 0), 0.25, 1e-15);
  EXPECT_NEAR(adj.matrix(0, 1), 1.0 / std::sqrt(8.0), 1e-15);
  EXPECT_NEAR(adj.matrix(1, 1), 0.5, 1e-15);
  EXPECT_EQ(adj.matrix(1, 2), 0.0);
}

TEST(NormalizeAdjacency, MatchesDenseOracleOnRandomGraphs) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 8);
    const auto g = trial % 2 ? testing::random_tree(rng, n, 3) : testing::random_digraph(rng, n, 3, 0.3);
    const Tensor2D got = normalize_adjacency(g).matrix;
    const Tensor2D want = testing::dense_normalized_adjacency(g);
    ASSERT_LT((got - want).cwiseAbs().maxCoeff(), 1e-12) << "trial " << trial;
  }
}

TEST(NormalizeAdjacency, InvariantsHold) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const auto g = testing::random_digraph(rng, 2 + static_cast<int>(rng() % 7), 2, 0.4);
    const Tensor2D a = normalize_adjacency(g).matrix;
    EXPECT_TRUE(a.isApprox(a.transpose(), 0.0));
    EXPECT_GE(a.minCoeff(), 0.0);
    EXPECT_GT(a.diagonal().minCoeff(), 0.0);
  }
}

TEST(NormalizeAdjacency, IgnoresEdgeDirection) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    auto g = testing::random_tree(rng, 2 + static_cast<int>(rng() % 7), 2);
    const Tensor2D before = normalize_adjacency(g).matrix;
    const std::size_t flip = rng() % g.edges.size();
    std::swap(g.edges[flip].parent, g.edges[flip].child);
    EXPECT_EQ(normalize_adjacency(g).matrix, before);
  }
}

TEST(Validate, RejectsBrokenGraphs) {
  EXPECT_THROW(validate(graph_with(2, {{0, 5}})), DataError);
  EXPECT_THROW(validate(graph_with(2, {{1, 1}})), DataError);
  EXPECT_THROW(validate(graph_with(2, {{0, 1}, {0, 1}})), DataError);
  EXPECT_NO_THROW(validate(graph_with(2, {{0, 1}, {1, 0}})));

  auto bad_label = graph_with(1, {});
  bad_label.label = 2;
  EXPECT_THROW(validate(bad_label), DataError);
  auto bad_root = graph_with(1, {});
  bad_root.root = 1;
  EXPECT_THROW(validate(bad_root), DataError);
  auto nan = graph_with(1, {});
  nan.features(0, 0) = std::nan("");
  EXPECT_THROW(validate(nan), DataError);
  EXPECT_THROW(validate(graph_with(0, {})), DataError);
}

TEST(Validate, EndpointMessageNamesTheProblem) {
  try {
    validate(graph_with(2, {{0, 5}}));
    FAIL();
  } catch (const DataError& ex) {
    EXPECT_NE(std::string(ex.what()).find("edge endpoint out of range"), std::string::npos);
  }
}

TEST(Validate, DatasetFeatureDimMustAgree) {
  Dataset ds;
  ds.graphs.push_back(graph_with(1, {}));
  auto other = graph_with(1, {});
  other.features = Tensor2D::Ones(1, 3);
  ds.graphs.push_back(other);
  EXPECT_THROW(validate(ds), DataError);
}

Dataset balanced(int per_class) {
  Dataset ds;
  ds.feature_dim = 2;
  for (int i = 0; i < 2 * per_class; ++i) {
    auto g = graph_with(1, {});
    g.id = "g" + std::to_string(i);
    g.label = i % 2;
    ds.graphs.push_back(g);
  }
  return ds;
}

TEST(Split, ZeroFractionKeepsEverything) {
  const auto ds = balanced(5);
  const auto [train, val] = split_dataset(ds, 0.0, 1);
  EXPECT_EQ(train, ds);
  EXPECT_TRUE(val.empty());
}

TEST(Split, StratifiedCounts) {
  const auto [train, val] = split_dataset(balanced(5), 0.2, 3);
  EXPECT_EQ(train.size(), 8u);
  ASSERT_EQ(val.size(), 2u);
  EXPECT_NE(val.graphs[0].label, val.graphs[1].label);
}

TEST(Split, DeterministicAndDisjoint) {
  const auto ds = balanced(20);
  const auto a = split_indices(ds, 0.3, 99);
  const auto b = split_indices(ds, 0.3, 99);
  EXPECT_EQ(a, b);
  std::set<std::size_t> all(a.first.begin(), a.first.end());
  for (std::size_t i : a.second) EXPECT_TRUE(all.insert(i).second);
  EXPECT_EQ(all.size(), ds.size());
  EXPECT_NE(split_indices(ds, 0.3, 100), a);
}

TEST(Split, RejectsEmptyTrainAndBadFraction) {
  EXPECT_THROW(split_dataset(balanced(1), 0.9, 0), ConfigError);
  EXPECT_THROW(split_dataset(balanced(2), 1.0, 0), ConfigError);
  EXPECT_THROW(split_dataset(Dataset{}, 0.1, 0), DataError);
}

}  // namespace
}  // namespace envdebias
