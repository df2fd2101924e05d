#include <gtest/gtest.h>

#include <algorithm>

#include "ebcrl/errors.hpp"
#include "ebcrl/graph.hpp"

using namespace ebcrl;

TEST(Graph, ChainFromOneBasedEdges) {
  // (1,2),(2,3),(3,4) shifted to 0-based
  const Dag d = build_dag(4, {{0, 1}, {1, 2}, {2, 3}});
  EXPECT_EQ(d.topo_order(), (std::vector<int>{0, 1, 2, 3}));
  EXPECT_EQ(d, chain_dag(4));
  EXPECT_EQ(d.n_edges(), 3u);
}

TEST(Graph, EmptyGraphHasNoParents) {
  const Dag d = build_dag(3, {});
  for (int j = 0; j < 3; ++j) EXPECT_TRUE(d.parents(j).empty());
}

TEST(Graph, TwoCycleRejected) { EXPECT_THROW(build_dag(2, {{0, 1}, {1, 0}}), CycleError); }

TEST(Graph, LongerCycleRejected) { EXPECT_THROW(build_dag(3, {{0, 1}, {1, 2}, {2, 0}}), CycleError); }

TEST(Graph, InvalidInputs) {
  EXPECT_THROW(build_dag(0, {}), ConfigError);
  EXPECT_THROW(build_dag(2, {{0, 0}}), ConfigError);
  EXPECT_THROW(build_dag(2, {{0, 2}}), IndexError);
  EXPECT_THROW(build_dag(2, {{-1, 1}}), IndexError);
}

TEST(Graph, DuplicateEdgesCollapse) {
  const Dag d = build_dag(2, {{0, 1}, {0, 1}});
  EXPECT_EQ(d.n_edges(), 1u);
}

TEST(Graph, ParentsOnChain) {
  const Dag d = chain_dag(4);
  EXPECT_EQ(d.parents(2), (std::vector<int>{1}));
  EXPECT_TRUE(d.parents(0).empty());
  EXPECT_THROW(d.parents(4), IndexError);
}

TEST(Graph, CompleteFromOrderParents) {
  const Dag d = complete_dag({0, 1, 2, 3});
  EXPECT_EQ(d.parents(3), (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(d.n_edges(), 6u);
}

TEST(Graph, ParentChildConsistency) {
  const Dag d = build_dag(5, {{0, 2}, {1, 2}, {2, 4}, {3, 4}, {0, 3}});
  for (int j = 0; j < 5; ++j) {
    for (int k : d.parents(j)) {
      const auto& ch = d.children(k);
      EXPECT_NE(std::find(ch.begin(), ch.end(), j), ch.end());
      EXPECT_TRUE(d.has_edge(k, j));
    }
  }
  std::vector<int> pos(5);
  for (int i = 0; i < 5; ++i) pos[static_cast<std::size_t>(d.topo_order()[static_cast<std::size_t>(i)])] = i;
  for (const auto& [k, j] : d.edges()) EXPECT_LT(pos[static_cast<std::size_t>(k)], pos[static_cast<std::size_t>(j)]);
}

TEST(Graph, TopoOrderDeterministicSmallestFirst) {
  const Dag d = build_dag(4, {{3, 0}, {2, 1}});
  EXPECT_EQ(d.topo_order(), (std::vector<int>{2, 1, 3, 0}));
}

TEST(Graph, ApplyVariant) {
  const Dag c = chain_dag(4);
  EXPECT_EQ(apply_variant(c, GraphVariant::true_dag()), c);
  const Dag e = apply_variant(c, GraphVariant::empty());
  EXPECT_EQ(e.n_nodes(), 4);
  EXPECT_EQ(e.n_edges(), 0u);
  const Dag full = apply_variant(c, GraphVariant::complete({0, 1, 2, 3}));
  EXPECT_EQ(full.n_edges(), 6u);
  EXPECT_EQ(apply_variant(c, GraphVariant::complete()), full);
  EXPECT_EQ(apply_variant(c, GraphVariant::pooled()), c);
}

TEST(Graph, CompleteOrderMustAgreeWithDag) {
  EXPECT_THROW(apply_variant(chain_dag(3), GraphVariant::complete({2, 1, 0})), ConfigError);
  EXPECT_THROW(apply_variant(chain_dag(3), GraphVariant::complete({0, 1})), ConfigError);
  EXPECT_THROW(apply_variant(chain_dag(3), GraphVariant::complete({0, 0, 1})), ConfigError);
}
