#include "ebcrl/graph.hpp"

#include <algorithm>
#include <queue>
#include <string>

#include "ebcrl/errors.hpp"

namespace ebcrl {

const std::vector<int>& Dag::parents(int j) const {
  if (j < 0 || j >= n_nodes_) throw IndexError("node " + std::to_string(j) + " out of range");
  return parents_[static_cast<std::size_t>(j)];
}

const std::vector<int>& Dag::children(int j) const {
  if (j < 0 || j >= n_nodes_) throw IndexError("node " + std::to_string(j) + " out of range");
  return children_[static_cast<std::size_t>(j)];
}

bool Dag::has_edge(int k, int j) const {
  return std::binary_search(edges_.begin(), edges_.end(), Edge{k, j});
}

Dag build_dag(int n_nodes, const std::vector<Edge>& edges) {
  if (n_nodes < 1) throw ConfigError("a DAG needs at least one node");
  Dag dag;
  dag.n_nodes_ = n_nodes;
  dag.edges_ = edges;
  std::sort(dag.edges_.begin(), dag.edges_.end());
  dag.edges_.erase(std::unique(dag.edges_.begin(), dag.edges_.end()), dag.edges_.end());

  const auto n = static_cast<std::size_t>(n_nodes);
  dag.parents_.assign(n, {});
  dag.children_.assign(n, {});
  for (const auto& [k, j] : dag.edges_) {
    if (k < 0 || k >= n_nodes || j < 0 || j >= n_nodes) {
      throw IndexError("edge (" + std::to_string(k + 1) + ", " + std::to_string(j + 1) +
                       ") references a node outside 1.." + std::to_string(n_nodes));
    }
    if (k == j) throw ConfigError("self-loop on node " + std::to_string(k + 1));
    dag.parents_[static_cast<std::size_t>(j)].push_back(k);
    dag.children_[static_cast<std::size_t>(k)].push_back(j);
  }
  for (auto& p : dag.parents_) std::sort(p.begin(), p.end());
  for (auto& c : dag.children_) std::sort(c.begin(), c.end());

  // Kahn with a min-heap so ties resolve to the smallest index.
  std::vector<int> indegree(n);
  for (std::size_t j = 0; j < n; ++j) indegree[j] = static_cast<int>(dag.parents_[j].size());
  std::priority_queue<int, std::vector<int>, std::greater<>> ready;
  for (int j = 0; j < n_nodes; ++j)
    if (indegree[static_cast<std::size_t>(j)] == 0) ready.push(j);
  while (!ready.empty()) {
    const int k = ready.top();
    ready.pop();
    dag.topo_order_.push_back(k);
    for (int j : dag.children_[static_cast<std::size_t>(k)])
      if (--indegree[static_cast<std::size_t>(j)] == 0) ready.push(j);
  }
  if (dag.topo_order_.size() != n) throw CycleError("edge set contains a directed cycle");
  return dag;
}

Dag chain_dag(int n_nodes) {
  std::vector<Edge> edges;
  for (int j = 1; j < n_nodes; ++j) edges.emplace_back(j - 1, j);
  return build_dag(n_nodes, edges);
}

Dag empty_dag(int n_nodes) { return build_dag(n_nodes, {}); }

Dag complete_dag(const std::vector<int>& order) {
  std::vector<Edge> edges;
  for (std::size_t a = 0; a < order.size(); ++a)
    for (std::size_t b = a + 1; b < order.size(); ++b) edges.emplace_back(order[a], order[b]);
  return build_dag(static_cast<int>(order.size()), edges);
}

Dag apply_variant(const Dag& dag, const GraphVariant& variant) {
  switch (variant.kind) {
    case GraphVariant::Kind::TrueDag:
    case GraphVariant::Kind::Pooled:
      return dag;
    case GraphVariant::Kind::Empty:
      return empty_dag(dag.n_nodes());
    case GraphVariant::Kind::CompleteFromOrder: {
      const std::vector<int> order = variant.order.empty() ? dag.topo_order() : variant.order;
      const auto n = static_cast<std::size_t>(dag.n_nodes());
      if (order.size() != n) throw ConfigError("causal order must list every node exactly once");
      std::vector<int> position(n, -1);
      for (std::size_t p = 0; p < n; ++p) {
        const int j = order[p];
        if (j < 0 || j >= dag.n_nodes() || position[static_cast<std::size_t>(j)] != -1)
          throw ConfigError("causal order is not a permutation of the nodes");
        position[static_cast<std::size_t>(j)] = static_cast<int>(p);
      }
      for (const auto& [k, j] : dag.edges())
        if (position[static_cast<std::size_t>(k)] > position[static_cast<std::size_t>(j)])
          throw ConfigError("causal order contradicts edge " + std::to_string(k + 1) + " -> " +
                            std::to_string(j + 1));
      return complete_dag(order);
    }
  }
  throw ConfigError("unknown graph variant");
}

}  // namespace ebcrl
