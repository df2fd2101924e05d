#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace ebcrl {

using Edge = std::pair<int, int>;  // (k, j) means k -> j, 0-based

/// Immutable directed acyclic graph over nodes 0..n-1.
///
/// Construction validates indices and acyclicity and caches a deterministic
/// topological order (Kahn's algorithm, smallest ready index first) together
/// with sorted parent and child lists.
class Dag {
 public:
  Dag() = default;

  int n_nodes() const noexcept { return n_nodes_; }
  std::size_t n_edges() const noexcept { return edges_.size(); }
  /// Sorted, duplicate-free edge list.
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::vector<int>& topo_order() const noexcept { return topo_order_; }
  const std::vector<int>& parents(int j) const;
  const std::vector<int>& children(int j) const;
  bool has_edge(int k, int j) const;

  friend bool operator==(const Dag& a, const Dag& b) {
    return a.n_nodes_ == b.n_nodes_ && a.edges_ == b.edges_;
  }

 private:
  friend Dag build_dag(int n_nodes, const std::vector<Edge>& edges);

  int n_nodes_ = 0;
  std::vector<Edge> edges_;
  std::vector<int> topo_order_;
  std::vector<std::vector<int>> parents_;
  std::vector<std::vector<int>> children_;
};

/// Throws ConfigError for n_nodes < 1 or self-loops, IndexError for an
/// out-of-range endpoint and CycleError when no topological order exists.
Dag build_dag(int n_nodes, const std::vector<Edge>& edges);

/// Directed path 0 -> 1 -> ... -> n-1.
Dag chain_dag(int n_nodes);
Dag empty_dag(int n_nodes);
/// Every pair ordered by `order` gets an edge from the earlier node.
Dag complete_dag(const std::vector<int>& order);

/// Which graph the score model conditions on.
struct GraphVariant {
  enum class Kind { TrueDag, Empty, CompleteFromOrder, Pooled };
  Kind kind = Kind::TrueDag;
  /// Causal order for CompleteFromOrder; empty means the DAG's topo_order.
  std::vector<int> order;

  static GraphVariant true_dag() { return {Kind::TrueDag, {}}; }
  static GraphVariant empty() { return {Kind::Empty, {}}; }
  static GraphVariant complete(std::vector<int> order = {}) {
    return {Kind::CompleteFromOrder, std::move(order)};
  }
  /// Pooled keeps the graph; target zeroing happens in the EM driver.
  static GraphVariant pooled() { return {Kind::Pooled, {}}; }
};

/// The DAG the score module conditions on. For CompleteFromOrder the order
/// must be a permutation consistent with `dag` (ConfigError otherwise).
Dag apply_variant(const Dag& dag, const GraphVariant& variant);

}  // namespace ebcrl
