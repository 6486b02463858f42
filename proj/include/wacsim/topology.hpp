#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace wacsim {

using NodeId = std::uint32_t;

/// Raised on any contract violation (bad node ids, malformed input, broken
/// config bounds). The message is the stable error string checked by tests.
struct SimError : std::runtime_error {
  explicit SimError(const std::string& what) : std::runtime_error(what) {}
};

/// Undirected communication graph. Symmetric, irreflexive, ids never reused
/// within a run (a removed id stays burned so removal and addition remain
/// distinguishable in traces).
class Topology {
 public:
  Topology() = default;

  bool has_node(NodeId u) const { return adj_.count(u) != 0; }
  std::size_t node_count() const { return adj_.size(); }
  std::size_t edge_count() const;

  std::vector<NodeId> nodes() const;
  std::vector<std::pair<NodeId, NodeId>> edges() const;

  const std::set<NodeId>& neighbors(NodeId u) const;

  /// All nodes at shortest-path distance in [1, k] of u. k in {1,2,3}.
  std::set<NodeId> distance_neighborhood(NodeId u, int k) const;

  void add_node(NodeId u, const std::set<NodeId>& attach_to = {});
  void remove_node(NodeId u);
  void add_edge(NodeId u, NodeId v);

  std::size_t degree(NodeId u) const { return neighbors(u).size(); }
  std::size_t max_degree() const;
  NodeId max_node_id() const;

  /// Serializes as "node <id>" / "edge <u> <v>" lines.
  std::string dump() const;

  static Topology grid(std::uint32_t w, std::uint32_t h);
  static Topology path(std::uint32_t n) { return grid(n, 1); }
  /// n points uniform in the unit square, edge iff Euclidean distance <= radius.
  static Topology random_geometric(std::uint32_t n, double radius, std::uint64_t seed);
  /// Parses the dump() form; validates symmetry and rejects self-edges.
  static Topology from_text(const std::string& text);
  static Topology from_edges(std::uint32_t n_nodes,
                             const std::vector<std::pair<NodeId, NodeId>>& edges);

 private:
  void require_node(NodeId u) const;

  std::map<NodeId, std::set<NodeId>> adj_;
  std::set<NodeId> retired_;  // ids that once existed; never reassigned
};

}  // namespace wacsim
