#include "wacsim/topology.hpp"

#include <cmath>
#include <deque>
#include <random>
#include <sstream>

namespace wacsim {

void Topology::require_node(NodeId u) const {
  if (!has_node(u)) throw SimError("no such node");
}

std::size_t Topology::edge_count() const {
  std::size_t twice = 0;
  for (const auto& [u, nbrs] : adj_) twice += nbrs.size();
  return twice / 2;
}

std::vector<NodeId> Topology::nodes() const {
  std::vector<NodeId> out;
  out.reserve(adj_.size());
  for (const auto& [u, nbrs] : adj_) out.push_back(u);
  return out;
}

std::vector<std::pair<NodeId, NodeId>> Topology::edges() const {
  std::vector<std::pair<NodeId, NodeId>> out;
  for (const auto& [u, nbrs] : adj_)
    for (NodeId v : nbrs)
      if (u < v) out.emplace_back(u, v);
  return out;
}

const std::set<NodeId>& Topology::neighbors(NodeId u) const {
  require_node(u);
  return adj_.at(u);
}

std::set<NodeId> Topology::distance_neighborhood(NodeId u, int k) const {
  require_node(u);
  if (k < 1 || k > 3) throw SimError("distance out of range");
  std::set<NodeId> seen{u};
  std::deque<std::pair<NodeId, int>> frontier{{u, 0}};
  std::set<NodeId> out;
  while (!frontier.empty()) {
    auto [v, d] = frontier.front();
    frontier.pop_front();
    if (d == k) continue;
    for (NodeId w : adj_.at(v)) {
      if (seen.insert(w).second) {
        out.insert(w);
        frontier.emplace_back(w, d + 1);
      }
    }
  }
  return out;
}

void Topology::add_node(NodeId u, const std::set<NodeId>& attach_to) {
  if (has_node(u) || retired_.count(u)) throw SimError("id in use");
  for (NodeId v : attach_to) require_node(v);
  adj_[u] = {};
  retired_.insert(u);
  for (NodeId v : attach_to) {
    adj_[u].insert(v);
    adj_[v].insert(u);
  }
}

void Topology::remove_node(NodeId u) {
  require_node(u);
  for (NodeId v : adj_.at(u)) adj_.at(v).erase(u);
  adj_.erase(u);
}

void Topology::add_edge(NodeId u, NodeId v) {
  if (u == v) throw SimError("invalid edge");
  require_node(u);
  require_node(v);
  adj_[u].insert(v);
  adj_[v].insert(u);
}

std::size_t Topology::max_degree() const {
  std::size_t d = 0;
  for (const auto& [u, nbrs] : adj_) d = std::max(d, nbrs.size());
  return d;
}

NodeId Topology::max_node_id() const {
  NodeId m = 0;
  for (const auto& [u, nbrs] : adj_) m = std::max(m, u);
  return m;
}

std::string Topology::dump() const {
  std::ostringstream os;
  for (const auto& [u, nbrs] : adj_) os << "node " << u << "\n";
  for (const auto& [u, v] : edges()) os << "edge " << u << " " << v << "\n";
  return os.str();
}

Topology Topology::grid(std::uint32_t w, std::uint32_t h) {
  if (w == 0 || h == 0) throw SimError("grid dimensions must be positive");
  Topology t;
  auto id = [w](std::uint32_t x, std::uint32_t y) { return NodeId(y * w + x); };
  for (std::uint32_t y = 0; y < h; ++y)
    for (std::uint32_t x = 0; x < w; ++x) t.add_node(id(x, y));
  for (std::uint32_t y = 0; y < h; ++y)
    for (std::uint32_t x = 0; x < w; ++x) {
      if (x + 1 < w) t.add_edge(id(x, y), id(x + 1, y));
      if (y + 1 < h) t.add_edge(id(x, y), id(x, y + 1));
    }
  return t;
}

Topology Topology::random_geometric(std::uint32_t n, double radius, std::uint64_t seed) {
  if (n == 0 || radius <= 0.0) throw SimError("bad geometric parameters");
  std::mt19937_64 rng(seed);
  // 53-bit mantissa draw; stable across platforms, unlike the stdlib
  // distributions.
  auto unit = [&rng]() { return double(rng() >> 11) * 0x1.0p-53; };
  std::vector<std::pair<double, double>> pos(n);
  for (auto& p : pos) {
    p.first = unit();
    p.second = unit();
  }
  Topology t;
  for (std::uint32_t i = 0; i < n; ++i) t.add_node(i);
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = i + 1; j < n; ++j) {
      double dx = pos[i].first - pos[j].first;
      double dy = pos[i].second - pos[j].second;
      if (std::sqrt(dx * dx + dy * dy) <= radius) t.add_edge(i, j);
    }
  return t;
}

Topology Topology::from_text(const std::string& text) {
  Topology t;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string kw;
    if (!(ls >> kw)) continue;
    if (kw == "node") {
      long long u;
      if (!(ls >> u) || u < 0) throw SimError("invalid node line");
      t.add_node(NodeId(u));
    } else if (kw == "edge") {
      long long u, v;
      if (!(ls >> u >> v) || u < 0 || v < 0) throw SimError("invalid edge");
      if (u == v) throw SimError("invalid edge");
      t.add_edge(NodeId(u), NodeId(v));
    } else {
      throw SimError("unknown topology directive: " + kw);
    }
  }
  return t;
}

Topology Topology::from_edges(std::uint32_t n_nodes,
                              const std::vector<std::pair<NodeId, NodeId>>& edges) {
  Topology t;
  for (std::uint32_t i = 0; i < n_nodes; ++i) t.add_node(i);
  for (const auto& [u, v] : edges) {
    if (u == v) throw SimError("invalid edge");
    t.add_edge(u, v);
  }
  return t;
}

}  // namespace wacsim
