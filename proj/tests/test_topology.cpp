#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <deque>
#include <random>

#include "wacsim/topology.hpp"

using namespace wacsim;

namespace {

// Independent BFS oracle; kept deliberately separate from the library path.
std::set<NodeId> bfs_within(const Topology& t, NodeId u, int k) {
  std::map<NodeId, int> dist{{u, 0}};
  std::deque<NodeId> q{u};
  while (!q.empty()) {
    NodeId v = q.front();
    q.pop_front();
    if (dist[v] == k) continue;
    for (NodeId w : t.neighbors(v))
      if (!dist.count(w)) {
        dist[w] = dist[v] + 1;
        q.push_back(w);
      }
  }
  std::set<NodeId> out;
  for (auto& [v, d] : dist)
    if (v != u) out.insert(v);
  return out;
}

Topology random_topology(std::mt19937_64& rng, std::size_t max_nodes) {
  std::size_t n = 1 + rng() % max_nodes;
  Topology t;
  for (NodeId i = 0; i < n; ++i) t.add_node(i);
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = i + 1; j < n; ++j)
      if (rng() % 100 < 30) t.add_edge(i, j);
  return t;
}

Topology path3() {
  Topology t;
  t.add_node(0);
  t.add_node(1, {0});
  t.add_node(2, {1});
  return t;
}

}  // namespace

TEST_CASE("neighbors on a path") {
  auto t = path3();
  CHECK(t.neighbors(1) == std::set<NodeId>{0, 2});
  CHECK(t.neighbors(0) == std::set<NodeId>{1});
}

TEST_CASE("neighbors of an isolated node is empty") {
  Topology t;
  t.add_node(7);
  CHECK(t.neighbors(7).empty());
}

TEST_CASE("neighbors of grid center are the four orthogonal cells") {
  auto t = Topology::grid(3, 3);
  // row-major ids; center is 4
  CHECK(t.neighbors(4) == std::set<NodeId>{1, 3, 5, 7});
}

TEST_CASE("unknown node errors") {
  Topology t;
  t.add_node(0);
  CHECK_THROWS_WITH_AS(t.neighbors(9), "no such node", SimError);
  CHECK_THROWS_WITH_AS(t.distance_neighborhood(9, 2), "no such node", SimError);
  CHECK_THROWS_WITH_AS(t.remove_node(9), "no such node", SimError);
}

TEST_CASE("distance neighborhood on a path") {
  auto t = path3();
  CHECK(t.distance_neighborhood(0, 2) == std::set<NodeId>{1, 2});
  CHECK(t.distance_neighborhood(0, 1) == std::set<NodeId>{1});
}

TEST_CASE("distance-2 from a star leaf reaches the other leaves") {
  Topology t;
  t.add_node(0);
  for (NodeId leaf : {1, 2, 3, 4}) t.add_node(leaf, {0});
  CHECK(t.distance_neighborhood(1, 2) == std::set<NodeId>{0, 2, 3, 4});
}

TEST_CASE("distance-2 from grid center reaches all eight cells") {
  auto t = Topology::grid(3, 3);
  CHECK(t.distance_neighborhood(4, 2) == std::set<NodeId>{0, 1, 2, 3, 5, 6, 7, 8});
}

TEST_CASE("add_node") {
  Topology t;
  SUBCASE("isolated into empty graph") {
    t.add_node(0);
    CHECK(t.node_count() == 1);
    CHECK(t.edge_count() == 0);
  }
  SUBCASE("attach to both ends of an edge makes a triangle") {
    t.add_node(0);
    t.add_node(1, {0});
    t.add_node(2, {0, 1});
    CHECK(t.edge_count() == 3);
    CHECK(t.neighbors(2) == std::set<NodeId>{0, 1});
  }
  SUBCASE("duplicate id rejected") {
    t.add_node(0);
    CHECK_THROWS_WITH_AS(t.add_node(0), "id in use", SimError);
  }
  SUBCASE("removed ids are never reused") {
    t.add_node(0);
    t.add_node(1, {0});
    t.remove_node(1);
    CHECK_THROWS_WITH_AS(t.add_node(1), "id in use", SimError);
  }
  SUBCASE("dangling attach target rejected") {
    t.add_node(0);
    CHECK_THROWS_WITH_AS(t.add_node(1, {5}), "no such node", SimError);
  }
}

TEST_CASE("remove_node") {
  SUBCASE("removing the star center isolates the leaves") {
    Topology t;
    t.add_node(0);
    for (NodeId leaf : {1, 2, 3, 4}) t.add_node(leaf, {0});
    t.remove_node(0);
    CHECK(t.node_count() == 4);
    CHECK(t.edge_count() == 0);
  }
  SUBCASE("removing a path leaf leaves the rest intact") {
    auto t = path3();
    t.remove_node(2);
    CHECK(t.node_count() == 2);
    CHECK(t.edge_count() == 1);
    CHECK(t.neighbors(1) == std::set<NodeId>{0});
  }
}

TEST_CASE("grid generation") {
  auto g22 = Topology::grid(2, 2);
  CHECK(g22.node_count() == 4);
  CHECK(g22.edge_count() == 4);
  auto g33 = Topology::grid(3, 3);
  CHECK(g33.node_count() == 9);
  CHECK(g33.edge_count() == 12);  // 2wh - w - h
}

TEST_CASE("random geometric is deterministic in its seed") {
  auto a = Topology::random_geometric(14, 0.35, 99);
  auto b = Topology::random_geometric(14, 0.35, 99);
  CHECK(a.edges() == b.edges());
  auto c = Topology::random_geometric(14, 0.35, 100);
  bool identical = a.edges() == c.edges();
  CHECK_FALSE(identical);  // overwhelmingly unlikely to coincide
}

TEST_CASE("explicit text form round-trips and validates") {
  auto t = Topology::from_text("node 0\nnode 1\nnode 2\nedge 0 1\nedge 1 2\n");
  CHECK(t.node_count() == 3);
  CHECK(t.edge_count() == 2);
  auto again = Topology::from_text(t.dump());
  CHECK(again.edges() == t.edges());
  CHECK_THROWS_WITH_AS(Topology::from_text("node 0\nedge 0 0\n"), "invalid edge", SimError);
}

TEST_CASE("distance_neighborhood agrees with the BFS oracle on random graphs") {
  std::mt19937_64 rng(20260810);
  for (int trial = 0; trial < 200; ++trial) {
    auto t = random_topology(rng, 12);
    for (NodeId u : t.nodes())
      for (int k = 1; k <= 3; ++k) CHECK(t.distance_neighborhood(u, k) == bfs_within(t, u, k));
  }
}

TEST_CASE("neighborhood properties") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 60; ++trial) {
    auto t = random_topology(rng, 10);
    for (NodeId u : t.nodes()) {
      // k=1 equals the neighbor set
      CHECK(t.distance_neighborhood(u, 1) == t.neighbors(u));
      // monotone in k
      auto d1 = t.distance_neighborhood(u, 1);
      auto d2 = t.distance_neighborhood(u, 2);
      auto d3 = t.distance_neighborhood(u, 3);
      CHECK(std::includes(d2.begin(), d2.end(), d1.begin(), d1.end()));
      CHECK(std::includes(d3.begin(), d3.end(), d2.begin(), d2.end()));
      // membership symmetry
      for (NodeId v : d2) {
        auto back = t.distance_neighborhood(v, 2);
        CHECK(back.count(u) == 1);
      }
    }
  }
}

TEST_CASE("add then remove restores the edge set") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    auto t = random_topology(rng, 8);
    auto before = t.edges();
    NodeId fresh = 100 + NodeId(trial);
    std::set<NodeId> attach;
    for (NodeId u : t.nodes())
      if (rng() % 2) attach.insert(u);
    t.add_node(fresh, attach);
    t.remove_node(fresh);
    CHECK(t.edges() == before);
  }
}
