#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "wacsim/reassign.hpp"
#include "wacsim/verifier.hpp"

using namespace wacsim;

TEST_CASE("single isolated participant takes slot 0") {
  auto out = reassign_slots({{5, {}, {}}}, 8);
  CHECK(out.at(5) == std::set<Slot>{0});
}

TEST_CASE("path participants take 0,1,2 in id order") {
  std::vector<ReassignParticipant> ps = {
      {1, {2, 3}, {}},  // a: b and c within distance 2
      {2, {1, 3}, {}},
      {3, {1, 2}, {}},
  };
  auto out = reassign_slots(ps, 8);
  CHECK(out.at(1) == std::set<Slot>{0});
  CHECK(out.at(2) == std::set<Slot>{1});
  CHECK(out.at(3) == std::set<Slot>{2});
}

TEST_CASE("frozen outsider blocks its slot inside the victim's range only") {
  // path a(1)-b(2)-c(3)-d(4); d frozen at {0}, outside the participant set
  std::vector<ReassignParticipant> ps = {
      {1, {2, 3}, {}},
      {2, {1, 3}, {0}},  // d is within distance 2 of b
      {3, {1, 2}, {0}},  // and of c
  };
  auto out = reassign_slots(ps, 8);
  CHECK(out.at(1) == std::set<Slot>{0});
  CHECK(out.at(2) == std::set<Slot>{1});
  CHECK(out.at(3) == std::set<Slot>{2});  // skips 0 (a and d), skips 1 (b)
}

TEST_CASE("no free slot aborts with the config diagnostic") {
  std::vector<ReassignParticipant> ps = {
      {1, {2}, {}},
      {2, {1}, {}},
  };
  CHECK_THROWS_WITH_AS(reassign_slots(ps, 1), "period too small", SimError);
}

TEST_CASE("assign_all produces a valid distance-2 coloring (oracle-checked)") {
  std::mt19937_64 rng(777);
  for (int trial = 0; trial < 120; ++trial) {
    std::uint32_t n = 1 + rng() % 7;
    Topology t;
    for (NodeId i = 0; i < n; ++i) t.add_node(i);
    for (NodeId i = 0; i < n; ++i)
      for (NodeId j = i + 1; j < n; ++j)
        if (rng() % 100 < 35) t.add_edge(i, j);
    Slot period = Slot(t.max_degree() * t.max_degree() + 1);
    auto claims = assign_all(t, period);
    CHECK(valid_distance2_assignment(t, claims));
    for (const auto& [u, c] : claims) CHECK(c.size() == 1);
  }
}

TEST_CASE("greedy with frozen context never collides with the context") {
  // random participant subsets of random graphs; outsiders frozen at their
  // assigned slots; brute-force disjointness check of the combined claims
  std::mt19937_64 rng(2026);
  for (int trial = 0; trial < 120; ++trial) {
    std::uint32_t n = 2 + rng() % 6;  // up to 7 nodes
    Topology t;
    for (NodeId i = 0; i < n; ++i) t.add_node(i);
    for (NodeId i = 0; i < n; ++i)
      for (NodeId j = i + 1; j < n; ++j)
        if (rng() % 100 < 40) t.add_edge(i, j);
    Slot period = Slot(std::max<std::size_t>(t.max_degree() * t.max_degree() + 1, 4));

    // outsiders hold arbitrary single slots
    std::map<NodeId, std::set<Slot>> frozen;
    std::vector<NodeId> participants;
    for (NodeId u : t.nodes()) {
      if (rng() % 2)
        participants.push_back(u);
      else
        frozen[u] = {Slot(rng() % period)};
    }
    if (participants.empty()) continue;

    std::vector<ReassignParticipant> ps;
    for (NodeId u : participants) {
      ReassignParticipant p;
      p.id = u;
      for (NodeId v : t.distance_neighborhood(u, 2)) {
        if (frozen.count(v)) {
          p.frozen_claims.insert(frozen[v].begin(), frozen[v].end());
        } else {
          p.nearby_participants.insert(v);
        }
      }
      ps.push_back(std::move(p));
    }
    auto out = reassign_slots(ps, period);

    std::map<NodeId, std::set<Slot>> all = frozen;
    for (const auto& [u, c] : out) all[u] = c;
    // participants must be disjoint from everything within their distance 2
    for (NodeId u : participants)
      for (NodeId v : t.distance_neighborhood(u, 2))
        for (Slot s : all.at(u)) CHECK(all.at(v).count(s) == 0);
  }
}
