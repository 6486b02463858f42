#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "wacsim/kernel.hpp"

using namespace wacsim;

namespace {

Topology path(std::uint32_t n) { return Topology::path(n); }

WritePayload hb(NodeId sender) {
  WritePayload w;
  w.sender = sender;
  return w;
}

const KernelEvent& event_for(const std::vector<KernelEvent>& evs, NodeId r) {
  for (const auto& e : evs)
    if (e.receiver == r) return e;
  REQUIRE(false);
  static KernelEvent dummy;
  return dummy;
}

}  // namespace

TEST_CASE("single writer delivers to its neighbor only") {
  auto t = path(3);
  Kernel k;
  auto evs = k.step(t, {{0, hb(0)}}, {0, 0});
  CHECK(evs.size() == 3);
  CHECK(event_for(evs, 1).outcome == Outcome::Delivered);
  CHECK(event_for(evs, 1).payload->sender == 0);
  CHECK(event_for(evs, 2).outcome == Outcome::Silence);
  CHECK(event_for(evs, 0).outcome == Outcome::Silence);
}

TEST_CASE("two writing neighbors collide at the shared node") {
  auto t = path(3);
  Kernel k;
  auto evs = k.step(t, {{0, hb(0)}, {2, hb(2)}}, {0, 0});
  CHECK(event_for(evs, 1).outcome == Outcome::Collision);
  CHECK(event_for(evs, 0).outcome == Outcome::Silence);
  CHECK(event_for(evs, 2).outcome == Outcome::Silence);
}

TEST_CASE("non-shared neighbor still gets its write during a collision") {
  auto t = path(4);
  Kernel k;
  auto evs = k.step(t, {{0, hb(0)}, {2, hb(2)}}, {0, 0});
  CHECK(event_for(evs, 1).outcome == Outcome::Collision);
  CHECK(event_for(evs, 3).outcome == Outcome::Delivered);
  CHECK(event_for(evs, 3).payload->sender == 2);
}

TEST_CASE("a transmitting node hears nothing in its own slot") {
  auto t = path(2);
  Kernel k;
  auto evs = k.step(t, {{0, hb(0)}, {1, hb(1)}}, {0, 0});
  CHECK(event_for(evs, 0).outcome == Outcome::Silence);
  CHECK(event_for(evs, 1).outcome == Outcome::Silence);
}

TEST_CASE("ghost transmitter and time skew are rejected") {
  auto t = path(2);
  Kernel k;
  CHECK_THROWS_WITH_AS(k.step(t, {{9, hb(9)}}, {0, 0}), "ghost transmitter", SimError);
  k.step(t, {}, {0, 1});
  CHECK_THROWS_WITH_AS(k.step(t, {}, {0, 1}), "time skew", SimError);
  CHECK_THROWS_WITH_AS(k.step(t, {}, {0, 0}), "time skew", SimError);
}

TEST_CASE("run_frame with no transmitters is all silence") {
  auto t = path(4);
  Kernel k;
  auto evs = k.run_frame(
      t, [](Slot) { return std::map<NodeId, WritePayload>{}; }, 0, 2);
  CHECK(evs.size() == 8);
  for (const auto& e : evs) CHECK(e.outcome == Outcome::Silence);
}

TEST_CASE("run_frame composes per-slot steps in order") {
  auto t = path(3);
  auto schedule = [](Slot s) {
    std::map<NodeId, WritePayload> m;
    if (s == 0) m.emplace(0, hb(0));
    return m;
  };
  Kernel k1;
  auto frame = k1.run_frame(t, schedule, 0, 2);
  Kernel k2;
  auto slot0 = k2.step(t, schedule(0), {0, 0});
  REQUIRE(frame.size() == 6);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(frame[i].outcome == slot0[i].outcome);
    CHECK(frame[i].receiver == slot0[i].receiver);
  }
  for (std::size_t i = 3; i < 6; ++i) CHECK(frame[i].outcome == Outcome::Silence);
}

TEST_CASE("kernel determinism and conservation on random inputs") {
  std::mt19937_64 rng(123);
  for (int trial = 0; trial < 100; ++trial) {
    std::uint32_t n = 2 + rng() % 8;
    Topology t;
    for (NodeId i = 0; i < n; ++i) t.add_node(i);
    for (NodeId i = 0; i < n; ++i)
      for (NodeId j = i + 1; j < n; ++j)
        if (rng() % 100 < 40) t.add_edge(i, j);
    std::map<NodeId, WritePayload> txs;
    for (NodeId i = 0; i < n; ++i)
      if (rng() % 2) txs.emplace(i, hb(i));

    Kernel ka, kb;
    auto evs = ka.step(t, txs, {0, 0});
    auto evs2 = kb.step(t, txs, {0, 0});

    // conservation: one event per live node, ascending receivers
    CHECK(evs.size() == t.node_count());
    for (std::size_t i = 1; i < evs.size(); ++i) CHECK(evs[i - 1].receiver < evs[i].receiver);

    // determinism
    REQUIRE(evs2.size() == evs.size());
    for (std::size_t i = 0; i < evs.size(); ++i) {
      CHECK(evs[i].outcome == evs2[i].outcome);
      CHECK(evs[i].receiver == evs2[i].receiver);
    }

    // locality: each event matches the local recomputation from the node's
    // distance-1 transmit picture
    for (const auto& e : evs) {
      int writers = 0;
      NodeId who = 0;
      for (NodeId nb : t.neighbors(e.receiver))
        if (txs.count(nb)) {
          writers++;
          who = nb;
        }
      if (txs.count(e.receiver)) {
        CHECK(e.outcome == Outcome::Silence);
      } else if (writers == 0) {
        CHECK(e.outcome == Outcome::Silence);
      } else if (writers == 1) {
        CHECK(e.outcome == Outcome::Delivered);
        CHECK(e.payload->sender == who);
      } else {
        CHECK(e.outcome == Outcome::Collision);
      }
    }
  }
}
