#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sstream>

#include "wacsim/simulation.hpp"
#include "wacsim/trace.hpp"

using namespace wacsim;

namespace {

ScenarioConfig grid_scenario(std::uint32_t w, std::uint32_t h, Frame frames,
                             std::uint64_t seed = 1) {
  ScenarioConfig sc;
  sc.topo.kind = TopologySpec::Kind::Grid;
  sc.topo.w = w;
  sc.topo.h = h;
  sc.frames = frames;
  sc.seed = seed;
  return sc;
}

ScenarioConfig path_scenario(std::uint32_t n, Frame frames, std::uint64_t seed = 1) {
  ScenarioConfig sc;
  sc.topo.kind = TopologySpec::Kind::Path;
  sc.topo.n = n;
  sc.frames = frames;
  sc.seed = seed;
  return sc;
}

}  // namespace

TEST_CASE("legitimate start stays legitimate (closure, small grid)") {
  auto sc = grid_scenario(3, 3, 300);
  Simulation sim(sc);
  auto r = sim.run();
  CAPTURE(r.error);
  CHECK(r.error.empty());
  CHECK(r.converged_at == Frame(0));
  CHECK(r.collisions == 0);
  CHECK(r.resets == 0);
  CHECK(r.exclusion_violations == 0);
  CHECK(r.scope_violations == 0);
}

TEST_CASE("closure on a path without the bandwidth extension") {
  auto sc = path_scenario(7, 300);
  sc.bandwidth_extension = false;
  Simulation sim(sc);
  auto r = sim.run();
  CHECK(r.error.empty());
  CHECK(r.converged_at == Frame(0));
  CHECK(r.collisions == 0);
  // without the extension nothing ever changes a claim
  CHECK(sim.stats().claim_changes == 0);
}

TEST_CASE("corrupt-all perturbation stabilizes on a path") {
  auto sc = path_scenario(5, 1500);
  sc.perturbations.push_back({5, PerturbationEvent::Kind::CorruptAll, 0, 12345, {}});
  Simulation sim(sc);
  auto r = sim.run();
  CAPTURE(r.error);
  CHECK(r.error.empty());
  REQUIRE(r.converged_at.has_value());
  CHECK(*r.converged_at > 5);
  CHECK(r.exclusion_violations == 0);
  CHECK(r.scope_violations == 0);
  MESSAGE("path5 converged at frame ", *r.converged_at, " with ", r.resets, " resets");
}

TEST_CASE("corrupt-all perturbation stabilizes on a 3x3 grid") {
  auto sc = grid_scenario(3, 3, 3000);
  sc.perturbations.push_back({5, PerturbationEvent::Kind::CorruptAll, 0, 777, {}});
  Simulation sim(sc);
  auto r = sim.run();
  CAPTURE(r.error);
  CHECK(r.error.empty());
  REQUIRE(r.converged_at.has_value());
  CHECK(r.exclusion_violations == 0);
  CHECK(r.scope_violations == 0);
  MESSAGE("grid3x3 converged at frame ", *r.converged_at, " with ", r.resets, " resets");
}

TEST_CASE("cold start joins everyone and converges") {
  auto sc = path_scenario(5, 800);
  sc.legitimate_start = false;
  Simulation sim(sc);
  auto r = sim.run();
  CAPTURE(r.error);
  CHECK(r.error.empty());
  REQUIRE(r.converged_at.has_value());
  CHECK(r.joins == 5);
  for (NodeId u : sim.node_ids()) {
    CHECK(sim.node(u).core().joined);
    CHECK(!sim.node(u).core().claim.empty());
  }
}

TEST_CASE("identical configs give byte-identical traces") {
  auto run_trace = [](std::uint64_t seed) {
    auto sc = grid_scenario(2, 3, 120, seed);
    sc.perturbations.push_back({4, PerturbationEvent::Kind::CorruptAll, 0, 9, {}});
    std::ostringstream os;
    TraceWriter w(os);
    Simulation sim(sc);
    sim.add_observer(&w);
    sim.run();
    return os.str();
  };
  auto a = run_trace(5);
  auto b = run_trace(5);
  CHECK(a == b);
  CHECK(a.size() > 1000);
  auto c = run_trace(6);
  CHECK(a != c);
}

TEST_CASE("config validation") {
  SUBCASE("period too small on a grid") {
    auto sc = grid_scenario(3, 3, 50);
    sc.period = 1;
    CHECK_THROWS_WITH_AS(Simulation{sc}, "period too small", SimError);
  }
  SUBCASE("frames must be positive") {
    auto sc = grid_scenario(2, 2, 0);
    CHECK_THROWS_WITH_AS(Simulation{sc}, "frames must be positive", SimError);
  }
  SUBCASE("id capacity must cover every id") {
    auto sc = grid_scenario(2, 2, 10);
    sc.id_capacity = 3;
    CHECK_THROWS_WITH_AS(Simulation{sc}, "id capacity too small", SimError);
  }
  SUBCASE("tau below the stride is rejected") {
    auto sc = grid_scenario(2, 2, 10);
    sc.tau = 2;
    sc.stride = 4;
    CHECK_THROWS_WITH_AS(Simulation{sc}, "tau must be at least the recovery stride", SimError);
  }
}

TEST_CASE("trace replay reproduces the in-process verdicts") {
  auto sc = path_scenario(4, 400, 3);
  sc.perturbations.push_back({5, PerturbationEvent::Kind::CorruptAll, 0, 21, {}});
  std::ostringstream os;
  TraceWriter w(os);
  Simulation sim(sc);
  sim.add_observer(&w);
  auto r = sim.run();

  std::istringstream is(os.str());
  ConvergenceMonitor conv;
  ExclusionMonitor excl;
  ScopeMonitor scope;
  TraceReader reader;
  reader.add_observer(&conv);
  reader.add_observer(&excl);
  reader.add_observer(&scope);
  reader.replay(is);

  CHECK(conv.converged_at() == r.converged_at);
  CHECK(std::int64_t(excl.violations().size()) == r.exclusion_violations);
  CHECK(std::int64_t(scope.violations().size()) == r.scope_violations);
  CHECK(conv.collisions() == r.collisions);
}
