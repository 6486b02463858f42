#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wacsim/injector.hpp"
#include "wacsim/kernel.hpp"
#include "wacsim/protocol.hpp"
#include "wacsim/reassign.hpp"
#include "wacsim/topology.hpp"
#include "wacsim/verifier.hpp"

namespace wacsim {

struct TopologySpec {
  enum class Kind { Grid, Path, Rgg, Explicit };
  Kind kind = Kind::Grid;
  std::uint32_t w = 2, h = 2;   // grid
  std::uint32_t n = 0;          // path / rgg
  double radius = 0.0;          // rgg
  std::string text;             // explicit node/edge lines

  std::string describe() const;
  Topology build(std::uint64_t seed) const;
};

struct ScenarioConfig {
  TopologySpec topo;
  std::optional<Slot> period;  // default: d^2 + 1
  std::uint32_t tau = 4;
  std::uint32_t stride = 4;
  std::optional<std::uint32_t> id_capacity;  // default: max id ever used + 1
  bool bandwidth_extension = true;
  bool legitimate_start = true;  // false: cold start, everything unjoined
  std::vector<PerturbationEvent> perturbations;
  Frame frames = 1000;
  std::uint64_t seed = 0;
};

struct RunResult {
  std::optional<Frame> converged_at;
  Frame frames_run = 0;
  std::string error;  // mid-run abort ("period too small"), empty otherwise
  std::map<std::string, std::int64_t> violation_counts;  // legitimacy kinds
  std::int64_t exclusion_violations = 0;
  std::int64_t scope_violations = 0;
  std::int64_t collisions = 0;
  std::int64_t resets = 0;
  std::int64_t forced_releases = 0;
  std::int64_t joins = 0;
  std::int64_t final_live_nodes = 0;
  std::int64_t final_total_slots = 0;
  std::map<std::string, std::int64_t> diagnostics;

  std::int64_t total_violations() const;
  std::string summary_json(std::optional<int> chi2 = std::nullopt) const;
};

/// One deterministic scenario execution: owns the topology, the kernel, one
/// SensorNode per live sensor, the standard monitors, and the perturbation
/// schedule. Everything a run does is a pure function of its config.
class Simulation : ProtocolSink {
 public:
  explicit Simulation(const ScenarioConfig& sc);

  /// Extra observers (trace writers, test probes); not owned.
  void add_observer(RunObserver* obs) { extra_.push_back(obs); }

  RunResult run();

  /// Runs frames [next_frame, upto); run() is run_until(frames) + wrap-up.
  void run_until(Frame upto);
  RunResult finish();

  const Topology& topology() const { return topo_; }
  const ProtocolConfig& protocol_config() const { return pcfg_; }
  const ScenarioConfig& scenario() const { return scfg_; }
  Frame next_frame() const { return next_frame_; }

  bool has_node(NodeId u) const { return nodes_.count(u) != 0; }
  SensorNode& node(NodeId u) { return nodes_.at(u); }
  const SensorNode& node(NodeId u) const { return nodes_.at(u); }
  std::vector<NodeId> node_ids() const;

  GlobalSnapshot snapshot(Frame frame) const;

  ConvergenceMonitor& convergence() { return convergence_; }
  ExclusionMonitor& exclusion() { return exclusion_; }
  ScopeMonitor& scope() { return scope_; }
  StatsMonitor& stats() { return stats_; }

  /// Applies one perturbation immediately (the scheduled path uses this too).
  /// Returns false when the event was skipped (stale node reference).
  bool apply(const PerturbationEvent& e, Frame frame);

 private:
  // ProtocolSink
  void claim_changed(NodeId node, const std::set<Slot>& from, const std::set<Slot>& to,
                     const std::string& cause, std::optional<NodeId> initiator,
                     Frame frame) override;
  void mode_changed(NodeId node, Mode mode, std::optional<NodeId> initiator, Frame frame,
                    bool injected) override;
  void reset_promoted(NodeId initiator, const std::vector<NodeId>& participants,
                      Frame frame) override;
  void reset_released(NodeId initiator, Frame frame, bool forced) override;
  void reset_abandoned(NodeId node, Frame frame) override;
  void join_event(NodeId node, Slot slot, std::optional<NodeId> granter, Frame frame) override;
  void diagnostic(NodeId node, const std::string& kind, Frame frame) override;

  template <typename Fn>
  void each_observer(Fn&& fn);

  void boundary(Frame frame);
  void run_frame(Frame frame);
  void init_states();

  ScenarioConfig scfg_;
  ProtocolConfig pcfg_;
  Topology topo_;
  Kernel kernel_;
  std::map<NodeId, SensorNode> nodes_;
  Frame next_frame_ = 0;
  Frame current_frame_ = 0;  // frame context for sink callbacks
  std::size_t pert_idx_ = 0;
  bool begun_ = false;
  bool finished_ = false;
  std::string error_;

  ConvergenceMonitor convergence_;
  ExclusionMonitor exclusion_;
  ScopeMonitor scope_;
  StatsMonitor stats_;
  std::vector<RunObserver*> extra_;
};

}  // namespace wacsim
