#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "wacsim/injector.hpp"
#include "wacsim/kernel.hpp"
#include "wacsim/protocol.hpp"
#include "wacsim/topology.hpp"

namespace wacsim {

struct SensorSnapshot {
  NodeId id = 0;
  std::set<Slot> claim;
  std::optional<Slot> pending;
  bool joined = false;
  Mode mode = Mode::Idle;
  std::optional<NodeId> initiator;
  // Direct-neighbor records: claimed slots and announced pending as last heard.
  std::map<NodeId, std::pair<std::set<Slot>, std::optional<Slot>>> recorded;
};

struct GlobalSnapshot {
  Frame frame = 0;
  std::map<NodeId, SensorSnapshot> nodes;
};

struct Violation {
  std::string kind;  // overlap | unjoined | active_reset | stale_table
  NodeId a = 0;
  NodeId b = 0;
  Slot slot = 0;
};

struct LegitimacyReport {
  Frame frame = 0;
  bool legitimate = true;
  std::vector<Violation> violations;
};

/// Omniscient legitimacy predicate: (a) distance-2 disjoint claims,
/// (b) everyone joined holding a slot, (c) no reset active, (d) every
/// direct table entry matches the real claim (modulo an announced pending
/// activation) and names a live neighbor.
LegitimacyReport check_legitimacy(const Topology& t, const GlobalSnapshot& snap);

struct Chi2Result {
  int chi2 = 0;
  std::map<NodeId, int> coloring;
};

/// Exact distance-2 chromatic number by backtracking; throws
/// SimError("oracle budget exceeded") over 12 nodes.
Chi2Result oracle_distance2_coloring(const Topology& t);

/// True iff `claims` is a valid partial distance-2 coloring of t: any two
/// distinct nodes within distance 2 hold disjoint slot sets.
bool valid_distance2_assignment(const Topology& t, const std::map<NodeId, std::set<Slot>>& claims);

/// Everything a run emits, in emission order. Emission order within a frame
/// is authoritative for interval reasoning.
class RunObserver {
 public:
  virtual void on_begin(const Topology& t, const ProtocolConfig& cfg, std::uint64_t seed,
                        Frame frames) {}
  virtual void on_tx(Frame frame, Slot slot, NodeId node, const Message& msg) {}
  virtual void on_event(const KernelEvent& ev) {}
  virtual void on_boundary(const Topology& t, const GlobalSnapshot& snap) {}
  virtual void on_claim_change(Frame frame, NodeId node, const std::set<Slot>& from,
                               const std::set<Slot>& to, const std::string& cause,
                               std::optional<NodeId> initiator) {}
  virtual void on_mode_change(Frame frame, NodeId node, Mode mode,
                              std::optional<NodeId> initiator, bool injected) {}
  virtual void on_reset_promoted(Frame frame, NodeId initiator,
                                 const std::vector<NodeId>& participants) {}
  virtual void on_reset_released(Frame frame, NodeId initiator, bool forced) {}
  virtual void on_reset_abandoned(Frame frame, NodeId node) {}
  virtual void on_join(Frame frame, NodeId node, Slot slot, std::optional<NodeId> granter) {}
  virtual void on_topo_add(Frame frame, NodeId node, const std::set<NodeId>& attach) {}
  virtual void on_topo_remove(Frame frame, NodeId node) {}
  virtual void on_perturb(Frame frame, const PerturbationEvent& e, bool applied) {}
  virtual void on_diagnostic(Frame frame, NodeId node, const std::string& kind) {}
  virtual ~RunObserver() = default;
};

/// Tracks legitimacy across boundaries and collisions across frames;
/// computes the convergence frame.
class ConvergenceMonitor : public RunObserver {
 public:
  void on_begin(const Topology& t, const ProtocolConfig& cfg, std::uint64_t, Frame) override;
  void on_event(const KernelEvent& ev) override;
  void on_boundary(const Topology& t, const GlobalSnapshot& snap) override;

  std::optional<Frame> converged_at() const;
  Frame last_boundary() const { return last_boundary_; }
  const LegitimacyReport& last_report() const { return last_report_; }
  std::map<std::string, std::int64_t> violation_counts() const { return violation_counts_; }
  std::int64_t collisions() const { return collisions_; }
  std::int64_t boundaries_checked() const { return boundaries_; }
  std::int64_t legit_boundaries() const { return legit_boundaries_; }

 private:
  ProtocolConfig cfg_;
  Frame bad_before_ = 0;  // convergence cannot precede this frame
  Frame last_boundary_ = -1;
  LegitimacyReport last_report_;
  std::map<std::string, std::int64_t> violation_counts_;
  std::int64_t collisions_ = 0;
  std::int64_t boundaries_ = 0;
  std::int64_t legit_boundaries_ = 0;
};

/// Direct check of the distance-3 reset exclusion: whenever an initiator's
/// reset becomes active, every other active initiator must be farther than
/// 3 hops away.
class ExclusionMonitor : public RunObserver {
 public:
  struct Pair {
    Frame frame;
    NodeId a, b;
    int distance;
  };

  void on_begin(const Topology& t, const ProtocolConfig&, std::uint64_t, Frame) override;
  void on_mode_change(Frame frame, NodeId node, Mode mode, std::optional<NodeId> initiator,
                      bool injected) override;
  void on_topo_add(Frame frame, NodeId node, const std::set<NodeId>& attach) override;
  void on_topo_remove(Frame frame, NodeId node) override;

  const std::vector<Pair>& violations() const { return violations_; }
  /// Concurrent executions observed at initiator distance >= 4 (legal; used
  /// to demonstrate concurrency).
  const std::vector<Pair>& concurrent_ok() const { return concurrent_ok_; }
  /// Overlaps where one side is injected corrupted-state residue rather
  /// than a reset the protocol promoted.
  const std::vector<Pair>& injected_overlaps() const { return injected_overlaps_; }

 private:
  int distance_capped(NodeId a, NodeId b, int cap) const;

  Topology topo_;
  std::map<NodeId, std::set<NodeId>> active_;  // initiator -> executing members
  std::map<NodeId, bool> tainted_;             // group began as injected state
  std::map<NodeId, NodeId> member_of_;         // node -> initiator
  std::vector<Pair> violations_;
  std::vector<Pair> concurrent_ok_;
  std::vector<Pair> injected_overlaps_;
};

/// Checks that claim changes attributed to a promoted reset stay inside the
/// initiator's distance-2 neighborhood as of promotion time.
class ScopeMonitor : public RunObserver {
 public:
  struct Entry {
    Frame frame;
    NodeId initiator;
    NodeId node;
  };

  void on_begin(const Topology& t, const ProtocolConfig&, std::uint64_t, Frame) override;
  void on_reset_promoted(Frame frame, NodeId initiator,
                         const std::vector<NodeId>& participants) override;
  void on_reset_released(Frame frame, NodeId initiator, bool forced) override;
  void on_claim_change(Frame frame, NodeId node, const std::set<Slot>& from,
                       const std::set<Slot>& to, const std::string& cause,
                       std::optional<NodeId> initiator) override;
  void on_topo_add(Frame frame, NodeId node, const std::set<NodeId>& attach) override;
  void on_topo_remove(Frame frame, NodeId node) override;

  const std::vector<Entry>& violations() const { return violations_; }
  std::int64_t unattributed() const { return unattributed_; }

 private:
  Topology topo_;
  std::map<NodeId, std::set<NodeId>> scope_;  // active initiator -> allowed nodes
  std::vector<Entry> violations_;
  std::int64_t unattributed_ = 0;
};

/// Aggregate run counters for summaries and sweep rows.
class StatsMonitor : public RunObserver {
 public:
  void on_begin(const Topology& t, const ProtocolConfig& cfg, std::uint64_t, Frame) override;
  void on_reset_promoted(Frame frame, NodeId initiator,
                         const std::vector<NodeId>& participants) override;
  void on_reset_released(Frame frame, NodeId initiator, bool forced) override;
  void on_join(Frame frame, NodeId node, Slot slot, std::optional<NodeId> granter) override;
  void on_boundary(const Topology& t, const GlobalSnapshot& snap) override;
  void on_diagnostic(Frame frame, NodeId node, const std::string& kind) override;
  void on_claim_change(Frame frame, NodeId node, const std::set<Slot>& from,
                       const std::set<Slot>& to, const std::string& cause,
                       std::optional<NodeId> initiator) override;

  std::int64_t resets = 0;
  std::int64_t forced_releases = 0;
  std::int64_t joins = 0;
  std::int64_t claim_changes = 0;
  std::map<std::string, std::int64_t> diagnostics;
  std::int64_t final_live_nodes = 0;
  std::int64_t final_total_slots = 0;
  std::vector<std::pair<Frame, NodeId>> reset_log;
};

}  // namespace wacsim
