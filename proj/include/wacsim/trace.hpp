#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "wacsim/verifier.hpp"

namespace wacsim {

/// Streams a run as JSON-lines. Every record uses only logical time
/// (frame/slot) and integers, so identical runs produce identical bytes.
class TraceWriter : public RunObserver {
 public:
  explicit TraceWriter(std::ostream& out, int snapshot_every = 1, bool include_silence = false);

  void on_begin(const Topology& t, const ProtocolConfig& cfg, std::uint64_t seed,
                Frame frames) override;
  void on_tx(Frame frame, Slot slot, NodeId node, const Message& msg) override;
  void on_event(const KernelEvent& ev) override;
  void on_boundary(const Topology& t, const GlobalSnapshot& snap) override;
  void on_claim_change(Frame frame, NodeId node, const std::set<Slot>& from,
                       const std::set<Slot>& to, const std::string& cause,
                       std::optional<NodeId> initiator) override;
  void on_mode_change(Frame frame, NodeId node, Mode mode, std::optional<NodeId> initiator,
                      bool injected) override;
  void on_reset_promoted(Frame frame, NodeId initiator,
                         const std::vector<NodeId>& participants) override;
  void on_reset_released(Frame frame, NodeId initiator, bool forced) override;
  void on_reset_abandoned(Frame frame, NodeId node) override;
  void on_join(Frame frame, NodeId node, Slot slot, std::optional<NodeId> granter) override;
  void on_topo_add(Frame frame, NodeId node, const std::set<NodeId>& attach) override;
  void on_topo_remove(Frame frame, NodeId node) override;
  void on_perturb(Frame frame, const PerturbationEvent& e, bool applied) override;
  void on_diagnostic(Frame frame, NodeId node, const std::string& kind) override;

 private:
  std::ostream& out_;
  int snapshot_every_;
  bool include_silence_;
};

/// Replays a JSON-lines trace through observers; the file-based `verify`
/// path re-derives every check from serialized data alone.
class TraceReader {
 public:
  void add_observer(RunObserver* obs) { observers_.push_back(obs); }

  /// Returns the number of records replayed. Throws SimError on a malformed
  /// trace.
  std::size_t replay(std::istream& in);

  Frame last_boundary() const { return last_boundary_; }

 private:
  std::vector<RunObserver*> observers_;
  Frame last_boundary_ = -1;
};

}  // namespace wacsim
