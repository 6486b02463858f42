#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "wacsim/message.hpp"
#include "wacsim/topology.hpp"

namespace wacsim {

struct ProtocolConfig {
  Slot period = 0;
  std::uint32_t tau = 4;     // consecutive-miss threshold, frames
  std::uint32_t stride = 4;  // every stride-th frame is a recovery frame
  std::uint32_t n_cap = 0;   // mini-slots per recovery frame; > every id in the run
  bool bandwidth_extension = true;

  bool is_recovery(Frame f) const { return f % stride == 0; }
  std::int64_t rho(Frame f) const { return f / stride; }
  Slot frame_length(Frame f) const { return is_recovery(f) ? n_cap : period; }
};

enum class Mode { Idle, Scheduling, Arbitrating, Resetting, Reassigning };

const char* mode_name(Mode m);

/// What a sensor last heard one of its neighbors report about a third node.
struct ReportedInfo {
  std::set<Slot> claim;
  bool joined = false;
  Frame at = -1;
};

/// Per-neighbor protocol bookkeeping. `claim` is the neighbor's active claim
/// exactly as announced; `pending` is its announced-but-not-yet-active extra
/// slot. Slot avoidance uses effective(); table-consistency checks compare
/// `claim` so an activation window never reads as staleness.
struct NeighborRecord {
  std::set<Slot> claim;
  std::optional<Slot> pending;
  bool joined = false;
  bool idle = true;
  std::optional<NodeId> active_reset;
  int freshness = 0;  // frames since any delivery
  int missed = 0;     // consecutive normal frames without a claimed-slot delivery
  bool starved_joiner = false;  // neighbor asked to join but sees no free slot
  bool delivered_now = false;
  bool delivered_claimed = false;
  std::map<NodeId, ReportedInfo> reported;  // the neighbor's own distance-1 digest

  std::set<Slot> effective() const {
    std::set<Slot> s = claim;
    if (pending) s.insert(*pending);
    return s;
  }
};

/// One competing or executing reset known locally. tier -1 marks an
/// executing reset, which outranks every pending request. last_rho is the
/// freshest origin stamp seen, never advanced by relays alone.
struct ArbEntry {
  int tier = 1;
  int est = 4;  // hop estimate to the initiator
  std::int64_t last_rho = -1;
  bool executing = false;
};

struct ResetPlan {
  NodeId initiator = 0;
  std::vector<NodeId> participants;  // ascending id; assignment order
  std::int64_t promo_rho = 0;
  std::int64_t assign_start_rho = 0;
  int dist = 0;       // my hop estimate to the initiator (0 = me)
  int position = -1;  // my index in participants
  // Last recovery frame in which anything else vouched for this reset
  // (a co-participant beacon or a control message naming the initiator).
  // A reset nobody else confirms is corrupted-state residue and is dropped.
  std::int64_t last_confirm_rho = 0;

  std::int64_t release_rho() const {
    return assign_start_rho + 2 * std::int64_t(participants.size());
  }
};

/// The complete replaceable state of one sensor; fault injection overwrites
/// this wholesale.
struct SensorCore {
  std::set<Slot> claim;
  std::optional<Slot> pending_extra;
  bool pending_announced = false;
  bool joined = false;
  Mode mode = Mode::Idle;
  int tier = 1;
  int streak = 0;
  std::optional<ResetPlan> plan;
  std::map<NodeId, NeighborRecord> table;
  std::map<NodeId, ArbEntry> arb;
  std::optional<ClearSlotsPayload> pending_clear_relay;
  std::optional<ReleasePayload> pending_release_relay;
  std::optional<JoinGrantPayload> pending_grant;
  std::optional<AssignPayload> pending_assign;
  std::int64_t listen_frames = 0;
  std::int64_t first_bcast_rho = -1;  // first broadcast of the current contention
  std::int64_t stable_frames = 0;
  std::int64_t frames_since_extra = 1 << 20;
  std::int64_t frames_since_mode_change = 0;
  std::map<std::string, std::int64_t> diag;
};

/// Trace and monitor callbacks; emission order within a frame is the ground
/// truth ordering for the monitors.
struct ProtocolSink {
  virtual void claim_changed(NodeId node, const std::set<Slot>& from, const std::set<Slot>& to,
                             const std::string& cause, std::optional<NodeId> initiator,
                             Frame frame) {}
  virtual void mode_changed(NodeId node, Mode mode, std::optional<NodeId> initiator, Frame frame,
                            bool injected) {}
  virtual void reset_promoted(NodeId initiator, const std::vector<NodeId>& participants,
                              Frame frame) {}
  virtual void reset_released(NodeId initiator, Frame frame, bool forced) {}
  virtual void reset_abandoned(NodeId node, Frame frame) {}
  virtual void join_event(NodeId node, Slot slot, std::optional<NodeId> granter, Frame frame) {}
  virtual void diagnostic(NodeId node, const std::string& kind, Frame frame) {}
  virtual ~ProtocolSink() = default;
};

/// One sensor's deterministic state machine. It sees the network only
/// through delivered messages: collision and silence are indistinguishable
/// here by construction (observe() takes an optional delivery).
class SensorNode {
 public:
  static constexpr int kArbStreak = 3;        // sole-winner recovery frames before promoting
  static constexpr int kArbExpiry = 2;        // recovery frames before an arb entry decays
  static constexpr int kAssignDelay = 5;      // recovery frames from promotion to first pick
  static constexpr int kRoundSpacing = 2;     // recovery frames between picks
  static constexpr int kReleaseSlack = 4;     // recovery frames of watchdog grace
  static constexpr int kPlanFutureLimit = 8;  // plans scheduled further out are malformed
  static constexpr int kConfirmExpiry = 2;    // unconfirmed resets drop after this many rho

  SensorNode(NodeId me, const ProtocolConfig& cfg, ProtocolSink* sink);

  NodeId id() const { return me_; }
  const SensorCore& core() const { return core_; }
  const ProtocolConfig& config() const { return cfg_; }

  /// Pure: what this node writes in the given slot, from current state.
  std::optional<Message> transmit_decision(Frame frame, Slot slot) const;

  /// Absorbs this slot's outcome. `delivered` is set only for a clean
  /// single-writer delivery; `sent` is what this node itself wrote in the
  /// slot (half-duplex: a writer hears nothing).
  void observe(Frame frame, Slot slot, std::optional<NodeId> from,
               const std::optional<Message>& delivered, const std::optional<Message>& sent);

  /// Frame-boundary bookkeeping: counters, purges, evidence, arbitration
  /// progress, bandwidth extension. Returns true iff a reset was scheduled
  /// at this boundary.
  bool frame_end(Frame frame);

  /// Convenience single-call form: decide, then absorb the slot outcome.
  std::optional<Message> on_slot(Frame frame, Slot slot, std::optional<NodeId> from,
                                 const std::optional<Message>& delivered);

  /// Fault-injection entry point: the state is replaced wholesale.
  void overwrite(SensorCore core, Frame frame);

  /// Constructs a member in the consistent legitimate configuration used by
  /// warm-started scenarios.
  void init_legitimate(const std::set<Slot>& claim,
                       const std::map<NodeId, NeighborRecord>& table);

  std::optional<NodeId> reset_initiator() const;

  /// Merged distance-2 claim view (direct entries shadow reported ones,
  /// freshest reporter wins). Keys never include this node.
  std::map<NodeId, ReportedInfo> view() const;

  /// Slots unavailable in the distance-2 view (optionally also one's own).
  std::set<Slot> taken_in_view(bool include_self) const;

  /// Smallest slot every viewed owner of which holds more than one slot;
  /// claiming it displaces only bandwidth extras, which their owners yield.
  std::optional<Slot> smallest_multi_owned() const;

  /// Overlap/timeout evidence per the collision-free predicate a sensor can
  /// actually certify locally: 0 = overlap, 1 = timeout-only, none = clean.
  std::optional<int> evidence_tier() const;

  /// True when every certified overlap involves a claimant holding several
  /// slots; such conflicts resolve by yielding extras, never by reset.
  bool overlaps_all_yieldable() const;
  std::optional<int> evidence_tier_timeout_only() const;

 private:
  friend class FaultInjector;

  void check_abandon(Frame frame);
  void absorb_message(Frame frame, Slot slot, NodeId from, const Message& msg);
  void handle_clear(Frame frame, const ClearSlotsPayload& p);
  void handle_release(Frame frame, const ReleasePayload& p);
  void handle_join_request(Frame frame, NodeId from, const Message& msg);
  void handle_join_grant(Frame frame, NodeId from, const JoinGrantPayload& p);
  void set_mode(Mode m, Frame frame, std::optional<NodeId> initiator = std::nullopt);
  void set_claim(const std::set<Slot>& to, const std::string& cause,
                 std::optional<NodeId> initiator, Frame frame);
  void promote(Frame frame);
  void finish_reset(Frame frame);
  void force_release(Frame frame, const std::string& why);
  void extension_tick(Frame frame);
  MessageBase make_base() const;
  std::optional<ArbField> arb_out(std::int64_t rho) const;
  std::optional<Slot> smallest_free(bool include_self) const;
  void recovery_frame_end(Frame frame);
  void do_assign_round(Frame frame);

  NodeId me_;
  ProtocolConfig cfg_;
  ProtocolSink* sink_;
  SensorCore core_;
};

}  // namespace wacsim
