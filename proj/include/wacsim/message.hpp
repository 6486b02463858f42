#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "wacsim/topology.hpp"

namespace wacsim {

using Slot = std::uint32_t;
using Frame = std::int64_t;

/// One entry of a sender's distance-1 digest: what the sender currently
/// records about one of its own neighbors. Receivers use it for their
/// two-hop view.
struct DigestEntry {
  NodeId id = 0;
  std::set<Slot> claim;
  bool joined = false;
};

/// Fields present on every transmission. `claim` is the active claim the
/// sender heartbeats in; `pending_extra` is a bandwidth slot announced one
/// frame before activation so neighbor tables never lag the claim.
struct MessageBase {
  std::set<Slot> claim;
  std::optional<Slot> pending_extra;
  bool joined = true;
  bool idle = true;  // reset mode == Idle
  std::optional<NodeId> active_reset;  // executing-reset initiator, if any
  int active_reset_dist = 0;           // sender's hop estimate to that initiator
  std::vector<DigestEntry> digest;
};

/// Reset arbitration content. dist == 0 means the sender is the initiator
/// (a reset_request); dist >= 1 is a relay of the current local winner.
/// origin_rho is the recovery frame of the initiator's own broadcast; relays
/// forward it unchanged, so a request the initiator stops refreshing decays
/// everywhere within a couple of recovery frames.
struct ArbField {
  NodeId initiator = 0;
  int tier = 1;  // 0 = overlap evidence, 1 = timeout-only
  int dist = 0;
  std::int64_t origin_rho = 0;
};

struct ClearSlotsPayload {
  NodeId initiator = 0;
  std::vector<NodeId> participants;  // ascending; defines assignment order
  std::int64_t assign_start_rho = 0;
  int dist = 0;  // sender's hop estimate to initiator
};

struct AssignPayload {
  NodeId initiator = 0;
  int position = 0;
  Slot slot = 0;
};

struct JoinRequestPayload {
  std::optional<Slot> proposal;
};

struct JoinGrantPayload {
  NodeId target = 0;
  Slot slot = 0;
};

struct ReleasePayload {
  NodeId initiator = 0;
  int dist = 0;
};

using ControlPayload = std::variant<std::monostate, ClearSlotsPayload, AssignPayload,
                                    JoinRequestPayload, JoinGrantPayload, ReleasePayload>;

struct Message {
  MessageBase base;
  std::optional<ArbField> arb;
  ControlPayload control;

  /// Trace tag: control variant name, else arbitration kind, else heartbeat.
  std::string tag() const;
};

/// What the kernel moves around. The body is opaque to the kernel.
struct WritePayload {
  NodeId sender = 0;
  Message body;
};

}  // namespace wacsim
