#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "wacsim/protocol.hpp"
#include "wacsim/topology.hpp"

namespace wacsim {

struct PerturbationEvent {
  enum class Kind { CorruptState, CorruptAll, Kill, Join };

  Frame at_frame = 0;
  Kind kind = Kind::CorruptAll;
  NodeId node = 0;              // CorruptState / Kill / Join
  std::uint64_t seed = 0;       // CorruptState / CorruptAll
  std::set<NodeId> attach_to;   // Join
};

const char* perturbation_kind_name(PerturbationEvent::Kind k);

/// Deterministic 64-bit mixer; same inputs, same corruption, on any host.
std::uint64_t mix64(std::uint64_t a, std::uint64_t b);

class FaultInjector {
 public:
  /// Domain-valid but otherwise arbitrary sensor state: slots inside
  /// [0, period), counters in [0, 2*tau], any reset mode with a plausible
  /// plan. Soft protocol invariants are not respected on purpose.
  static SensorCore random_core(NodeId me, const ProtocolConfig& cfg,
                                const std::vector<NodeId>& live_ids, Frame frame,
                                std::uint64_t seed);

  /// Corrupts every sensor; re-draws (bounded) until two joined sensors
  /// within distance 2 share a slot, so tests that demand an illegitimate
  /// start get one by construction. Returns whether an overlap was achieved.
  static bool corrupt_all_cores(std::map<NodeId, SensorCore>& out, const Topology& t,
                                const ProtocolConfig& cfg, Frame frame, std::uint64_t seed);
};

}  // namespace wacsim
