#pragma once

#include <map>
#include <set>
#include <vector>

#include "wacsim/message.hpp"
#include "wacsim/topology.hpp"

namespace wacsim {

/// One participant of a reassignment pass, with everything it must avoid:
/// fellow participants inside its distance-2 range (earlier picks constrain
/// later ones) and frozen claims of outsiders inside that range.
struct ReassignParticipant {
  NodeId id = 0;
  std::set<NodeId> nearby_participants;  // within distance 2, may include later ids
  std::set<Slot> frozen_claims;          // union of outsider claims within distance 2
};

/// Greedy in ascending id order: each participant takes the smallest slot in
/// [0, period) not held by anything within its distance 2. Throws
/// SimError("period too small") when a participant has no free slot.
std::map<NodeId, std::set<Slot>> reassign_slots(std::vector<ReassignParticipant> participants,
                                                Slot period);

/// Whole-network assignment with no frozen outsiders; used to construct
/// legitimate initial states.
std::map<NodeId, std::set<Slot>> assign_all(const Topology& t, Slot period);

}  // namespace wacsim
