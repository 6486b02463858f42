#include "wacsim/reassign.hpp"

#include <algorithm>

namespace wacsim {

std::map<NodeId, std::set<Slot>> reassign_slots(std::vector<ReassignParticipant> participants,
                                                Slot period) {
  std::sort(participants.begin(), participants.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  std::map<NodeId, std::set<Slot>> out;
  for (const auto& p : participants) {
    std::set<Slot> taken = p.frozen_claims;
    for (NodeId q : p.nearby_participants) {
      auto it = out.find(q);
      if (it != out.end()) taken.insert(it->second.begin(), it->second.end());
    }
    Slot pick = 0;
    while (pick < period && taken.count(pick)) ++pick;
    if (pick >= period) throw SimError("period too small");
    out[p.id] = {pick};
  }
  return out;
}

std::map<NodeId, std::set<Slot>> assign_all(const Topology& t, Slot period) {
  std::vector<ReassignParticipant> ps;
  for (NodeId u : t.nodes()) {
    ReassignParticipant p;
    p.id = u;
    p.nearby_participants = t.distance_neighborhood(u, 2);
    ps.push_back(std::move(p));
  }
  return reassign_slots(std::move(ps), period);
}

}  // namespace wacsim
