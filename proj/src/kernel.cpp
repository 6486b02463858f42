#include "wacsim/kernel.hpp"

namespace wacsim {

std::vector<KernelEvent> Kernel::step(const Topology& t,
                                      const std::map<NodeId, WritePayload>& transmitters,
                                      SlotIndex slot) {
  if (last_ && !(*last_ < slot)) throw SimError("time skew");
  last_ = slot;
  for (const auto& [u, payload] : transmitters) {
    if (!t.has_node(u)) throw SimError("ghost transmitter");
  }

  std::vector<KernelEvent> events;
  for (NodeId r : t.nodes()) {
    KernelEvent ev{r, slot, Outcome::Silence, std::nullopt};
    if (transmitters.count(r) == 0) {
      const WritePayload* only = nullptr;
      int writers = 0;
      for (NodeId n : t.neighbors(r)) {
        auto it = transmitters.find(n);
        if (it != transmitters.end()) {
          ++writers;
          only = &it->second;
        }
      }
      if (writers == 1) {
        ev.outcome = Outcome::Delivered;
        ev.payload = *only;
      } else if (writers >= 2) {
        ev.outcome = Outcome::Collision;
      }
    }
    events.push_back(std::move(ev));
  }
  return events;  // nodes() iterates in ascending id order
}

}  // namespace wacsim
