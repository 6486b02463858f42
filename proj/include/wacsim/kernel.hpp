#pragma once

#include <map>
#include <optional>
#include <vector>

#include "wacsim/message.hpp"
#include "wacsim/topology.hpp"

namespace wacsim {

struct SlotIndex {
  Frame frame = 0;
  Slot slot_in_frame = 0;

  friend bool operator==(const SlotIndex&, const SlotIndex&) = default;
  friend auto operator<=>(const SlotIndex&, const SlotIndex&) = default;
};

enum class Outcome { Delivered, Collision, Silence };

struct KernelEvent {
  NodeId receiver = 0;
  SlotIndex slot;
  Outcome outcome = Outcome::Silence;
  std::optional<WritePayload> payload;  // set iff Delivered
};

/// Write-all-with-collision semantics over one slot: a transmission writes
/// all neighbors atomically; two or more transmitting neighbors of a node
/// cancel out at that node; a transmitting node hears nothing itself
/// (half-duplex). Pure in (topology, transmitters, slot); events come back
/// sorted by receiver id.
class Kernel {
 public:
  std::vector<KernelEvent> step(const Topology& t,
                                const std::map<NodeId, WritePayload>& transmitters,
                                SlotIndex slot);

  /// Runs slots 0..frame_length-1 of one frame; `schedule` maps slot_in_frame
  /// to that slot's transmitter set.
  template <typename ScheduleFn>
  std::vector<KernelEvent> run_frame(const Topology& t, ScheduleFn&& schedule,
                                     Frame frame, Slot frame_length) {
    std::vector<KernelEvent> out;
    for (Slot s = 0; s < frame_length; ++s) {
      auto events = step(t, schedule(s), SlotIndex{frame, s});
      out.insert(out.end(), events.begin(), events.end());
    }
    return out;
  }

  void reset_clock() { last_.reset(); }

 private:
  std::optional<SlotIndex> last_;
};

}  // namespace wacsim
