#include "wacsim/message.hpp"

namespace wacsim {

std::string Message::tag() const {
  if (std::holds_alternative<ClearSlotsPayload>(control)) return "clear_slots";
  if (std::holds_alternative<AssignPayload>(control)) return "assign";
  if (std::holds_alternative<JoinRequestPayload>(control)) return "join_request";
  if (std::holds_alternative<JoinGrantPayload>(control)) return "join_grant";
  if (std::holds_alternative<ReleasePayload>(control)) return "release";
  if (arb) return arb->dist == 0 ? "reset_request" : "reset_grant_relay";
  return "heartbeat";
}

}  // namespace wacsim
