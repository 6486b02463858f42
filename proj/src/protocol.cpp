#include "wacsim/protocol.hpp"

#include <algorithm>

namespace wacsim {

namespace {

ProtocolSink null_sink;

bool intersects(const std::set<Slot>& a, const std::set<Slot>& b) {
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib)
      ++ia;
    else if (*ib < *ia)
      ++ib;
    else
      return true;
  }
  return false;
}

// (tier, id) lexicographic; lower wins arbitration.
bool key_less(int tier_a, NodeId a, int tier_b, NodeId b) {
  if (tier_a != tier_b) return tier_a < tier_b;
  return a < b;
}

}  // namespace

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::Idle: return "idle";
    case Mode::Scheduling: return "scheduling";
    case Mode::Arbitrating: return "arbitrating";
    case Mode::Resetting: return "resetting";
    case Mode::Reassigning: return "reassigning";
  }
  return "?";
}

SensorNode::SensorNode(NodeId me, const ProtocolConfig& cfg, ProtocolSink* sink)
    : me_(me), cfg_(cfg), sink_(sink ? sink : &null_sink) {}

std::optional<NodeId> SensorNode::reset_initiator() const {
  switch (core_.mode) {
    case Mode::Scheduling:
    case Mode::Arbitrating:
      return me_;
    case Mode::Resetting:
    case Mode::Reassigning:
      if (core_.plan) return core_.plan->initiator;
      return me_;
    default:
      return std::nullopt;
  }
}

std::map<NodeId, ReportedInfo> SensorNode::view() const {
  std::map<NodeId, ReportedInfo> v;
  for (const auto& [j, r] : core_.table) {
    ReportedInfo info;
    info.claim = r.effective();
    info.joined = r.joined;
    info.at = -1;  // direct entries are authoritative, never displaced
    v[j] = std::move(info);
  }
  for (const auto& [j, r] : core_.table) {
    for (const auto& [k, info] : r.reported) {
      if (k == me_ || core_.table.count(k)) continue;
      auto it = v.find(k);
      if (it == v.end() || info.at > it->second.at) v[k] = info;
    }
  }
  return v;
}

std::set<Slot> SensorNode::taken_in_view(bool include_self) const {
  std::set<Slot> taken;
  for (const auto& [id, info] : view()) taken.insert(info.claim.begin(), info.claim.end());
  if (include_self) {
    taken.insert(core_.claim.begin(), core_.claim.end());
    if (core_.pending_extra) taken.insert(*core_.pending_extra);
  }
  return taken;
}

std::optional<Slot> SensorNode::smallest_free(bool include_self) const {
  auto taken = taken_in_view(include_self);
  for (Slot s = 0; s < cfg_.period; ++s)
    if (!taken.count(s)) return s;
  return std::nullopt;
}

std::optional<Slot> SensorNode::smallest_multi_owned() const {
  auto v = view();
  for (Slot s = 0; s < cfg_.period; ++s) {
    bool any_owner = false;
    bool all_multi = true;
    for (const auto& [id, info] : v) {
      if (!info.claim.count(s)) continue;
      any_owner = true;
      if (info.claim.size() < 2) all_multi = false;
    }
    if (any_owner && all_multi) return s;
  }
  return std::nullopt;
}

std::optional<int> SensorNode::evidence_tier() const {
  std::set<Slot> mine = core_.claim;
  if (core_.pending_extra) mine.insert(*core_.pending_extra);

  // Overlaps a sensor can certify: every pair below is within mutual
  // distance 2 by construction of the table.
  for (const auto& [j, r] : core_.table) {
    if (intersects(mine, r.effective())) return 0;
    for (const auto& [k, info] : r.reported) {
      if (k == me_) continue;
      if (intersects(mine, info.claim)) return 0;
      if (intersects(r.effective(), info.claim)) return 0;
    }
    for (auto it1 = r.reported.begin(); it1 != r.reported.end(); ++it1) {
      if (it1->first == me_) continue;
      for (auto it2 = std::next(it1); it2 != r.reported.end(); ++it2) {
        if (it2->first == me_) continue;
        if (intersects(it1->second.claim, it2->second.claim)) return 0;
      }
    }
  }
  for (auto it1 = core_.table.begin(); it1 != core_.table.end(); ++it1)
    for (auto it2 = std::next(it1); it2 != core_.table.end(); ++it2)
      if (intersects(it1->second.effective(), it2->second.effective())) return 0;

  // Live neighbor whose claimed-slot traffic never arrives: something in
  // this neighborhood collides with it.
  for (const auto& [j, r] : core_.table)
    if (r.joined && !r.claim.empty() && r.missed >= int(cfg_.tau)) return 1;

  return std::nullopt;
}

std::optional<int> SensorNode::evidence_tier_timeout_only() const {
  for (const auto& [j, r] : core_.table)
    if (r.joined && !r.claim.empty() && r.missed >= int(cfg_.tau)) return 1;
  return std::nullopt;
}

bool SensorNode::overlaps_all_yieldable() const {
  std::set<Slot> mine = core_.claim;
  if (core_.pending_extra) mine.insert(*core_.pending_extra);
  std::size_t my_n = mine.size();
  auto v = view();
  auto pair_yieldable = [](std::size_t a, std::size_t b) { return a >= 2 || b >= 2; };
  for (auto it1 = v.begin(); it1 != v.end(); ++it1) {
    if (intersects(mine, it1->second.claim) &&
        !pair_yieldable(my_n, it1->second.claim.size()))
      return false;
    for (auto it2 = std::next(it1); it2 != v.end(); ++it2)
      if (intersects(it1->second.claim, it2->second.claim) &&
          !pair_yieldable(it1->second.claim.size(), it2->second.claim.size()))
        return false;
  }
  return true;
}

MessageBase SensorNode::make_base() const {
  MessageBase b;
  if (core_.joined) b.claim = core_.claim;
  b.pending_extra = core_.joined ? core_.pending_extra : std::nullopt;
  b.joined = core_.joined;
  b.idle = core_.mode == Mode::Idle;
  if ((core_.mode == Mode::Resetting || core_.mode == Mode::Reassigning) && core_.plan) {
    b.active_reset = core_.plan->initiator;
    b.active_reset_dist = core_.plan->dist;
  }
  for (const auto& [j, r] : core_.table) {
    DigestEntry e;
    e.id = j;
    e.claim = r.effective();
    e.joined = r.joined;
    b.digest.push_back(std::move(e));
  }
  return b;
}

std::optional<ArbField> SensorNode::arb_out(std::int64_t rho) const {
  if (core_.mode == Mode::Scheduling || core_.mode == Mode::Arbitrating)
    return ArbField{me_, core_.tier, 0, rho};
  // Relay the best live competitor we can vouch to be within distance 3 of
  // the receiver. Executing resets are not relayed; participants beacon them.
  std::optional<ArbField> best;
  for (const auto& [init, e] : core_.arb) {
    if (init == me_ || e.executing) continue;
    if (e.last_rho < rho - kArbExpiry) continue;
    if (e.est > 2) continue;
    if (!best || key_less(e.tier, init, best->tier, best->initiator))
      best = ArbField{init, e.tier, e.est, e.last_rho};
  }
  return best;
}

std::optional<Message> SensorNode::transmit_decision(Frame frame, Slot slot) const {
  if (cfg_.is_recovery(frame)) {
    if (cfg_.n_cap == 0 || slot != me_ % cfg_.n_cap) return std::nullopt;
    if (!core_.joined && core_.listen_frames < std::int64_t(cfg_.tau) + 1) return std::nullopt;
    auto rho = cfg_.rho(frame);
    Message m;
    m.base = make_base();
    if (core_.plan && (core_.mode == Mode::Resetting || core_.mode == Mode::Reassigning)) {
      const auto& pl = *core_.plan;
      bool isinit = pl.initiator == me_;
      if (isinit && (rho == pl.promo_rho + 1 || rho == pl.promo_rho + 2)) {
        m.control = ClearSlotsPayload{me_, pl.participants, pl.assign_start_rho, 0};
      } else if (core_.pending_assign) {
        m.control = *core_.pending_assign;
      } else if (isinit && rho == pl.release_rho()) {
        m.control = ReleasePayload{me_, 0};
      } else if (core_.pending_clear_relay) {
        m.control = *core_.pending_clear_relay;
      }
    } else if (core_.pending_release_relay) {
      m.control = *core_.pending_release_relay;
    } else if (core_.pending_grant) {
      if (core_.pending_grant->slot < cfg_.period && !core_.claim.count(core_.pending_grant->slot))
        m.control = *core_.pending_grant;
    } else if (!core_.joined) {
      m.control = JoinRequestPayload{smallest_free(false)};
    }
    m.arb = arb_out(rho);
    return m;
  }
  if (core_.joined && core_.mode == Mode::Idle && core_.claim.count(slot)) {
    Message m;
    m.base = make_base();
    return m;
  }
  return std::nullopt;
}

void SensorNode::set_claim(const std::set<Slot>& to, const std::string& cause,
                           std::optional<NodeId> initiator, Frame frame) {
  if (to == core_.claim) return;
  sink_->claim_changed(me_, core_.claim, to, cause, initiator, frame);
  core_.claim = to;
  core_.stable_frames = 0;
}

void SensorNode::set_mode(Mode m, Frame frame, std::optional<NodeId> initiator) {
  if (m == core_.mode) return;
  core_.mode = m;
  core_.frames_since_mode_change = 0;
  core_.stable_frames = 0;
  sink_->mode_changed(me_, m, initiator, frame, false);
}

void SensorNode::check_abandon(Frame frame) {
  if (core_.mode != Mode::Scheduling && core_.mode != Mode::Arbitrating) return;
  auto rho = cfg_.rho(frame);
  for (const auto& [init, e] : core_.arb) {
    if (init == me_) continue;
    if (e.last_rho < rho - kArbExpiry) continue;
    if (e.est > 3) continue;
    if (key_less(e.tier, init, core_.tier, me_)) {
      set_mode(Mode::Idle, frame);
      core_.streak = 0;
      core_.first_bcast_rho = -1;
      sink_->reset_abandoned(me_, frame);
      return;
    }
  }
}

void SensorNode::observe(Frame frame, Slot slot, std::optional<NodeId> from,
                         const std::optional<Message>& delivered,
                         const std::optional<Message>& sent) {
  if (sent) {
    bool im_initiator = core_.plan && core_.plan->initiator == me_;
    if (std::holds_alternative<ClearSlotsPayload>(sent->control) && !im_initiator)
      core_.pending_clear_relay.reset();
    if (std::holds_alternative<ReleasePayload>(sent->control) && !im_initiator)
      core_.pending_release_relay.reset();
    if (std::holds_alternative<AssignPayload>(sent->control)) core_.pending_assign.reset();
    if (std::holds_alternative<JoinGrantPayload>(sent->control)) core_.pending_grant.reset();
    if (sent->arb && sent->arb->dist == 0 &&
        (core_.mode == Mode::Scheduling || core_.mode == Mode::Arbitrating)) {
      if (core_.first_bcast_rho < 0) core_.first_bcast_rho = cfg_.rho(frame);
      if (core_.mode == Mode::Scheduling) set_mode(Mode::Arbitrating, frame, me_);
    }
  }
  // A grant that could not be sent in our mini-slot is stale; the joiner
  // will re-propose.
  if (cfg_.is_recovery(frame) && cfg_.n_cap != 0 && slot == me_ % cfg_.n_cap &&
      core_.pending_grant && !(sent && std::holds_alternative<JoinGrantPayload>(sent->control)))
    core_.pending_grant.reset();

  if (delivered && from) absorb_message(frame, slot, *from, *delivered);
}

void SensorNode::absorb_message(Frame frame, Slot slot, NodeId from, const Message& msg) {
  auto& rec = core_.table[from];
  bool claim_changed = rec.claim != msg.base.claim;
  bool idle_rose = !rec.idle && msg.base.idle;
  bool joined_dropped = rec.joined && !msg.base.joined;
  rec.claim = msg.base.claim;
  rec.pending = msg.base.pending_extra;
  rec.joined = msg.base.joined;
  rec.idle = msg.base.idle;
  rec.active_reset = msg.base.active_reset;
  rec.delivered_now = true;
  if (!cfg_.is_recovery(frame) && msg.base.claim.count(slot)) rec.delivered_claimed = true;
  if (claim_changed || idle_rose || joined_dropped || rec.claim.empty()) rec.missed = 0;
  rec.reported.clear();
  for (const auto& e : msg.base.digest) {
    ReportedInfo info;
    info.claim = e.claim;
    info.joined = e.joined;
    info.at = frame;
    rec.reported[e.id] = std::move(info);
  }

  auto rho = cfg_.rho(frame);
  if (msg.arb && msg.arb->initiator != me_) {
    auto& e = core_.arb[msg.arb->initiator];
    e.est = std::min(e.est, msg.arb->dist + 1);
    e.tier = std::min(e.tier, msg.arb->tier);
    e.last_rho = std::max(e.last_rho, msg.arb->origin_rho);
  }
  if (msg.base.active_reset && *msg.base.active_reset != me_) {
    auto& e = core_.arb[*msg.base.active_reset];
    e.est = std::min(e.est, msg.base.active_reset_dist + 1);
    e.tier = -1;
    e.executing = true;
    e.last_rho = rho;
  }
  if (core_.plan) {
    // A participant is vouched for by traffic flowing outward from the
    // initiator, never by peers at its own hop or farther.
    bool confirms = msg.base.active_reset == core_.plan->initiator &&
                    (core_.plan->initiator == me_ ||
                     msg.base.active_reset_dist < core_.plan->dist || from == core_.plan->initiator);
    if (const auto* cp = std::get_if<ClearSlotsPayload>(&msg.control))
      confirms = confirms || (cp->initiator == core_.plan->initiator && cp->dist < core_.plan->dist);
    if (const auto* ap = std::get_if<AssignPayload>(&msg.control))
      confirms = confirms || ap->initiator == core_.plan->initiator;
    if (const auto* rp = std::get_if<ReleasePayload>(&msg.control))
      confirms = confirms || (rp->initiator == core_.plan->initiator && rp->dist < core_.plan->dist);
    if (confirms) core_.plan->last_confirm_rho = rho;
  }

  if (const auto* p = std::get_if<ClearSlotsPayload>(&msg.control)) {
    handle_clear(frame, *p);
  } else if (const auto* p = std::get_if<ReleasePayload>(&msg.control)) {
    handle_release(frame, *p);
  } else if (std::holds_alternative<JoinRequestPayload>(msg.control)) {
    rec.starved_joiner = !std::get<JoinRequestPayload>(msg.control).proposal.has_value();
    handle_join_request(frame, from, msg);
  } else if (const auto* p = std::get_if<JoinGrantPayload>(&msg.control)) {
    handle_join_grant(frame, from, *p);
  }
  // Assign payloads carry no information beyond the sender's base claim.

  check_abandon(frame);
}

void SensorNode::handle_clear(Frame frame, const ClearSlotsPayload& p) {
  if (core_.mode == Mode::Resetting || core_.mode == Mode::Reassigning) {
    if (!core_.plan || core_.plan->initiator != p.initiator) {
      core_.diag["ignored_clear"]++;
      sink_->diagnostic(me_, "ignored_clear", frame);
    }
    return;
  }
  if (!core_.joined) return;
  auto it = std::find(p.participants.begin(), p.participants.end(), me_);
  if (it == p.participants.end()) return;

  if (core_.mode == Mode::Scheduling || core_.mode == Mode::Arbitrating) {
    core_.streak = 0;
    sink_->reset_abandoned(me_, frame);
  }
  ResetPlan plan;
  plan.initiator = p.initiator;
  plan.participants = p.participants;
  plan.assign_start_rho = p.assign_start_rho;
  plan.promo_rho = p.assign_start_rho - kAssignDelay;
  plan.dist = p.dist + 1;
  plan.position = int(it - p.participants.begin());
  plan.last_confirm_rho = cfg_.rho(frame);
  core_.plan = plan;
  core_.pending_extra.reset();
  core_.pending_announced = false;
  core_.pending_assign.reset();
  set_claim({}, "reset", p.initiator, frame);
  set_mode(Mode::Resetting, frame, p.initiator);
  if (plan.dist <= 1) {
    ClearSlotsPayload relay = p;
    relay.dist = plan.dist;
    core_.pending_clear_relay = relay;
  }
}

void SensorNode::finish_reset(Frame frame) {
  core_.plan.reset();
  core_.pending_assign.reset();
  core_.pending_clear_relay.reset();
  core_.streak = 0;
  for (auto& [j, r] : core_.table) r.missed = 0;
  set_mode(Mode::Idle, frame);
}

void SensorNode::handle_release(Frame frame, const ReleasePayload& p) {
  if (!core_.plan || core_.plan->initiator != p.initiator) return;
  if (core_.mode != Mode::Resetting && core_.mode != Mode::Reassigning) return;
  int mydist = core_.plan->dist;
  if (mydist <= 1 && p.initiator != me_) {
    ReleasePayload relay = p;
    relay.dist = mydist;
    core_.pending_release_relay = relay;
  }
  finish_reset(frame);
}

void SensorNode::handle_join_request(Frame frame, NodeId from, const Message& msg) {
  const auto& p = std::get<JoinRequestPayload>(msg.control);
  if (!core_.joined || core_.mode != Mode::Idle || msg.base.joined) return;
  auto rho = cfg_.rho(frame);
  for (const auto& [init, e] : core_.arb)
    if (e.last_rho >= rho - kArbExpiry) return;  // reset activity nearby; joins wait

  std::optional<NodeId> min_joined;
  for (const auto& e : msg.base.digest) {
    if (e.joined && (!min_joined || e.id < *min_joined)) min_joined = e.id;
    if (!e.joined && e.id < from) return;  // a lower-id joiner goes first
  }
  if (!min_joined || *min_joined != me_) return;
  if (!p.proposal || *p.proposal >= cfg_.period) return;
  // The proposal is built from the joiner's own two-hop view; the granter
  // can only vouch for its own slots. A residual stale grant is repaired by
  // the ordinary overlap machinery.
  if (core_.claim.count(*p.proposal)) return;
  if (core_.pending_extra && *core_.pending_extra == *p.proposal) return;
  if (core_.pending_grant && core_.pending_grant->target <= from) return;
  core_.pending_grant = JoinGrantPayload{from, *p.proposal};
}

void SensorNode::handle_join_grant(Frame frame, NodeId from, const JoinGrantPayload& p) {
  if (p.target != me_ || core_.joined) return;
  if (p.slot >= cfg_.period) {
    core_.diag["malformed_grant"]++;
    return;
  }
  set_claim({p.slot}, "grant", std::nullopt, frame);
  core_.joined = true;
  core_.frames_since_extra = 0;
  set_mode(Mode::Idle, frame);
  sink_->join_event(me_, p.slot, from, frame);
}

void SensorNode::promote(Frame frame) {
  auto rho = cfg_.rho(frame);
  std::vector<NodeId> parts{me_};
  for (const auto& [id, info] : view())
    if (info.joined) parts.push_back(id);
  std::sort(parts.begin(), parts.end());
  ResetPlan plan;
  plan.initiator = me_;
  plan.participants = parts;
  plan.promo_rho = rho;
  plan.assign_start_rho = rho + kAssignDelay;
  plan.dist = 0;
  plan.position = int(std::find(parts.begin(), parts.end(), me_) - parts.begin());
  plan.last_confirm_rho = rho;
  core_.plan = plan;
  core_.streak = 0;
  core_.first_bcast_rho = -1;
  core_.pending_extra.reset();
  core_.pending_announced = false;
  sink_->reset_promoted(me_, parts, frame);
  set_claim({}, "reset", me_, frame);
  set_mode(Mode::Resetting, frame, me_);
}

void SensorNode::force_release(Frame frame, const std::string& why) {
  core_.diag[why]++;
  sink_->diagnostic(me_, why, frame);
  if (core_.plan && core_.plan->initiator == me_) sink_->reset_released(me_, frame, true);
  finish_reset(frame);
}

void SensorNode::do_assign_round(Frame frame) {
  auto free = smallest_free(false);
  if (!free) free = smallest_multi_owned();  // displaces extras; owners yield
  if (!free) throw SimError("period too small");
  core_.pending_assign = AssignPayload{core_.plan->initiator, core_.plan->position, *free};
  set_claim({*free}, "reset", core_.plan->initiator, frame);
  set_mode(Mode::Reassigning, frame, core_.plan->initiator);
}

void SensorNode::recovery_frame_end(Frame frame) {
  auto rho = cfg_.rho(frame);
  std::erase_if(core_.arb, [&](const auto& kv) { return kv.second.last_rho < rho - kArbExpiry; });

  if (core_.mode == Mode::Arbitrating) {
    core_.streak++;
    bool heard_out = core_.first_bcast_rho >= 0 && rho - core_.first_bcast_rho >= kArbStreak - 1;
    if (core_.streak >= kArbStreak && heard_out) {
      if (evidence_tier())
        promote(frame);
      else {
        set_mode(Mode::Idle, frame);
        core_.streak = 0;
        core_.first_bcast_rho = -1;
        sink_->reset_abandoned(me_, frame);
      }
    }
  }

  if ((core_.mode == Mode::Resetting || core_.mode == Mode::Reassigning) && core_.plan) {
    if (core_.plan->assign_start_rho > rho + kPlanFutureLimit ||
        (core_.plan->dist == 0) != (core_.plan->initiator == me_)) {
      force_release(frame, "malformed_plan");
    } else if (core_.plan->participants.size() >= 2 &&
               rho - core_.plan->last_confirm_rho >= kConfirmExpiry) {
      force_release(frame, "reset_orphaned");
    } else if (rho > core_.plan->release_rho() + kReleaseSlack) {
      force_release(frame, "reset_timeout");
    } else if (core_.plan->initiator == me_ && rho == core_.plan->release_rho()) {
      sink_->reset_released(me_, frame, false);
      finish_reset(frame);
    }
  }

  if (!core_.joined && core_.listen_frames >= std::int64_t(cfg_.tau) + 1) {
    bool joined_neighbor = false;
    for (const auto& [j, r] : core_.table)
      if (r.joined) joined_neighbor = true;
    bool smaller_unjoined = false;
    for (const auto& [id, info] : view())
      if (!info.joined && id < me_) smaller_unjoined = true;
    if (!joined_neighbor && !smaller_unjoined) {
      auto s = smallest_free(false);
      if (s) {
        set_claim({*s}, "self_grant", std::nullopt, frame);
        core_.joined = true;
        core_.frames_since_extra = 0;
        set_mode(Mode::Idle, frame);
        sink_->join_event(me_, *s, std::nullopt, frame);
      }
    }
  }
}

void SensorNode::extension_tick(Frame frame) {
  auto rho = cfg_.rho(frame);
  bool arb_quiet = true;
  for (const auto& [init, e] : core_.arb)
    if (e.last_rho >= rho - kArbExpiry) arb_quiet = false;

  if (core_.claim.empty()) {
    // Lost every slot (dead initiator, corrupted state): re-acquire one,
    // lowest claimless id in the two-hop view first.
    if (!arb_quiet || core_.frames_since_mode_change < 2) return;
    for (const auto& [id, info] : view())
      if (info.joined && info.claim.empty() && id < me_) return;
    auto s = smallest_free(false);
    if (s) {
      set_claim({*s}, "reacquire", std::nullopt, frame);
      core_.frames_since_extra = 0;
    }
    return;
  }

  // A joiner that sees no free slot anywhere takes precedence over
  // bandwidth growth: holders of extra slots give one back.
  bool starving_neighbor = false;
  bool unjoined_neighbor = false;
  for (const auto& [j, r] : core_.table) {
    if (!r.joined) unjoined_neighbor = true;
    if (!r.joined && r.starved_joiner) starving_neighbor = true;
  }
  if (starving_neighbor && core_.claim.size() > 1) {
    std::set<Slot> to = core_.claim;
    to.erase(*to.rbegin());
    core_.pending_extra.reset();
    core_.pending_announced = false;
    set_claim(to, "yield", std::nullopt, frame);
    return;
  }

  if (core_.pending_extra) {
    if (core_.pending_announced) {
      std::set<Slot> to = core_.claim;
      to.insert(*core_.pending_extra);
      set_claim(to, "extension", std::nullopt, frame);
      core_.pending_extra.reset();
      core_.pending_announced = false;
      core_.frames_since_extra = 0;
    } else {
      core_.pending_announced = true;
    }
    return;
  }

  if (!cfg_.bandwidth_extension || !arb_quiet || unjoined_neighbor) return;
  if (core_.stable_frames < std::int64_t(cfg_.tau)) return;
  if (core_.frames_since_extra < std::int64_t(cfg_.tau)) return;
  for (const auto& [id, info] : view())
    if (info.joined && id < me_) return;  // only the local minimum grows
  auto s = smallest_free(true);
  if (s) {
    core_.pending_extra = s;
    core_.pending_announced = false;
  }
}

bool SensorNode::frame_end(Frame frame) {
  bool recovery = cfg_.is_recovery(frame);
  core_.frames_since_mode_change++;
  core_.frames_since_extra++;
  if (!core_.joined) core_.listen_frames++;

  for (auto it = core_.table.begin(); it != core_.table.end();) {
    auto& r = it->second;
    if (r.delivered_now)
      r.freshness = 0;
    else
      r.freshness++;
    if (!recovery) {
      if (r.delivered_claimed)
        r.missed = 0;
      else if (!r.claim.empty() && r.joined && r.idle)
        r.missed++;
    }
    r.delivered_now = false;
    r.delivered_claimed = false;
    if (r.freshness >= int(cfg_.tau))
      it = core_.table.erase(it);  // departed (or phantom): slots become free
    else
      ++it;
  }

  // Extras conflicting inside the two-hop view are given back before any
  // reset gets considered; a single remaining slot is defended the hard way.
  if (core_.joined &&
      (core_.mode == Mode::Idle || core_.mode == Mode::Scheduling ||
       core_.mode == Mode::Arbitrating)) {
    if (core_.pending_extra && taken_in_view(false).count(*core_.pending_extra)) {
      core_.pending_extra.reset();
      core_.pending_announced = false;
    }
    if (core_.claim.size() > 1) {
      auto taken = taken_in_view(false);
      std::set<Slot> keep;
      for (Slot s : core_.claim)
        if (!taken.count(s)) keep.insert(s);
      if (keep.empty()) keep.insert(*core_.claim.begin());
      if (keep != core_.claim) set_claim(keep, "yield", std::nullopt, frame);
    }
  }

  bool scheduled = false;
  auto ev = evidence_tier();
  if (ev && *ev == 0 && overlaps_all_yieldable()) ev = evidence_tier_timeout_only();
  if (core_.mode == Mode::Idle && core_.joined && ev) {
    core_.tier = *ev;
    core_.streak = 0;
    set_mode(Mode::Scheduling, frame, me_);
    scheduled = true;
    check_abandon(frame);
  } else if (core_.mode == Mode::Scheduling || core_.mode == Mode::Arbitrating) {
    if (!ev) {
      set_mode(Mode::Idle, frame);
      core_.streak = 0;
      core_.first_bcast_rho = -1;
      sink_->reset_abandoned(me_, frame);
    } else {
      if (*ev < core_.tier) {
        core_.tier = *ev;
        core_.streak = 0;
      }
      check_abandon(frame);
    }
  }

  if (recovery) recovery_frame_end(frame);

  // Pick for the round that opens next frame: by then every earlier pick is
  // visible two hops out.
  Frame next = frame + 1;
  if (cfg_.is_recovery(next) && core_.plan && core_.mode == Mode::Resetting &&
      core_.plan->position >= 0 &&
      cfg_.rho(next) ==
          core_.plan->assign_start_rho + std::int64_t(kRoundSpacing) * core_.plan->position)
    do_assign_round(frame);

  bool stable_now = core_.mode == Mode::Idle && core_.joined && !ev;
  if (stable_now)
    for (const auto& [j, r] : core_.table)
      if (r.missed > 0) stable_now = false;
  if (stable_now)
    core_.stable_frames++;
  else
    core_.stable_frames = 0;

  if (!recovery && core_.joined && core_.mode == Mode::Idle) extension_tick(frame);

  return scheduled;
}

std::optional<Message> SensorNode::on_slot(Frame frame, Slot slot, std::optional<NodeId> from,
                                           const std::optional<Message>& delivered) {
  auto decision = transmit_decision(frame, slot);
  observe(frame, slot, from, delivered, decision);
  return decision;
}

void SensorNode::overwrite(SensorCore core, Frame frame) {
  if (core.claim != core_.claim)
    sink_->claim_changed(me_, core_.claim, core.claim, "corrupt", std::nullopt, frame);
  Mode old = core_.mode;
  core_ = std::move(core);
  if (core_.mode != old) sink_->mode_changed(me_, core_.mode, reset_initiator(), frame, true);
}

void SensorNode::init_legitimate(const std::set<Slot>& claim,
                                 const std::map<NodeId, NeighborRecord>& table) {
  core_ = SensorCore{};
  core_.claim = claim;
  core_.joined = true;
  core_.mode = Mode::Idle;
  core_.table = table;
}

}  // namespace wacsim
