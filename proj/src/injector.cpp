#include "wacsim/injector.hpp"

#include <algorithm>

namespace wacsim {

namespace {

struct SplitMix {
  std::uint64_t s;
  std::uint64_t next() {
    s += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  std::uint64_t below(std::uint64_t n) { return n ? next() % n : 0; }
  bool chance(unsigned pct) { return below(100) < pct; }
};

std::set<Slot> random_claim(SplitMix& rng, Slot period, std::size_t min_n, std::size_t max_n) {
  std::set<Slot> out;
  std::size_t n = min_n + rng.below(max_n - min_n + 1);
  for (std::size_t i = 0; i < n; ++i) out.insert(Slot(rng.below(period)));
  return out;
}

}  // namespace

const char* perturbation_kind_name(PerturbationEvent::Kind k) {
  switch (k) {
    case PerturbationEvent::Kind::CorruptState: return "corrupt";
    case PerturbationEvent::Kind::CorruptAll: return "corrupt_all";
    case PerturbationEvent::Kind::Kill: return "kill";
    case PerturbationEvent::Kind::Join: return "join";
  }
  return "?";
}

std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  SplitMix m{a ^ (b * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL)};
  return m.next();
}

SensorCore FaultInjector::random_core(NodeId me, const ProtocolConfig& cfg,
                                      const std::vector<NodeId>& live_ids, Frame frame,
                                      std::uint64_t seed) {
  SplitMix rng{mix64(seed, me)};
  SensorCore c;
  c.claim = random_claim(rng, cfg.period, 1, 3);
  c.joined = rng.chance(85);
  c.tier = int(rng.below(2));
  c.streak = int(rng.below(3));
  if (rng.chance(15)) c.pending_extra = Slot(rng.below(cfg.period));

  unsigned mode_draw = unsigned(rng.below(100));
  if (mode_draw < 50)
    c.mode = Mode::Idle;
  else if (mode_draw < 65)
    c.mode = Mode::Scheduling;
  else if (mode_draw < 80)
    c.mode = Mode::Arbitrating;
  else if (mode_draw < 90)
    c.mode = Mode::Resetting;
  else
    c.mode = Mode::Reassigning;

  if (c.mode == Mode::Resetting || c.mode == Mode::Reassigning) {
    ResetPlan plan;
    plan.initiator = live_ids.empty() ? me : live_ids[rng.below(live_ids.size())];
    std::set<NodeId> parts{me, plan.initiator};
    for (std::size_t i = 0; i < 3 && !live_ids.empty(); ++i)
      if (rng.chance(50)) parts.insert(live_ids[rng.below(live_ids.size())]);
    plan.participants.assign(parts.begin(), parts.end());
    auto rho = cfg.rho(frame);
    plan.assign_start_rho = std::max<std::int64_t>(0, rho - 4 + std::int64_t(rng.below(9)));
    plan.promo_rho = plan.assign_start_rho - SensorNode::kAssignDelay;
    plan.dist = int(rng.below(3));
    auto it = std::find(plan.participants.begin(), plan.participants.end(), me);
    plan.position = int(it - plan.participants.begin());
    plan.last_confirm_rho = cfg.rho(frame);
    c.plan = plan;
    c.claim.clear();
    if (c.mode == Mode::Reassigning) c.claim = {Slot(rng.below(cfg.period))};
  }

  std::size_t entries = rng.below(5);
  for (std::size_t i = 0; i < entries && !live_ids.empty(); ++i) {
    NodeId j = live_ids[rng.below(live_ids.size())];
    if (j == me) continue;
    NeighborRecord r;
    r.claim = random_claim(rng, cfg.period, 0, 2);
    r.joined = rng.chance(90);
    r.idle = rng.chance(80);
    r.freshness = int(rng.below(2 * cfg.tau + 1));
    r.missed = int(rng.below(2 * cfg.tau + 1));
    std::size_t reports = rng.below(4);
    for (std::size_t k = 0; k < reports; ++k) {
      NodeId z = live_ids[rng.below(live_ids.size())];
      ReportedInfo info;
      info.claim = random_claim(rng, cfg.period, 0, 2);
      info.joined = rng.chance(90);
      info.at = std::max<Frame>(0, frame - Frame(rng.below(cfg.tau + 1)));
      r.reported[z] = std::move(info);
    }
    c.table[j] = std::move(r);
  }

  c.listen_frames = std::int64_t(rng.below(2 * cfg.tau + 1));
  c.stable_frames = std::int64_t(rng.below(cfg.tau + 1));
  c.frames_since_extra = std::int64_t(rng.below(2 * cfg.tau + 1));
  c.frames_since_mode_change = std::int64_t(rng.below(2 * cfg.tau + 1));
  return c;
}

bool FaultInjector::corrupt_all_cores(std::map<NodeId, SensorCore>& out, const Topology& t,
                                      const ProtocolConfig& cfg, Frame frame,
                                      std::uint64_t seed) {
  auto ids = t.nodes();
  std::vector<std::pair<NodeId, NodeId>> d2_pairs;
  for (NodeId u : ids)
    for (NodeId v : t.distance_neighborhood(u, 2))
      if (u < v) d2_pairs.emplace_back(u, v);

  for (std::uint64_t attempt = 0; attempt < 1000; ++attempt) {
    out.clear();
    for (NodeId u : ids)
      out[u] = random_core(u, cfg, ids, frame, mix64(seed, attempt * 0x10001ULL + 7));
    if (d2_pairs.empty()) return false;
    for (const auto& [u, v] : d2_pairs) {
      const auto& a = out.at(u);
      const auto& b = out.at(v);
      if (!a.joined || !b.joined) continue;
      for (Slot s : a.claim)
        if (b.claim.count(s)) return true;
    }
  }
  return false;  // keep the last draw; caller may log
}

}  // namespace wacsim
