#include "wacsim/verifier.hpp"

#include <algorithm>
#include <deque>

namespace wacsim {

namespace {

bool sets_intersect(const std::set<Slot>& a, const std::set<Slot>& b, Slot* where) {
  for (Slot s : a)
    if (b.count(s)) {
      if (where) *where = s;
      return true;
    }
  return false;
}

}  // namespace

LegitimacyReport check_legitimacy(const Topology& t, const GlobalSnapshot& snap) {
  LegitimacyReport rep;
  rep.frame = snap.frame;

  for (const auto& [u, su] : snap.nodes) {
    // (a) distance-2 disjointness
    for (NodeId v : t.distance_neighborhood(u, 2)) {
      if (v <= u) continue;
      auto it = snap.nodes.find(v);
      if (it == snap.nodes.end()) continue;
      Slot s = 0;
      if (sets_intersect(su.claim, it->second.claim, &s))
        rep.violations.push_back({"overlap", u, v, s});
    }
    // (b) joined and holding at least one slot
    if (!su.joined || su.claim.empty()) rep.violations.push_back({"unjoined", u, 0, 0});
    // (c) no reset activity
    if (su.mode != Mode::Idle)
      rep.violations.push_back({"active_reset", su.initiator.value_or(u), u, 0});
    // (d) direct tables fresh: every live neighbor recorded, recorded claim
    // equal to the real claim up to an announced pending activation, and no
    // records for gone nodes.
    const auto& nbrs = t.neighbors(u);
    for (NodeId j : nbrs) {
      auto rit = su.recorded.find(j);
      if (rit == su.recorded.end()) {
        rep.violations.push_back({"stale_table", u, j, 0});
        continue;
      }
      const auto& [rec_claim, rec_pending] = rit->second;
      const auto& actual = snap.nodes.at(j).claim;
      bool ok = std::includes(actual.begin(), actual.end(), rec_claim.begin(), rec_claim.end());
      if (ok) {
        std::set<Slot> ceiling = rec_claim;
        if (rec_pending) ceiling.insert(*rec_pending);
        ok = std::includes(ceiling.begin(), ceiling.end(), actual.begin(), actual.end());
      }
      if (!ok) rep.violations.push_back({"stale_table", u, j, 0});
    }
    for (const auto& [j, rec] : su.recorded)
      if (!nbrs.count(j)) rep.violations.push_back({"stale_table", u, j, 0});
  }

  rep.legitimate = rep.violations.empty();
  return rep;
}

Chi2Result oracle_distance2_coloring(const Topology& t) {
  auto ids = t.nodes();
  if (ids.size() > 12) throw SimError("oracle budget exceeded");
  Chi2Result res;
  if (ids.empty()) return res;

  std::size_t n = ids.size();
  std::map<NodeId, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index[ids[i]] = i;
  std::vector<std::vector<std::size_t>> adj2(n);
  for (std::size_t i = 0; i < n; ++i)
    for (NodeId v : t.distance_neighborhood(ids[i], 2)) adj2[i].push_back(index.at(v));

  // Order by square-graph degree, densest first, for earlier pruning.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return adj2[a].size() > adj2[b].size(); });

  std::vector<int> color(n, -1);
  auto feasible = [&](std::size_t v, int c) {
    for (std::size_t w : adj2[v])
      if (color[w] == c) return false;
    return true;
  };
  std::function<bool(std::size_t, int)> go = [&](std::size_t pos, int k) {
    if (pos == n) return true;
    std::size_t v = order[pos];
    int used_max = 0;
    for (std::size_t i = 0; i < pos; ++i) used_max = std::max(used_max, color[order[i]] + 1);
    int limit = std::min(k, used_max + 1);  // first use of a new color: lowest unused only
    for (int c = 0; c < limit; ++c) {
      if (!feasible(v, c)) continue;
      color[v] = c;
      if (go(pos + 1, k)) return true;
      color[v] = -1;
    }
    return false;
  };

  for (int k = 1; k <= int(n); ++k) {
    std::fill(color.begin(), color.end(), -1);
    if (go(0, k)) {
      res.chi2 = k;
      for (std::size_t i = 0; i < n; ++i) res.coloring[ids[i]] = color[i];
      return res;
    }
  }
  throw SimError("coloring search failed");  // unreachable: n colors always work
}

bool valid_distance2_assignment(const Topology& t,
                                const std::map<NodeId, std::set<Slot>>& claims) {
  for (const auto& [u, cu] : claims) {
    if (!t.has_node(u)) continue;
    for (NodeId v : t.distance_neighborhood(u, 2)) {
      if (v <= u) continue;
      auto it = claims.find(v);
      if (it != claims.end() && sets_intersect(cu, it->second, nullptr)) return false;
    }
  }
  return true;
}

// ---- ConvergenceMonitor ----

void ConvergenceMonitor::on_begin(const Topology&, const ProtocolConfig& cfg, std::uint64_t,
                                  Frame) {
  cfg_ = cfg;
}

void ConvergenceMonitor::on_event(const KernelEvent& ev) {
  if (ev.outcome != Outcome::Collision) return;
  collisions_++;
  // Every normal-frame transmission sits inside its sender's claim, so any
  // collision there is a claimed-slot collision. Recovery mini-slots are
  // id-unique; a collision there would be an engine defect and counts too.
  bad_before_ = std::max(bad_before_, ev.slot.frame + 1);
}

void ConvergenceMonitor::on_boundary(const Topology& t, const GlobalSnapshot& snap) {
  last_report_ = check_legitimacy(t, snap);
  last_boundary_ = snap.frame;
  boundaries_++;
  if (last_report_.legitimate) {
    legit_boundaries_++;
  } else {
    bad_before_ = std::max(bad_before_, snap.frame + 1);
    for (const auto& v : last_report_.violations) violation_counts_[v.kind]++;
  }
}

std::optional<Frame> ConvergenceMonitor::converged_at() const {
  if (last_boundary_ < 0) return std::nullopt;
  if (!last_report_.legitimate) return std::nullopt;
  if (bad_before_ > last_boundary_) return std::nullopt;
  return bad_before_;
}

// ---- ExclusionMonitor ----

void ExclusionMonitor::on_begin(const Topology& t, const ProtocolConfig&, std::uint64_t, Frame) {
  topo_ = t;
}

int ExclusionMonitor::distance_capped(NodeId a, NodeId b, int cap) const {
  if (!topo_.has_node(a) || !topo_.has_node(b)) return cap + 1;
  if (a == b) return 0;
  std::set<NodeId> seen{a};
  std::deque<std::pair<NodeId, int>> q{{a, 0}};
  while (!q.empty()) {
    auto [v, d] = q.front();
    q.pop_front();
    if (d == cap) continue;
    for (NodeId w : topo_.neighbors(v)) {
      if (w == b) return d + 1;
      if (seen.insert(w).second) q.emplace_back(w, d + 1);
    }
  }
  return cap + 1;
}

void ExclusionMonitor::on_mode_change(Frame frame, NodeId node, Mode mode,
                                      std::optional<NodeId> initiator, bool injected) {
  bool executing = (mode == Mode::Resetting || mode == Mode::Reassigning) && initiator;
  auto prev = member_of_.find(node);
  if (prev != member_of_.end() && (!executing || *initiator != prev->second)) {
    auto& members = active_[prev->second];
    members.erase(node);
    if (members.empty()) {
      active_.erase(prev->second);
      tainted_.erase(prev->second);
    }
    member_of_.erase(prev);
  }
  if (!executing) return;

  NodeId init = *initiator;
  bool was_active = active_.count(init) != 0;
  active_[init].insert(node);
  member_of_[node] = init;
  if (was_active) return;
  // A group that comes to life through injected state is the adversarial
  // initial condition; overlaps against it are recorded but are not a
  // failure of the protocol's own exclusion.
  tainted_[init] = injected;
  for (const auto& [other, members] : active_) {
    if (other == init) continue;
    int d = distance_capped(init, other, 4);
    bool pair_tainted = injected || tainted_[other];
    if (d <= 3) {
      if (pair_tainted)
        injected_overlaps_.push_back({frame, init, other, d});
      else
        violations_.push_back({frame, init, other, d});
    } else {
      if (!pair_tainted) concurrent_ok_.push_back({frame, init, other, d});
    }
  }
}

void ExclusionMonitor::on_topo_add(Frame, NodeId node, const std::set<NodeId>& attach) {
  topo_.add_node(node, attach);
}

void ExclusionMonitor::on_topo_remove(Frame, NodeId node) { topo_.remove_node(node); }

// ---- ScopeMonitor ----

void ScopeMonitor::on_begin(const Topology& t, const ProtocolConfig&, std::uint64_t, Frame) {
  topo_ = t;
}

void ScopeMonitor::on_reset_promoted(Frame, NodeId initiator, const std::vector<NodeId>&) {
  std::set<NodeId> allowed = topo_.distance_neighborhood(initiator, 2);
  allowed.insert(initiator);
  scope_[initiator] = std::move(allowed);
}

void ScopeMonitor::on_reset_released(Frame, NodeId initiator, bool) { scope_.erase(initiator); }

void ScopeMonitor::on_claim_change(Frame frame, NodeId node, const std::set<Slot>&,
                                   const std::set<Slot>&, const std::string& cause,
                                   std::optional<NodeId> initiator) {
  if (cause != "reset" || !initiator) return;
  auto it = scope_.find(*initiator);
  if (it == scope_.end()) {
    unattributed_++;  // residue of injected reset state, not a promoted reset
    return;
  }
  if (!it->second.count(node)) violations_.push_back({frame, *initiator, node});
}

void ScopeMonitor::on_topo_add(Frame, NodeId node, const std::set<NodeId>& attach) {
  topo_.add_node(node, attach);
}

void ScopeMonitor::on_topo_remove(Frame, NodeId node) { topo_.remove_node(node); }

// ---- StatsMonitor ----

void StatsMonitor::on_begin(const Topology&, const ProtocolConfig&, std::uint64_t, Frame) {}

void StatsMonitor::on_reset_promoted(Frame frame, NodeId initiator, const std::vector<NodeId>&) {
  resets++;
  reset_log.emplace_back(frame, initiator);
}

void StatsMonitor::on_reset_released(Frame, NodeId, bool forced) {
  if (forced) forced_releases++;
}

void StatsMonitor::on_join(Frame, NodeId, Slot, std::optional<NodeId>) { joins++; }

void StatsMonitor::on_boundary(const Topology&, const GlobalSnapshot& snap) {
  final_live_nodes = std::int64_t(snap.nodes.size());
  final_total_slots = 0;
  for (const auto& [u, s] : snap.nodes) final_total_slots += std::int64_t(s.claim.size());
}

void StatsMonitor::on_diagnostic(Frame, NodeId, const std::string& kind) { diagnostics[kind]++; }

void StatsMonitor::on_claim_change(Frame, NodeId, const std::set<Slot>&, const std::set<Slot>&,
                                   const std::string&, std::optional<NodeId>) {
  claim_changes++;
}

}  // namespace wacsim
