#include "wacsim/simulation.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace wacsim {

std::string TopologySpec::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::Grid: os << "grid:" << w << "x" << h; break;
    case Kind::Path: os << "path:" << n; break;
    case Kind::Rgg: {
      char buf[48];
      std::snprintf(buf, sizeof buf, "rgg:%u:%.3f", n, radius);
      os << buf;
      break;
    }
    case Kind::Explicit: os << "explicit"; break;
  }
  return os.str();
}

Topology TopologySpec::build(std::uint64_t seed) const {
  switch (kind) {
    case Kind::Grid: return Topology::grid(w, h);
    case Kind::Path: return Topology::path(n);
    case Kind::Rgg: return Topology::random_geometric(n, radius, mix64(seed, 0x746f706fULL));
    case Kind::Explicit: return Topology::from_text(text);
  }
  throw SimError("bad topology spec");
}

std::int64_t RunResult::total_violations() const {
  std::int64_t total = exclusion_violations + scope_violations;
  for (const auto& [k, n] : violation_counts) total += n;
  return total;
}

std::string RunResult::summary_json(std::optional<int> chi2) const {
  std::ostringstream os;
  os << "{\"converged_at\":";
  if (converged_at)
    os << *converged_at;
  else
    os << "null";
  os << ",\"frames\":" << frames_run;
  os << ",\"error\":\"" << error << "\"";
  os << ",\"violations\":{";
  bool first = true;
  for (const auto& [k, n] : violation_counts) {
    if (!first) os << ",";
    first = false;
    os << "\"" << k << "\":" << n;
  }
  os << "}";
  os << ",\"exclusion_violations\":" << exclusion_violations;
  os << ",\"scope_violations\":" << scope_violations;
  os << ",\"collisions\":" << collisions;
  os << ",\"resets\":" << resets;
  os << ",\"forced_releases\":" << forced_releases;
  os << ",\"joins\":" << joins;
  os << ",\"live_nodes\":" << final_live_nodes;
  os << ",\"total_slots\":" << final_total_slots;
  if (final_live_nodes > 0) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", double(final_total_slots) / double(final_live_nodes));
    os << ",\"slots_per_node\":" << buf;
  } else {
    os << ",\"slots_per_node\":null";
  }
  os << ",\"chi2\":";
  if (chi2)
    os << *chi2;
  else
    os << "null";
  os << ",\"diagnostics\":{";
  first = true;
  for (const auto& [k, n] : diagnostics) {
    if (!first) os << ",";
    first = false;
    os << "\"" << k << "\":" << n;
  }
  os << "}}";
  return os.str();
}

Simulation::Simulation(const ScenarioConfig& sc) : scfg_(sc) {
  if (scfg_.frames < 1) throw SimError("frames must be positive");
  if (scfg_.stride < 2) throw SimError("recovery stride must be at least 2");
  if (scfg_.tau < scfg_.stride) throw SimError("tau must be at least the recovery stride");

  topo_ = scfg_.topo.build(scfg_.seed);

  Slot d = Slot(topo_.max_degree());
  Slot derived = d * d + 1;
  pcfg_.period = scfg_.period.value_or(derived);
  if (pcfg_.period < d + 1 || pcfg_.period < 1) throw SimError("period too small");
  pcfg_.tau = scfg_.tau;
  pcfg_.stride = scfg_.stride;
  pcfg_.bandwidth_extension = scfg_.bandwidth_extension;

  NodeId max_id = topo_.node_count() ? topo_.max_node_id() : 0;
  for (const auto& e : scfg_.perturbations)
    if (e.kind == PerturbationEvent::Kind::Join) max_id = std::max(max_id, e.node);
  pcfg_.n_cap = scfg_.id_capacity.value_or(max_id + 1);
  if (pcfg_.n_cap <= max_id) throw SimError("id capacity too small");

  std::stable_sort(scfg_.perturbations.begin(), scfg_.perturbations.end(),
                   [](const PerturbationEvent& a, const PerturbationEvent& b) {
                     return a.at_frame < b.at_frame;
                   });

  init_states();
}

void Simulation::init_states() {
  for (NodeId u : topo_.nodes()) nodes_.emplace(u, SensorNode(u, pcfg_, this));
  if (!scfg_.legitimate_start) return;

  auto claims = assign_all(topo_, pcfg_.period);
  for (auto& [u, node] : nodes_) {
    std::map<NodeId, NeighborRecord> table;
    for (NodeId j : topo_.neighbors(u)) {
      NeighborRecord rec;
      rec.claim = claims.at(j);
      rec.joined = true;
      rec.idle = true;
      for (NodeId k : topo_.neighbors(j)) {
        ReportedInfo info;
        info.claim = claims.at(k);
        info.joined = true;
        info.at = 0;
        rec.reported[k] = std::move(info);
      }
      table[j] = std::move(rec);
    }
    node.init_legitimate(claims.at(u), table);
  }
}

std::vector<NodeId> Simulation::node_ids() const {
  std::vector<NodeId> ids;
  ids.reserve(nodes_.size());
  for (const auto& [u, n] : nodes_) ids.push_back(u);
  return ids;
}

GlobalSnapshot Simulation::snapshot(Frame frame) const {
  GlobalSnapshot snap;
  snap.frame = frame;
  for (const auto& [u, node] : nodes_) {
    const auto& c = node.core();
    SensorSnapshot s;
    s.id = u;
    s.claim = c.claim;
    s.pending = c.pending_extra;
    s.joined = c.joined;
    s.mode = c.mode;
    s.initiator = node.reset_initiator();
    for (const auto& [j, rec] : c.table) s.recorded[j] = {rec.claim, rec.pending};
    snap.nodes.emplace(u, std::move(s));
  }
  return snap;
}

template <typename Fn>
void Simulation::each_observer(Fn&& fn) {
  fn(convergence_);
  fn(exclusion_);
  fn(scope_);
  fn(stats_);
  for (RunObserver* obs : extra_) fn(*obs);
}

bool Simulation::apply(const PerturbationEvent& e, Frame frame) {
  switch (e.kind) {
    case PerturbationEvent::Kind::CorruptState: {
      if (!has_node(e.node)) return false;
      auto core = FaultInjector::random_core(e.node, pcfg_, node_ids(), frame,
                                             mix64(scfg_.seed, e.seed));
      nodes_.at(e.node).overwrite(std::move(core), frame);
      return true;
    }
    case PerturbationEvent::Kind::CorruptAll: {
      std::map<NodeId, SensorCore> cores;
      FaultInjector::corrupt_all_cores(cores, topo_, pcfg_, frame, mix64(scfg_.seed, e.seed));
      for (auto& [u, core] : cores)
        if (has_node(u)) nodes_.at(u).overwrite(std::move(core), frame);
      return true;
    }
    case PerturbationEvent::Kind::Kill: {
      if (!has_node(e.node)) return false;
      each_observer([&](RunObserver& o) { o.on_topo_remove(frame, e.node); });
      topo_.remove_node(e.node);
      nodes_.erase(e.node);
      return true;
    }
    case PerturbationEvent::Kind::Join: {
      try {
        topo_.add_node(e.node, e.attach_to);
      } catch (const SimError&) {
        return false;
      }
      nodes_.emplace(e.node, SensorNode(e.node, pcfg_, this));
      each_observer([&](RunObserver& o) { o.on_topo_add(frame, e.node, e.attach_to); });
      return true;
    }
  }
  return false;
}

void Simulation::boundary(Frame frame) {
  current_frame_ = frame;
  while (pert_idx_ < scfg_.perturbations.size() &&
         scfg_.perturbations[pert_idx_].at_frame == frame) {
    const auto& e = scfg_.perturbations[pert_idx_];
    bool applied = apply(e, frame);
    each_observer([&](RunObserver& o) { o.on_perturb(frame, e, applied); });
    pert_idx_++;
  }
  auto snap = snapshot(frame);
  each_observer([&](RunObserver& o) { o.on_boundary(topo_, snap); });
}

void Simulation::run_frame(Frame frame) {
  current_frame_ = frame;
  Slot length = pcfg_.frame_length(frame);
  for (Slot slot = 0; slot < length; ++slot) {
    std::map<NodeId, WritePayload> txs;
    for (const auto& [u, node] : nodes_) {
      auto d = node.transmit_decision(frame, slot);
      if (d) txs.emplace(u, WritePayload{u, std::move(*d)});
    }
    auto events = kernel_.step(topo_, txs, SlotIndex{frame, slot});
    for (const auto& [u, wp] : txs)
      each_observer([&](RunObserver& o) { o.on_tx(frame, slot, u, wp.body); });
    for (const auto& ev : events) {
      auto it = nodes_.find(ev.receiver);
      if (it == nodes_.end()) continue;
      std::optional<NodeId> from;
      std::optional<Message> delivered;
      if (ev.payload) {
        from = ev.payload->sender;
        delivered = ev.payload->body;
      }
      std::optional<Message> sent;
      auto tx = txs.find(ev.receiver);
      if (tx != txs.end()) sent = tx->second.body;
      it->second.observe(frame, slot, from, delivered, sent);
      each_observer([&](RunObserver& o) { o.on_event(ev); });
    }
  }
  for (auto& [u, node] : nodes_) node.frame_end(frame);
}

void Simulation::run_until(Frame upto) {
  if (!begun_) {
    begun_ = true;
    each_observer(
        [&](RunObserver& o) { o.on_begin(topo_, pcfg_, scfg_.seed, scfg_.frames); });
  }
  while (next_frame_ < upto && next_frame_ < scfg_.frames && error_.empty()) {
    Frame f = next_frame_;
    boundary(f);
    try {
      run_frame(f);
    } catch (const SimError& err) {
      error_ = err.what();
      break;
    }
    next_frame_++;
  }
}

RunResult Simulation::finish() {
  if (!finished_) {
    finished_ = true;
    if (error_.empty()) boundary(next_frame_);
  }
  RunResult r;
  r.converged_at = error_.empty() ? convergence_.converged_at() : std::nullopt;
  r.frames_run = next_frame_;
  r.error = error_;
  r.violation_counts = convergence_.violation_counts();
  r.exclusion_violations = std::int64_t(exclusion_.violations().size());
  r.scope_violations = std::int64_t(scope_.violations().size());
  r.collisions = convergence_.collisions();
  r.resets = stats_.resets;
  r.forced_releases = stats_.forced_releases;
  r.joins = stats_.joins;
  r.final_live_nodes = stats_.final_live_nodes;
  r.final_total_slots = stats_.final_total_slots;
  r.diagnostics = stats_.diagnostics;
  return r;
}

RunResult Simulation::run() {
  run_until(scfg_.frames);
  return finish();
}

void Simulation::claim_changed(NodeId node, const std::set<Slot>& from, const std::set<Slot>& to,
                               const std::string& cause, std::optional<NodeId> initiator,
                               Frame frame) {
  each_observer([&](RunObserver& o) { o.on_claim_change(frame, node, from, to, cause, initiator); });
}

void Simulation::mode_changed(NodeId node, Mode mode, std::optional<NodeId> initiator,
                              Frame frame, bool injected) {
  each_observer(
      [&](RunObserver& o) { o.on_mode_change(frame, node, mode, initiator, injected); });
}

void Simulation::reset_promoted(NodeId initiator, const std::vector<NodeId>& participants,
                                Frame frame) {
  each_observer([&](RunObserver& o) { o.on_reset_promoted(frame, initiator, participants); });
}

void Simulation::reset_released(NodeId initiator, Frame frame, bool forced) {
  each_observer([&](RunObserver& o) { o.on_reset_released(frame, initiator, forced); });
}

void Simulation::reset_abandoned(NodeId node, Frame frame) {
  each_observer([&](RunObserver& o) { o.on_reset_abandoned(frame, node); });
}

void Simulation::join_event(NodeId node, Slot slot, std::optional<NodeId> granter, Frame frame) {
  each_observer([&](RunObserver& o) { o.on_join(frame, node, slot, granter); });
}

void Simulation::diagnostic(NodeId node, const std::string& kind, Frame frame) {
  each_observer([&](RunObserver& o) { o.on_diagnostic(frame, node, kind); });
}

}  // namespace wacsim
