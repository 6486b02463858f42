#include "wacsim/trace.hpp"

#include <ostream>
#include <sstream>

#include "json.hpp"

namespace wacsim {

namespace {

const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Delivered: return "delivered";
    case Outcome::Collision: return "collision";
    case Outcome::Silence: return "silence";
  }
  return "?";
}

void write_slots(std::ostream& os, const std::set<Slot>& slots) {
  os << "[";
  bool first = true;
  for (Slot s : slots) {
    if (!first) os << ",";
    first = false;
    os << s;
  }
  os << "]";
}

template <typename T>
void write_ids(std::ostream& os, const T& ids) {
  os << "[";
  bool first = true;
  for (auto id : ids) {
    if (!first) os << ",";
    first = false;
    os << id;
  }
  os << "]";
}

Mode mode_from_name(const std::string& s) {
  if (s == "idle") return Mode::Idle;
  if (s == "scheduling") return Mode::Scheduling;
  if (s == "arbitrating") return Mode::Arbitrating;
  if (s == "resetting") return Mode::Resetting;
  if (s == "reassigning") return Mode::Reassigning;
  throw SimError("bad mode in trace: " + s);
}

std::set<Slot> slots_from_json(const nlohmann::json& j) {
  std::set<Slot> out;
  for (const auto& v : j) out.insert(v.get<Slot>());
  return out;
}

}  // namespace

TraceWriter::TraceWriter(std::ostream& out, int snapshot_every, bool include_silence)
    : out_(out), snapshot_every_(snapshot_every < 1 ? 1 : snapshot_every),
      include_silence_(include_silence) {}

void TraceWriter::on_begin(const Topology& t, const ProtocolConfig& cfg, std::uint64_t seed,
                           Frame frames) {
  out_ << "{\"type\":\"begin\",\"nodes\":";
  write_ids(out_, t.nodes());
  out_ << ",\"edges\":[";
  bool first = true;
  for (const auto& [u, v] : t.edges()) {
    if (!first) out_ << ",";
    first = false;
    out_ << "[" << u << "," << v << "]";
  }
  out_ << "],\"period\":" << cfg.period << ",\"tau\":" << cfg.tau << ",\"stride\":" << cfg.stride
       << ",\"ncap\":" << cfg.n_cap << ",\"ext\":" << (cfg.bandwidth_extension ? 1 : 0)
       << ",\"frames\":" << frames << ",\"seed\":" << seed << "}\n";
}

void TraceWriter::on_tx(Frame frame, Slot slot, NodeId node, const Message& msg) {
  out_ << "{\"frame\":" << frame << ",\"slot\":" << slot << ",\"tx\":" << node << ",\"msg\":\""
       << msg.tag() << "\",\"claim\":";
  write_slots(out_, msg.base.claim);
  if (msg.base.pending_extra) out_ << ",\"pending\":" << *msg.base.pending_extra;
  if (msg.arb)
    out_ << ",\"init\":" << msg.arb->initiator << ",\"tier\":" << msg.arb->tier
         << ",\"dist\":" << msg.arb->dist << ",\"origin\":" << msg.arb->origin_rho;
  if (const auto* p = std::get_if<ClearSlotsPayload>(&msg.control)) {
    out_ << ",\"cinit\":" << p->initiator << ",\"parts\":";
    write_ids(out_, p->participants);
    out_ << ",\"start\":" << p->assign_start_rho << ",\"cdist\":" << p->dist;
  } else if (const auto* p = std::get_if<AssignPayload>(&msg.control)) {
    out_ << ",\"cinit\":" << p->initiator << ",\"pos\":" << p->position
         << ",\"aslot\":" << p->slot;
  } else if (const auto* p = std::get_if<JoinRequestPayload>(&msg.control)) {
    if (p->proposal)
      out_ << ",\"proposal\":" << *p->proposal;
    else
      out_ << ",\"proposal\":null";
  } else if (const auto* p = std::get_if<JoinGrantPayload>(&msg.control)) {
    out_ << ",\"target\":" << p->target << ",\"gslot\":" << p->slot;
  } else if (const auto* p = std::get_if<ReleasePayload>(&msg.control)) {
    out_ << ",\"cinit\":" << p->initiator << ",\"cdist\":" << p->dist;
  }
  out_ << "}\n";
}

void TraceWriter::on_event(const KernelEvent& ev) {
  if (ev.outcome == Outcome::Silence && !include_silence_) return;
  out_ << "{\"frame\":" << ev.slot.frame << ",\"slot\":" << ev.slot.slot_in_frame
       << ",\"rx\":" << ev.receiver << ",\"outcome\":\"" << outcome_name(ev.outcome) << "\"";
  if (ev.payload) out_ << ",\"tx\":" << ev.payload->sender;
  out_ << "}\n";
}

void TraceWriter::on_boundary(const Topology&, const GlobalSnapshot& snap) {
  if (snap.frame % snapshot_every_ != 0) return;
  out_ << "{\"type\":\"snap\",\"frame\":" << snap.frame << ",\"nodes\":[";
  bool first = true;
  for (const auto& [u, s] : snap.nodes) {
    if (!first) out_ << ",";
    first = false;
    out_ << "{\"id\":" << u << ",\"claim\":";
    write_slots(out_, s.claim);
    if (s.pending) out_ << ",\"pending\":" << *s.pending;
    out_ << ",\"joined\":" << (s.joined ? 1 : 0) << ",\"mode\":\"" << mode_name(s.mode) << "\"";
    if (s.initiator) out_ << ",\"init\":" << *s.initiator;
    out_ << ",\"table\":[";
    bool tfirst = true;
    for (const auto& [j, rec] : s.recorded) {
      if (!tfirst) out_ << ",";
      tfirst = false;
      out_ << "{\"id\":" << j << ",\"claim\":";
      write_slots(out_, rec.first);
      if (rec.second) out_ << ",\"pending\":" << *rec.second;
      out_ << "}";
    }
    out_ << "]}";
  }
  out_ << "]}\n";
}

void TraceWriter::on_claim_change(Frame frame, NodeId node, const std::set<Slot>& from,
                                  const std::set<Slot>& to, const std::string& cause,
                                  std::optional<NodeId> initiator) {
  out_ << "{\"type\":\"claim\",\"frame\":" << frame << ",\"node\":" << node << ",\"from\":";
  write_slots(out_, from);
  out_ << ",\"to\":";
  write_slots(out_, to);
  out_ << ",\"cause\":\"" << cause << "\"";
  if (initiator) out_ << ",\"init\":" << *initiator;
  out_ << "}\n";
}

void TraceWriter::on_mode_change(Frame frame, NodeId node, Mode mode,
                                 std::optional<NodeId> initiator, bool injected) {
  out_ << "{\"type\":\"mode\",\"frame\":" << frame << ",\"node\":" << node << ",\"mode\":\""
       << mode_name(mode) << "\"";
  if (initiator) out_ << ",\"init\":" << *initiator;
  if (injected) out_ << ",\"injected\":1";
  out_ << "}\n";
}

void TraceWriter::on_reset_promoted(Frame frame, NodeId initiator,
                                    const std::vector<NodeId>& participants) {
  out_ << "{\"type\":\"reset\",\"event\":\"promoted\",\"frame\":" << frame
       << ",\"init\":" << initiator << ",\"parts\":";
  write_ids(out_, participants);
  out_ << "}\n";
}

void TraceWriter::on_reset_released(Frame frame, NodeId initiator, bool forced) {
  out_ << "{\"type\":\"reset\",\"event\":\"released\",\"frame\":" << frame
       << ",\"init\":" << initiator << ",\"forced\":" << (forced ? 1 : 0) << "}\n";
}

void TraceWriter::on_reset_abandoned(Frame frame, NodeId node) {
  out_ << "{\"type\":\"reset\",\"event\":\"abandoned\",\"frame\":" << frame << ",\"node\":" << node
       << "}\n";
}

void TraceWriter::on_join(Frame frame, NodeId node, Slot slot, std::optional<NodeId> granter) {
  out_ << "{\"type\":\"join\",\"frame\":" << frame << ",\"node\":" << node << ",\"slot\":" << slot;
  if (granter) out_ << ",\"granter\":" << *granter;
  out_ << "}\n";
}

void TraceWriter::on_topo_add(Frame frame, NodeId node, const std::set<NodeId>& attach) {
  out_ << "{\"type\":\"topo\",\"op\":\"add\",\"frame\":" << frame << ",\"node\":" << node
       << ",\"attach\":";
  write_ids(out_, attach);
  out_ << "}\n";
}

void TraceWriter::on_topo_remove(Frame frame, NodeId node) {
  out_ << "{\"type\":\"topo\",\"op\":\"remove\",\"frame\":" << frame << ",\"node\":" << node
       << "}\n";
}

void TraceWriter::on_perturb(Frame frame, const PerturbationEvent& e, bool applied) {
  out_ << "{\"type\":\"perturb\",\"frame\":" << frame << ",\"kind\":\""
       << perturbation_kind_name(e.kind) << "\",\"node\":" << e.node << ",\"seed\":" << e.seed
       << ",\"applied\":" << (applied ? 1 : 0) << "}\n";
}

void TraceWriter::on_diagnostic(Frame frame, NodeId node, const std::string& kind) {
  out_ << "{\"type\":\"diag\",\"frame\":" << frame << ",\"node\":" << node << ",\"kind\":\""
       << kind << "\"}\n";
}

std::size_t TraceReader::replay(std::istream& in) {
  using nlohmann::json;
  std::string line;
  std::size_t records = 0;
  Topology topo;
  bool begun = false;

  auto each = [&](auto&& fn) {
    for (RunObserver* o : observers_) fn(*o);
  };

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const std::exception& e) {
      throw SimError(std::string("malformed trace line: ") + e.what());
    }
    records++;

    if (j.contains("type")) {
      const std::string type = j["type"];
      if (type == "begin") {
        topo = Topology{};
        for (const auto& n : j["nodes"]) topo.add_node(n.get<NodeId>());
        for (const auto& e : j["edges"]) topo.add_edge(e[0].get<NodeId>(), e[1].get<NodeId>());
        ProtocolConfig cfg;
        cfg.period = j["period"].get<Slot>();
        cfg.tau = j["tau"].get<std::uint32_t>();
        cfg.stride = j["stride"].get<std::uint32_t>();
        cfg.n_cap = j["ncap"].get<std::uint32_t>();
        cfg.bandwidth_extension = j["ext"].get<int>() != 0;
        begun = true;
        each([&](RunObserver& o) {
          o.on_begin(topo, cfg, j["seed"].get<std::uint64_t>(), j["frames"].get<Frame>());
        });
      } else if (type == "snap") {
        GlobalSnapshot snap;
        snap.frame = j["frame"].get<Frame>();
        for (const auto& nj : j["nodes"]) {
          SensorSnapshot s;
          s.id = nj["id"].get<NodeId>();
          s.claim = slots_from_json(nj["claim"]);
          if (nj.contains("pending")) s.pending = nj["pending"].get<Slot>();
          s.joined = nj["joined"].get<int>() != 0;
          s.mode = mode_from_name(nj["mode"].get<std::string>());
          if (nj.contains("init")) s.initiator = nj["init"].get<NodeId>();
          for (const auto& tj : nj["table"]) {
            std::optional<Slot> pending;
            if (tj.contains("pending")) pending = tj["pending"].get<Slot>();
            s.recorded[tj["id"].get<NodeId>()] = {slots_from_json(tj["claim"]), pending};
          }
          snap.nodes.emplace(s.id, std::move(s));
        }
        last_boundary_ = snap.frame;
        each([&](RunObserver& o) { o.on_boundary(topo, snap); });
      } else if (type == "claim") {
        std::optional<NodeId> init;
        if (j.contains("init")) init = j["init"].get<NodeId>();
        each([&](RunObserver& o) {
          o.on_claim_change(j["frame"].get<Frame>(), j["node"].get<NodeId>(),
                            slots_from_json(j["from"]), slots_from_json(j["to"]),
                            j["cause"].get<std::string>(), init);
        });
      } else if (type == "mode") {
        std::optional<NodeId> init;
        if (j.contains("init")) init = j["init"].get<NodeId>();
        bool injected = j.contains("injected") && j["injected"].get<int>() != 0;
        each([&](RunObserver& o) {
          o.on_mode_change(j["frame"].get<Frame>(), j["node"].get<NodeId>(),
                           mode_from_name(j["mode"].get<std::string>()), init, injected);
        });
      } else if (type == "reset") {
        const std::string event = j["event"];
        if (event == "promoted") {
          std::vector<NodeId> parts;
          for (const auto& p : j["parts"]) parts.push_back(p.get<NodeId>());
          each([&](RunObserver& o) {
            o.on_reset_promoted(j["frame"].get<Frame>(), j["init"].get<NodeId>(), parts);
          });
        } else if (event == "released") {
          each([&](RunObserver& o) {
            o.on_reset_released(j["frame"].get<Frame>(), j["init"].get<NodeId>(),
                                j["forced"].get<int>() != 0);
          });
        } else {
          each([&](RunObserver& o) {
            o.on_reset_abandoned(j["frame"].get<Frame>(), j["node"].get<NodeId>());
          });
        }
      } else if (type == "join") {
        std::optional<NodeId> granter;
        if (j.contains("granter")) granter = j["granter"].get<NodeId>();
        each([&](RunObserver& o) {
          o.on_join(j["frame"].get<Frame>(), j["node"].get<NodeId>(), j["slot"].get<Slot>(),
                    granter);
        });
      } else if (type == "topo") {
        if (j["op"].get<std::string>() == "add") {
          std::set<NodeId> attach;
          for (const auto& a : j["attach"]) attach.insert(a.get<NodeId>());
          topo.add_node(j["node"].get<NodeId>(), attach);
          each([&](RunObserver& o) {
            o.on_topo_add(j["frame"].get<Frame>(), j["node"].get<NodeId>(), attach);
          });
        } else {
          topo.remove_node(j["node"].get<NodeId>());
          each([&](RunObserver& o) {
            o.on_topo_remove(j["frame"].get<Frame>(), j["node"].get<NodeId>());
          });
        }
      } else if (type == "perturb" || type == "diag") {
        // informational
      } else {
        throw SimError("unknown trace record type: " + type);
      }
      continue;
    }

    if (j.contains("rx")) {
      KernelEvent ev;
      ev.receiver = j["rx"].get<NodeId>();
      ev.slot = SlotIndex{j["frame"].get<Frame>(), j["slot"].get<Slot>()};
      const std::string oc = j["outcome"];
      ev.outcome = oc == "delivered"  ? Outcome::Delivered
                   : oc == "collision" ? Outcome::Collision
                                       : Outcome::Silence;
      if (j.contains("tx")) ev.payload = WritePayload{j["tx"].get<NodeId>(), Message{}};
      each([&](RunObserver& o) { o.on_event(ev); });
      continue;
    }
    if (j.contains("msg")) continue;  // tx records carry no monitor-relevant state
    throw SimError("unrecognized trace line");
  }
  if (!begun) throw SimError("trace has no begin record");
  return records;
}

}  // namespace wacsim
