#include "wacsim/config.hpp"

#include <fstream>
#include <sstream>

namespace wacsim {

namespace {

std::uint64_t parse_u64(std::istringstream& ls, const std::string& what) {
  std::uint64_t v;
  if (!(ls >> v)) throw SimError("expected number after " + what);
  return v;
}

}  // namespace

LoadedScenario parse_scenario(std::istream& in) {
  LoadedScenario out;
  ScenarioConfig& sc = out.scenario;
  std::string line;
  bool in_explicit = false;
  std::ostringstream explicit_text;

  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string kw;
    if (!(ls >> kw)) continue;

    if (in_explicit) {
      if (kw == "end") {
        in_explicit = false;
        sc.topo.text = explicit_text.str();
      } else if (kw == "node" || kw == "edge") {
        explicit_text << line << "\n";
      } else {
        throw SimError("unexpected directive inside explicit topology: " + kw);
      }
      continue;
    }

    if (kw == "topology") {
      std::string kind;
      if (!(ls >> kind)) throw SimError("topology needs a kind");
      if (kind == "grid") {
        sc.topo.kind = TopologySpec::Kind::Grid;
        sc.topo.w = std::uint32_t(parse_u64(ls, "grid width"));
        sc.topo.h = std::uint32_t(parse_u64(ls, "grid height"));
      } else if (kind == "path") {
        sc.topo.kind = TopologySpec::Kind::Path;
        sc.topo.n = std::uint32_t(parse_u64(ls, "path length"));
      } else if (kind == "rgg") {
        sc.topo.kind = TopologySpec::Kind::Rgg;
        sc.topo.n = std::uint32_t(parse_u64(ls, "rgg size"));
        if (!(ls >> sc.topo.radius)) throw SimError("rgg needs a radius");
      } else if (kind == "explicit") {
        sc.topo.kind = TopologySpec::Kind::Explicit;
        in_explicit = true;
        explicit_text.str("");
      } else {
        throw SimError("unknown topology kind: " + kind);
      }
    } else if (kw == "frames") {
      sc.frames = Frame(parse_u64(ls, kw));
    } else if (kw == "seed") {
      sc.seed = parse_u64(ls, kw);
    } else if (kw == "tau") {
      sc.tau = std::uint32_t(parse_u64(ls, kw));
    } else if (kw == "stride") {
      sc.stride = std::uint32_t(parse_u64(ls, kw));
    } else if (kw == "period") {
      sc.period = Slot(parse_u64(ls, kw));
    } else if (kw == "id_capacity") {
      sc.id_capacity = std::uint32_t(parse_u64(ls, kw));
    } else if (kw == "extension") {
      std::string v;
      ls >> v;
      if (v == "on")
        sc.bandwidth_extension = true;
      else if (v == "off")
        sc.bandwidth_extension = false;
      else
        throw SimError("extension must be on or off");
    } else if (kw == "init") {
      std::string v;
      ls >> v;
      if (v == "legitimate")
        sc.legitimate_start = true;
      else if (v == "cold")
        sc.legitimate_start = false;
      else
        throw SimError("init must be legitimate or cold");
    } else if (kw == "snapshot_every") {
      out.snapshot_every = int(parse_u64(ls, kw));
      if (out.snapshot_every < 1) throw SimError("snapshot_every must be positive");
    } else if (kw == "trace") {
      ls >> out.trace_path;
    } else if (kw == "summary") {
      ls >> out.summary_path;
    } else if (kw == "perturb") {
      PerturbationEvent e;
      e.at_frame = Frame(parse_u64(ls, "perturb frame"));
      std::string kind;
      if (!(ls >> kind)) throw SimError("perturb needs a kind");
      if (kind == "corrupt_all") {
        e.kind = PerturbationEvent::Kind::CorruptAll;
        e.seed = parse_u64(ls, "corrupt_all seed");
      } else if (kind == "corrupt") {
        e.kind = PerturbationEvent::Kind::CorruptState;
        e.node = NodeId(parse_u64(ls, "corrupt node"));
        e.seed = parse_u64(ls, "corrupt seed");
      } else if (kind == "kill") {
        e.kind = PerturbationEvent::Kind::Kill;
        e.node = NodeId(parse_u64(ls, "kill node"));
      } else if (kind == "join") {
        e.kind = PerturbationEvent::Kind::Join;
        e.node = NodeId(parse_u64(ls, "join node"));
        std::uint64_t a;
        while (ls >> a) e.attach_to.insert(NodeId(a));
      } else {
        throw SimError("unknown perturbation kind: " + kind);
      }
      sc.perturbations.push_back(std::move(e));
    } else {
      throw SimError("unknown scenario directive: " + kw);
    }
  }
  if (in_explicit) throw SimError("explicit topology not terminated with end");
  return out;
}

LoadedScenario load_scenario_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw SimError("cannot open scenario file: " + path);
  return parse_scenario(f);
}

}  // namespace wacsim
