#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "wacsim/config.hpp"
#include "wacsim/simulation.hpp"
#include "wacsim/trace.hpp"
#include "wacsim/verifier.hpp"

namespace {

using namespace wacsim;

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

std::optional<int> maybe_chi2(const Topology& t) {
  if (t.node_count() == 0 || t.node_count() > 12) return std::nullopt;
  return oracle_distance2_coloring(t).chi2;
}

int write_summary(const std::string& path, const std::string& json) {
  if (path.empty()) return 0;
  std::ofstream f(path);
  if (!f) {
    std::cerr << "cannot write summary: " << path << "\n";
    return kExitIo;
  }
  f << json << "\n";
  return f ? 0 : kExitIo;
}

int cmd_run(const std::string& config_path, const std::string& trace_override,
            const std::string& summary_override, std::optional<Frame> frames_override,
            std::optional<std::uint64_t> seed_override) {
  LoadedScenario loaded;
  try {
    loaded = load_scenario_file(config_path);
  } catch (const SimError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  if (!trace_override.empty()) loaded.trace_path = trace_override;
  if (!summary_override.empty()) loaded.summary_path = summary_override;
  if (frames_override) loaded.scenario.frames = *frames_override;
  if (seed_override) loaded.scenario.seed = *seed_override;

  std::unique_ptr<Simulation> sim;
  try {
    sim = std::make_unique<Simulation>(loaded.scenario);
  } catch (const SimError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  std::ofstream trace_file;
  std::unique_ptr<TraceWriter> writer;
  if (!loaded.trace_path.empty()) {
    trace_file.open(loaded.trace_path);
    if (!trace_file) {
      std::cerr << "cannot write trace: " << loaded.trace_path << "\n";
      return kExitIo;
    }
    writer = std::make_unique<TraceWriter>(trace_file, loaded.snapshot_every);
    sim->add_observer(writer.get());
  }

  RunResult result = sim->run();
  std::string json = result.summary_json(maybe_chi2(sim->topology()));
  if (int rc = write_summary(loaded.summary_path, json)) return rc;
  if (trace_file.is_open() && !trace_file) {
    std::cerr << "trace write failed\n";
    return kExitIo;
  }
  std::cout << json << "\n";
  return 0;
}

struct SweepAxis {
  std::string key;
  std::vector<std::string> values;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, ',')) out.push_back(cur);
  return out;
}

// seed supports a:b ranges; everything else is a comma list.
std::vector<std::string> expand_axis(const std::string& key, const std::string& spec) {
  if (key == "seed") {
    auto colon = spec.find(':');
    if (colon != std::string::npos) {
      std::uint64_t lo = std::stoull(spec.substr(0, colon));
      std::uint64_t hi = std::stoull(spec.substr(colon + 1));
      std::vector<std::string> out;
      for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(std::to_string(s));
      return out;
    }
  }
  return split_list(spec);
}

TopologySpec parse_topo_value(const std::string& v) {
  TopologySpec t;
  auto parts = [&] {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(v);
    while (std::getline(is, cur, ':')) out.push_back(cur);
    return out;
  }();
  if (parts.empty()) throw SimError("bad topology value");
  if (parts[0] == "grid" && parts.size() == 2) {
    auto x = parts[1].find('x');
    if (x == std::string::npos) throw SimError("grid wants WxH");
    t.kind = TopologySpec::Kind::Grid;
    t.w = std::uint32_t(std::stoul(parts[1].substr(0, x)));
    t.h = std::uint32_t(std::stoul(parts[1].substr(x + 1)));
  } else if (parts[0] == "path" && parts.size() == 2) {
    t.kind = TopologySpec::Kind::Path;
    t.n = std::uint32_t(std::stoul(parts[1]));
  } else if (parts[0] == "rgg" && parts.size() == 3) {
    t.kind = TopologySpec::Kind::Rgg;
    t.n = std::uint32_t(std::stoul(parts[1]));
    t.radius = std::stod(parts[2]);
  } else {
    throw SimError("bad topology value: " + v);
  }
  return t;
}

int cmd_sweep(const std::string& config_path, const std::vector<std::string>& vary,
              const std::string& out_path) {
  LoadedScenario base;
  try {
    base = load_scenario_file(config_path);
  } catch (const SimError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  std::vector<SweepAxis> axes;
  for (const auto& v : vary) {
    auto eq = v.find('=');
    if (eq == std::string::npos) {
      std::cerr << "config error: --vary wants key=v1,v2,...\n";
      return kExitConfig;
    }
    SweepAxis axis;
    axis.key = v.substr(0, eq);
    if (axis.key != "seed" && axis.key != "tau" && axis.key != "topology") {
      std::cerr << "config error: unknown sweep key " << axis.key << "\n";
      return kExitConfig;
    }
    try {
      axis.values = expand_axis(axis.key, v.substr(eq + 1));
    } catch (const std::exception&) {
      std::cerr << "config error: bad values for " << axis.key << "\n";
      return kExitConfig;
    }
    if (axis.values.empty()) {
      std::cerr << "config error: empty sweep axis " << axis.key << "\n";
      return kExitConfig;
    }
    axes.push_back(std::move(axis));
  }

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) {
      std::cerr << "cannot write csv: " << out_path << "\n";
      return kExitIo;
    }
    out = &file;
  }

  *out << "topology,nodes,max_degree,period,tau,stride,seed,frames,status,converged_at,resets,"
          "forced_releases,joins,collisions,exclusion_violations,scope_violations,"
          "legitimacy_violations,slots_per_node\n";

  std::vector<std::size_t> idx(axes.size(), 0);
  bool more = true;
  if (axes.empty()) more = false;  // empty grid: header only
  while (more) {
    ScenarioConfig sc = base.scenario;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      const auto& key = axes[a].key;
      const auto& val = axes[a].values[idx[a]];
      try {
        if (key == "seed")
          sc.seed = std::stoull(val);
        else if (key == "tau")
          sc.tau = std::uint32_t(std::stoul(val));
        else if (key == "topology")
          sc.topo = parse_topo_value(val);
      } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
      }
    }

    std::string status = "ok";
    std::ostringstream row;
    try {
      Simulation sim(sc);
      RunResult r = sim.run();
      if (!r.error.empty()) status = "error:" + r.error;
      std::int64_t legit_viol = 0;
      for (const auto& [k, n] : r.violation_counts) legit_viol += n;
      row << sc.topo.describe() << "," << sim.topology().node_count() << ","
          << sim.topology().max_degree() << "," << sim.protocol_config().period << "," << sc.tau
          << "," << sc.stride << "," << sc.seed << "," << r.frames_run << "," << status << ",";
      if (r.converged_at)
        row << *r.converged_at;
      row << "," << r.resets << "," << r.forced_releases << "," << r.joins << "," << r.collisions
          << "," << r.exclusion_violations << "," << r.scope_violations << "," << legit_viol
          << ",";
      if (r.final_live_nodes > 0) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4f",
                      double(r.final_total_slots) / double(r.final_live_nodes));
        row << buf;
      }
    } catch (const SimError& e) {
      row.str("");
      row << sc.topo.describe() << ",,," << "," << sc.tau << "," << sc.stride << "," << sc.seed
          << ",,error:" << e.what() << ",,,,,,,,,";
    }
    *out << row.str() << "\n";

    std::size_t a = axes.size();
    while (a > 0) {
      --a;
      if (++idx[a] < axes[a].values.size()) break;
      idx[a] = 0;
      if (a == 0) more = false;
    }
  }
  return (out == &file && !file) ? kExitIo : 0;
}

int cmd_verify(const std::string& trace_path, const std::string& summary_path) {
  std::ifstream f(trace_path);
  if (!f) {
    std::cerr << "cannot open trace: " << trace_path << "\n";
    return kExitIo;
  }
  ConvergenceMonitor conv;
  ExclusionMonitor excl;
  ScopeMonitor scope;
  StatsMonitor stats;
  TraceReader reader;
  reader.add_observer(&conv);
  reader.add_observer(&excl);
  reader.add_observer(&scope);
  reader.add_observer(&stats);
  try {
    reader.replay(f);
  } catch (const SimError& e) {
    std::cerr << "verify error: " << e.what() << "\n";
    return kExitConfig;
  }

  RunResult r;
  r.converged_at = conv.converged_at();
  r.frames_run = reader.last_boundary();
  r.violation_counts = conv.violation_counts();
  r.exclusion_violations = std::int64_t(excl.violations().size());
  r.scope_violations = std::int64_t(scope.violations().size());
  r.collisions = conv.collisions();
  r.resets = stats.resets;
  r.forced_releases = stats.forced_releases;
  r.joins = stats.joins;
  r.final_live_nodes = stats.final_live_nodes;
  r.final_total_slots = stats.final_total_slots;
  r.diagnostics = stats.diagnostics;

  std::string json = r.summary_json();
  if (int rc = write_summary(summary_path, json)) return rc;
  std::cout << json << "\n";
  return 0;
}

int cmd_dump_topology(const std::string& config_path) {
  try {
    auto loaded = load_scenario_file(config_path);
    Topology t = loaded.scenario.topo.build(loaded.scenario.seed);
    std::cout << t.dump();
  } catch (const SimError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"slotted WAC-model simulator with a self-stabilizing TDMA protocol"};
  app.require_subcommand(1);

  std::string config_path, trace_path, summary_path, csv_path;
  std::optional<std::int64_t> frames_override;
  std::optional<std::uint64_t> seed_override;
  std::vector<std::string> vary;

  auto* run = app.add_subcommand("run", "execute one scenario");
  run->add_option("config", config_path, "scenario file")->required();
  run->add_option("--trace", trace_path, "trace output path (JSON lines)");
  run->add_option("--summary", summary_path, "summary output path (JSON)");
  run->add_option("--frames", frames_override, "override run length");
  run->add_option("--seed", seed_override, "override seed");

  auto* sweep = app.add_subcommand("sweep", "run a parameter grid, emit CSV");
  sweep->add_option("config", config_path, "scenario template file")->required();
  sweep->add_option("--vary", vary, "axis as key=v1,v2 (keys: seed, tau, topology)");
  sweep->add_option("-o,--out", csv_path, "CSV output path (default stdout)");

  auto* verify = app.add_subcommand("verify", "re-check a trace file");
  verify->add_option("trace", trace_path, "trace file")->required();
  verify->add_option("--summary", summary_path, "summary output path");

  auto* dump = app.add_subcommand("dump-topology", "print the scenario topology");
  dump->add_option("config", config_path, "scenario file")->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed())
    return cmd_run(config_path, trace_path, summary_path,
                   frames_override ? std::optional<wacsim::Frame>(*frames_override) : std::nullopt,
                   seed_override);
  if (sweep->parsed()) return cmd_sweep(config_path, vary, csv_path);
  if (verify->parsed()) return cmd_verify(trace_path, summary_path);
  if (dump->parsed()) return cmd_dump_topology(config_path);
  return 1;
}
