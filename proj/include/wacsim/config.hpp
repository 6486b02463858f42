#pragma once

#include <iosfwd>
#include <string>

#include "wacsim/simulation.hpp"

namespace wacsim {

/// File paths and trace options live beside the scenario itself.
struct LoadedScenario {
  ScenarioConfig scenario;
  std::string trace_path;
  std::string summary_path;
  int snapshot_every = 1;
};

/// Parses the line-oriented scenario form. Directives:
///   topology grid W H | path N | rgg N RADIUS | explicit ... end
///   frames N | seed N | tau N | stride N | period N | id_capacity N
///   extension on|off | init legitimate|cold | snapshot_every N
///   trace PATH | summary PATH
///   perturb FRAME corrupt_all SEED
///   perturb FRAME corrupt NODE SEED
///   perturb FRAME kill NODE
///   perturb FRAME join NODE ATTACH...
/// '#' starts a comment. Inside an explicit block, "node I" / "edge U V"
/// lines as produced by dump-topology.
LoadedScenario parse_scenario(std::istream& in);
LoadedScenario load_scenario_file(const std::string& path);

}  // namespace wacsim
