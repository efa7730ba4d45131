#pragma once

#include <optional>
#include <string>
#include <vector>

#include "assemble/match.hpp"

namespace assemble {

/// One variant of a regression scenario.
struct ScenarioRun {
  bool flags = false;
  bool failure = false;    // the documented failure was observed
  bool recovered = false;  // the team got out of it
  std::string detail;
  std::vector<std::string> replay;  // empty for the standalone navigation scenario
};

struct ScenarioReport {
  std::string name;
  std::string description;
  ScenarioRun off;
  ScenarioRun on;
  /// Failure with the mitigation off, recovery with it on.
  bool passed() const { return off.failure && on.recovered; }
};

/// Blocks appear around the first pattern cell right after a commitment;
/// the carrier cannot reach a cell next to its target. Mitigation: watchdog.
ScenarioReport scenario_blocks_near_origin();

/// An opponent parks on the navigator's destination. Mitigation: livelock
/// guard.
ScenarioReport scenario_squatted_destination();

/// A clear event disables the origin mid-assembly. Mitigation: watchdog.
ScenarioReport scenario_origin_disabled();

std::vector<std::string> scenario_names();
std::optional<ScenarioReport> run_scenario(const std::string& name);

}  // namespace assemble
