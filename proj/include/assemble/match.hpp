#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "assemble/team.hpp"
#include "assemble/world.hpp"

namespace assemble {

enum class OpponentPolicy : std::uint8_t { None, RandomWalker, GoalSquatter };
std::string_view to_string(OpponentPolicy p);
std::optional<OpponentPolicy> parse_opponent(std::string_view text);

struct MatchConfig {
  WorldConfig world;              // `teams` is derived from the fields below
  std::string team = "A";
  std::string opponent_team = "B";
  OpponentPolicy opponent = OpponentPolicy::None;
  int steps = 500;
  TeamOptions options;            // flags: watchdog, wide cone, planner cap, livelock guard
  int decision_budget_ms = 4000;  // per team and step; an overrun submits no actions

  WorldConfig world_config() const;
};

nlohmann::json to_json(const MatchConfig& c);
/// Missing keys keep their defaults. Throws std::invalid_argument on bad values.
MatchConfig config_from_json(const nlohmann::json& j);
MatchConfig load_config(const std::string& path);

/// An outside change to the world, recorded in the replay so that
/// verification applies it at the same point.
struct Intervention {
  enum class Kind : std::uint8_t { Block, ClearEvent } kind = Kind::Block;
  Vec2 cell;
  std::string type;  // block type
  int radius = 1;    // clear event radius
};

/// Scenario hook, called once per step before percepts are taken.
using StepHook = std::function<std::vector<Intervention>(const World&, const TeamController&)>;

struct AuditCounters {
  int exploration_moves = 0;
  int rule_violations = 0;      // exploration move into an obstruction within the rule distance
  int low_energy_clears = 0;    // exploration clear at energy 240 or below
  int negative_energy = 0;
  int multiple_origins = 0;
  int stock_mismatches = 0;     // stock entry without a matching block in the world
};

struct MatchResult {
  std::map<std::string, int> scores;
  std::vector<World::Submission> submissions;
  int steps = 0;
  AuditCounters audit;
  int resets = 0;
  int commitments = 0;
  int failed_commitments = 0;
  std::optional<int> stop_step;
  int overruns = 0;             // steps where the team exceeded its decision budget
  std::vector<std::string> replay;  // JSON lines, header first

  /// First step with a submission of at least `min_size` blocks by `team`.
  std::optional<int> first_submission(const std::string& team, std::size_t min_size = 1) const;
};

struct MatchObserver {
  StepHook hook;
  /// Called once the team has decided, before the world advances: the team's
  /// knowledge and the world describe the same moment.
  std::function<void(const World&, const TeamController&)> after_decide;
  /// Called after every step with the world and the controller.
  std::function<void(const World&, const TeamController&)> after_step;
};

MatchResult run_match(const MatchConfig& config, const MatchObserver& observer = {});

struct VerifyResult {
  bool ok = false;
  std::optional<int> divergent_step;
  std::string message;
};

/// Re-simulates the recorded actions and compares every step. Malformed
/// input reports the offending line number.
VerifyResult verify_replay(const std::vector<std::string>& lines);
VerifyResult verify_replay_file(const std::string& path);

void write_replay(const std::vector<std::string>& lines, const std::string& path);

}  // namespace assemble
