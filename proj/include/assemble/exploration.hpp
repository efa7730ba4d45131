#pragma once

#include <optional>

#include "assemble/geometry.hpp"
#include "assemble/rng.hpp"
#include "assemble/world.hpp"

namespace assemble {

enum class ExploreMode : std::uint8_t { Normal, SpecialStage1, SpecialStage2, BoxedIn };

struct ExplorationOptions {
  bool wide_cone = false;     // also test the two cells flanking the first ray cell
  int clear_threshold = 240;  // clear only with energy strictly above this
  int normal_distance = 2;
  int relaxed_distance = 1;
  int stage_cap = 10;         // steps per special-case stage
};

struct ExplorationState {
  DirSet valid_dirs = DirSet::all();
  std::optional<Dir> current_dir;
  ExploreMode mode = ExploreMode::Normal;
  std::optional<Dir> last_dir;  // last successful move
  int stage_steps = 0;
  int boxed_phase = 0;

  // clear in progress (agent-relative target, submissions so far)
  std::optional<Vec2> clear_target;
  int clear_count = 0;

  // one-shot move decided by the failure handler (sidestep or retry)
  std::optional<Dir> forced;
};

struct ExplorationDecision {
  Action action;
  ExplorationState state;
  int rule_distance = 2;  // obstruction distance in force for this decision
};

/// True when an obstacle or block lies within `distance` cells along `d`.
bool obstructed(const Percept& p, Dir d, int distance, bool wide_cone = false);

/// Nearest obstruction along `d` within `distance`, if any.
std::optional<Vec2> nearest_obstruction(const Percept& p, Dir d, int distance, bool wide_cone = false);

/// Reacts to the previous step's failed move: out-of-bounds drops that
/// direction, a teammate ahead schedules a sidestep to the relative right, an
/// opponent ahead schedules a retry.
ExplorationState handle_move_failure(const Percept& p, ExplorationState s, const ExplorationOptions& opt = {});

ExplorationDecision choose_exploration_action(const Percept& p, ExplorationState s, Rng& rng,
                                              const ExplorationOptions& opt = {});

}  // namespace assemble
