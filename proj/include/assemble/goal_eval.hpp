#pragma once

#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "assemble/geometry.hpp"
#include "assemble/rng.hpp"
#include "assemble/team_map.hpp"
#include "assemble/world.hpp"

namespace assemble {

/// Neighbour minimising the Manhattan distance to `rel_target`. Candidates are
/// tried w, e, n, s and a later one wins ties.
Dir greedy_direction(Vec2 rel_target);

/// Obstacle or unattached block in the percept.
bool blocks_path(const Percept& p, Vec2 rel);

/// Rectangle schedule around an obstruction: (direction to go, direction
/// toward the obstruction side) pairs.
struct DetourPlan {
  std::vector<std::pair<Dir, Dir>> legs;
  std::size_t progress = 0;
  int leg_moves = 0;
};

/// A gap seen along `side` past an obstruction in direction `blocked`: some
/// cell in the row toward `side` whose `blocked` neighbour is open, reached
/// before the row itself is obstructed.
bool gap_toward(const Percept& p, Dir blocked, Dir side);

/// Nullopt when no gap is seen on either side.
std::optional<DetourPlan> build_detour(Dir blocked, const Percept& p);

struct DetourStep {
  enum class Kind : std::uint8_t { Move, Done, Failed } kind = Kind::Done;
  Dir dir = Dir::N;
};

DetourStep advance_detour(DetourPlan& d, const Percept& p, Vec2 rel_target, int leg_cap = 15);

struct MoverOptions {
  int clear_cost = 30;
  int near_distance = 3;  // clear instead of detouring this close to the target
  int leg_cap = 15;
};

/// Planner-free movement used during evaluation: greedy descent with detours
/// around obstructions and clearing as the last resort.
class GreedyMover {
 public:
  explicit GreedyMover(MoverOptions opt = {}) : opt_(opt) {}

  Action step(Vec2 rel_target, const Percept& p);
  void reset();
  bool detouring() const { return detour_.has_value(); }
  int detours() const { return detours_; }

 private:
  Action blocked_fallback(Dir d, const Percept& p);

  MoverOptions opt_;
  std::optional<DetourPlan> detour_;
  bool stubborn_ = false;  // a detour failed here; clear straight through
  int detours_ = 0;
};

// ---------------------------------------------------------------------------
// Cluster evaluation
// ---------------------------------------------------------------------------

/// Cells of the cluster minimising the largest Manhattan distance to the
/// other members.
std::vector<Vec2> cluster_centers(const std::set<Vec2>& cells);

/// Perimeter of the bounding box inflated by `inflate`, sampled every
/// `stride` cells, minus goal cells.
std::vector<Vec2> slot_candidates(const std::set<Vec2>& cells, const std::set<Vec2>& goals, int inflate = 3,
                                  int stride = 2);

struct EvaluationOptions {
  int clear_distance = 5;
  int slots_needed = 9;
  int inflate = 3;
  int stride = 2;
  int visit_slack = 12;  // extra steps allowed per candidate beyond twice its distance
  int budget = 600;      // steps before the evaluation gives up
  MoverOptions mover;
};

enum class EvalPhase : std::uint8_t { ToGoal, ToCenter, Clearing, Scouting, Done };

/// Drives one agent through the evaluation of one cluster. Positions are in
/// the frame of the agent's map.
class ClusterEvaluator {
 public:
  ClusterEvaluator(int cluster_id, Vec2 discovered, EvaluationOptions opt = {});

  Action step(Vec2 position, const Percept& p, const LocalMap& map, Rng& rng);

  int cluster_id() const { return cluster_id_; }
  EvalPhase phase() const { return phase_; }
  bool finished() const { return phase_ == EvalPhase::Done; }
  /// Good, Bad, or Unevaluated when the budget ran out.
  ClusterStatus result() const { return result_; }
  const std::vector<Vec2>& slots() const { return slots_; }
  std::optional<Vec2> center() const { return center_; }

 private:
  Action finish(ClusterStatus s);
  Action clearing_step(const Percept& p);
  Action scouting_step(Vec2 position, const Percept& p, const LocalMap& map);

  int cluster_id_;
  Vec2 discovered_;
  EvaluationOptions opt_;
  GreedyMover mover_;
  EvalPhase phase_ = EvalPhase::ToGoal;
  ClusterStatus result_ = ClusterStatus::Evaluating;
  int steps_ = 0;

  std::optional<Vec2> center_;
  std::size_t clear_dir_ = 0;
  int charge_ = 0;
  bool clear_pending_ = false;

  std::vector<Vec2> candidates_;
  std::optional<Vec2> visiting_;
  int visit_budget_ = 0;
  bool visit_started_ = false;
  std::vector<Vec2> slots_;
};

}  // namespace assemble
