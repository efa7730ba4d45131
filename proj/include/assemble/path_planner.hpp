#pragma once

#include <array>
#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "assemble/geometry.hpp"
#include "assemble/rng.hpp"
#include "assemble/world.hpp"

namespace assemble {

inline constexpr int kVision = 5;

enum class CellClass : std::uint8_t { Free, Obstacle, Blocked };

struct PlanGoal {
  enum class Kind : std::uint8_t { AgentAt, BlockAt };
  Kind kind = Kind::AgentAt;
  Vec2 dest;  // agent-relative
};

/// Frozen view of the vision diamond used for planning. Cells outside the
/// diamond count as blocked.
struct PlanningSnapshot {
  std::array<CellClass, 121> cells{};
  std::optional<Vec2> attached;  // offset of the single attached block
  PlanGoal goal;
  bool clear_allowed = false;

  static bool in_diamond(Vec2 p) { return manhattan(p) <= kVision; }
  static std::size_t index(Vec2 p) { return static_cast<std::size_t>((p.y + kVision) * 11 + (p.x + kVision)); }
  CellClass at(Vec2 p) const { return in_diamond(p) ? cells[index(p)] : CellClass::Blocked; }
  void set(Vec2 p, CellClass c) {
    if (in_diamond(p)) cells[index(p)] = c;
  }

  /// Obstacles as obstacles; blocks and entities (other than the agent and
  /// its attached block) as blocked.
  static PlanningSnapshot from_percept(const Percept& p, PlanGoal goal, int clear_cost);
};

struct Plan {
  std::vector<Action> actions;  // move, rotate, or clear of an adjacent cell
  int cost = 0;
  bool empty() const { return actions.empty(); }
};

int action_cost(const Action& a);

struct PlannerOptions {
  std::chrono::milliseconds budget{1000};
  std::size_t max_expansions = 400000;
};

/// Cost-optimal search over (agent cell, block offset, cleared obstacles):
/// uniform-cost order guided by a consistent distance bound. Returns a minimum-cost plan, or the empty plan when unsolvable, when the
/// goal already holds, or when the budget runs out.
Plan plan(const PlanningSnapshot& s, const PlannerOptions& opt = {});

/// Replays a plan on the frozen snapshot. Returns false on an illegal step or
/// when the goal does not hold at the end.
bool plan_reaches_goal(const PlanningSnapshot& s, const Plan& p);

/// Intermediate destination at the vision border for a far destination.
std::optional<Vec2> select_destination(Vec2 final_dest, const PlanningSnapshot& s);

/// One heuristic step toward `dest` when planning produced nothing.
Action fallback_step(const PlanningSnapshot& s, Vec2 dest);

/// PDDL export of the planning problem. The domain includes the clear action
/// only when clearing is allowed.
std::string export_pddl_domain(bool clear_allowed);
std::string export_pddl_problem(const PlanningSnapshot& s);

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

/// Emits plan actions in order, blindly: failures never stop the plan. Failed
/// moves are tallied so the caller can correct its distance estimate.
class PlanExecutor {
 public:
  explicit PlanExecutor(int clear_steps = 3) : clear_steps_(clear_steps) {}

  void load(const Plan& p);
  void cancel() { queue_.clear(); }
  bool active() const { return !queue_.empty(); }

  /// Feeds back the previous step's result (from the percept).
  void feedback(const Action& last, Outcome outcome);
  std::optional<Action> next();

  int failed_moves() const { return failed_moves_; }
  Vec2 displacement() const { return displacement_; }
  /// Sum of the moves that failed; the plan's endpoint is off by this much.
  Vec2 shortfall() const { return shortfall_; }

 private:
  int clear_steps_;
  std::vector<Action> queue_;  // reversed
  bool emitted_ = false;
  int failed_moves_ = 0;
  Vec2 displacement_;
  Vec2 shortfall_;
};

struct NavigatorOptions {
  PlannerOptions planner;
  bool livelock_guard = false;
  int guard_after = 3;   // fallback steps without improvement
  int perturbation = 2;  // max displacement of the re-drawn destination
  int clear_cost = 30;
  int clear_steps = 3;
};

/// Plan, execute, fall back: the per-agent movement loop toward a final
/// destination given relative to the agent.
class Navigator {
 public:
  explicit Navigator(NavigatorOptions opt = {}) : opt_(opt), exec_(opt.clear_steps) {}

  /// `planner_available` is false when the team planner cap is exhausted.
  Action step(const Percept& p, PlanGoal final_goal, Rng& rng, bool planner_available = true);

  void reset();
  bool planning() const { return exec_.active(); }
  int fallback_streak() const { return fallback_streak_; }
  int perturbations() const { return perturbations_; }
  std::optional<Vec2> perturbation() const { return perturb_; }
  int planner_calls() const { return planner_calls_; }
  const PlanExecutor& executor() const { return exec_; }

  /// Target after any livelock perturbation.
  PlanGoal effective_goal(PlanGoal g) const;

 private:
  NavigatorOptions opt_;
  PlanExecutor exec_;
  int fallback_streak_ = 0;
  int best_distance_ = INT32_MAX;
  int perturbations_ = 0;
  int planner_calls_ = 0;
  std::optional<Vec2> perturb_;
};

}  // namespace assemble
