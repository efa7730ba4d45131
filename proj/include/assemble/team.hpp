#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "assemble/exploration.hpp"
#include "assemble/goal_eval.hpp"
#include "assemble/identification.hpp"
#include "assemble/path_planner.hpp"
#include "assemble/tasking.hpp"
#include "assemble/team_map.hpp"

namespace assemble {

struct TeamOptions {
  ExplorationOptions exploration;
  EvaluationOptions evaluation;
  NavigatorOptions navigation;
  int planner_cap = 10;          // planner calls per step for the whole team
  bool watchdog = false;         // full reset when the origin is lost or a commitment stalls
  int watchdog_patience = 30;    // steps without commitment progress
  int max_in_flight = 2;         // simultaneous deliveries
  int min_time_left = 25;        // a task must have this many steps left to be committed
  int fetch_timeout = 120;       // steps before a retriever gives up on a dispenser
  int cleanup_clears = 3;        // clears after a submission or failure
  int clear_cost = 30;
};

/// What an agent did in one step and why; the harness audits these.
struct DecisionNote {
  Role role = Role::Explorer;
  bool exploring = false;        // the action came from the exploration policy
  int rule_distance = 0;         // obstruction distance in force (exploring only)
  int energy = 0;
  Action action;
};

struct Commitment {
  TaskSpec task;
  std::vector<std::string> carriers;  // per requirement
  std::vector<std::size_t> order;
  std::vector<int> parents;
  std::vector<bool> dispatched;
  std::vector<bool> delivered;        // block detached at its cell
  int committed_step = 0;
  int last_progress = 0;
  std::size_t connected = 0;
  bool submitted = false;
};

/// Central decision procedure for one team. Each call consumes the percepts
/// of one step and returns one action per agent.
class TeamController {
 public:
  TeamController(std::string team, std::vector<std::string> roster, TeamOptions opt, std::uint64_t seed);

  std::map<std::string, Action> decide(const std::map<std::string, Percept>& percepts);

  const TeamStore& store() const { return store_; }
  Role role(const std::string& agent) const { return mem_.at(agent).role; }
  std::optional<std::string> origin() const { return origin_; }
  std::optional<Vec2> origin_goal() const { return origin_goal_; }
  const std::optional<Commitment>& commitment() const { return commit_; }
  const BlockStock& stock() const { return stock_; }
  const std::map<std::string, DecisionNote>& notes() const { return notes_; }
  /// Digest of the intra-team messages exchanged in the last step.
  std::uint64_t message_digest() const { return digest_; }
  int resets() const { return resets_; }
  int commitments() const { return commitments_; }
  int failed_commitments() const { return failed_commitments_; }
  std::optional<int> stop_step() const { return stop_step_; }
  const std::vector<std::string>& roster() const { return roster_; }

 private:
  enum class Job : std::uint8_t { None, Fetch, ToDispenser, Collect, ToSlot, Parked, Deliver, Cleanup };

  struct Memory {
    Role role = Role::Explorer;
    ExplorationState explore;
    std::optional<ClusterEvaluator> evaluator;
    Navigator nav;
    std::optional<Vec2> nav_target;     // map frame, with the goal kind below
    PlanGoal::Kind nav_kind = PlanGoal::Kind::AgentAt;
    Job job = Job::None;
    int job_steps = 0;
    std::optional<std::string> wanted;  // block type being fetched
    std::optional<Vec2> dispenser;      // map frame
    std::optional<Vec2> stand;          // map frame cell next to the dispenser
    std::optional<Vec2> slot;           // map frame
    std::optional<std::size_t> delivering;  // requirement index
    int failures = 0;
    int cleanup_left = 0;
  };

  void track_positions(const std::map<std::string, Percept>& ps);
  void delivery_feedback(const std::map<std::string, Percept>& ps);
  void identify_and_merge(const std::map<std::string, Percept>& ps);
  void shift_memory(const MergeRecord& rec);
  void claim_clusters(const std::map<std::string, Percept>& ps);
  void switch_strategy(const std::vector<TaskSpec>& announced, int step);
  void become_retriever(const std::string& name);
  void assign_slots();
  void watchdog(const std::map<std::string, Percept>& ps, int step);
  void mix(std::string_view text);
  void full_reset();

  Action act(const std::string& name, const Percept& p, int step);
  Action explore(const std::string& name, const Percept& p);
  Action evaluate(const std::string& name, const Percept& p);
  Action originate(const std::string& name, const Percept& p, int step);
  Action retrieve(const std::string& name, const Percept& p);
  Action recover(const std::string& name, const Percept& p);
  Action navigate(const std::string& name, const Percept& p, Vec2 target, PlanGoal::Kind kind);
  std::optional<Action> clear_nearby(const Percept& p, int max_distance, bool pattern_only) const;
  void pick_dispenser(const std::string& name);
  void end_commitment(bool success, int step);
  Action assemble_step(const Percept& p, int step);
  void commit(const Percept& p, const std::vector<TaskSpec>& announced, int step);

  std::string team_;
  std::vector<std::string> roster_;
  TeamOptions opt_;
  Rng rng_;
  TeamStore store_;
  std::map<std::string, IdentificationLedger> ledgers_;
  std::map<std::string, Memory> mem_;
  std::map<std::string, DecisionNote> notes_;
  BlockPool pool_;
  BlockStock stock_;
  std::optional<std::string> origin_;
  std::optional<Vec2> origin_goal_;   // map frame
  bool origin_settled_ = false;
  std::optional<Commitment> commit_;
  std::vector<TaskSpec> announced_;  // announced this step
  std::map<int, int> good_order_;  // cluster id -> rank among good verdicts
  int good_count_ = 0;
  int planner_calls_ = 0;
  std::uint64_t digest_ = 0;
  int resets_ = 0;
  int commitments_ = 0;
  int failed_commitments_ = 0;
  std::optional<int> stop_step_;
  int step_ = 0;
};

}  // namespace assemble
