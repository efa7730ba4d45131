#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "assemble/geometry.hpp"
#include "assemble/rng.hpp"

namespace assemble {

// ---------------------------------------------------------------------------
// Actions and outcomes
// ---------------------------------------------------------------------------

enum class ActionKind : std::uint8_t { Skip, Move, Rotate, Request, Attach, Detach, Connect, Submit, Clear };

struct Action {
  ActionKind kind = ActionKind::Skip;
  Dir dir = Dir::N;                  // move / request / attach / detach
  Rotation rotation = Rotation::CW;  // rotate
  Vec2 target{};                     // clear target, connect offset (agent-relative)
  std::string name;                  // connect partner or submitted task

  static Action skip() { return {}; }
  static Action move(Dir d) { return {ActionKind::Move, d, Rotation::CW, {}, {}}; }
  static Action rotate(Rotation r) { return {ActionKind::Rotate, Dir::N, r, {}, {}}; }
  static Action request(Dir d) { return {ActionKind::Request, d, Rotation::CW, {}, {}}; }
  static Action attach(Dir d) { return {ActionKind::Attach, d, Rotation::CW, {}, {}}; }
  static Action detach(Dir d) { return {ActionKind::Detach, d, Rotation::CW, {}, {}}; }
  static Action connect(std::string partner, Vec2 offset) {
    return {ActionKind::Connect, Dir::N, Rotation::CW, offset, std::move(partner)};
  }
  static Action submit(std::string task) { return {ActionKind::Submit, Dir::N, Rotation::CW, {}, std::move(task)}; }
  static Action clear(Vec2 target) { return {ActionKind::Clear, Dir::N, Rotation::CW, target, {}}; }

  bool operator==(const Action& o) const;
};

/// Compact text form used in replays: "move n", "rotate cw", "clear 0 -2",
/// "connect A3 1 0", "submit t4", "skip".
std::string to_string(const Action& a);
std::optional<Action> parse_action(std::string_view text);

enum class Outcome : std::uint8_t {
  Success,
  FailedPath,
  FailedOutOfBounds,
  FailedRandom,
  FailedTarget,
  FailedDisabled,
};

std::string_view to_string(Outcome o);
std::optional<Outcome> parse_outcome(std::string_view text);

struct StepResult {
  Outcome outcome = Outcome::Success;
  bool coerced = false;  // no action was submitted; skip was applied instead
};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct WorldConfig {
  int width = 40;
  int height = 40;
  std::uint64_t seed = 1;
  std::vector<std::string> teams{"A"};
  int agents_per_team = 10;
  int block_types = 2;
  double task_rate = 0.2;           // probability of a task announcement per step
  double clear_event_rate = 0.02;   // probability of an environment clear event per step
  int clear_event_radius_min = 1;
  int clear_event_radius_max = 3;

  int max_energy = 300;
  int clear_cost = 30;
  int clear_steps = 3;
  int vision = 5;
  int energy_regen = 1;
  int disable_duration = 10;
  double random_fail_prob = 0.0;

  double obstacle_density = 0.08;   // target fraction of obstacle cells
  int goal_clusters = 2;
  int goal_cluster_size = 3;
  int dispensers_per_type = 2;
  int task_min_duration = 80;
  int task_max_duration = 160;
  int task_max_size = 3;
};

// ---------------------------------------------------------------------------
// State
// ---------------------------------------------------------------------------

enum class Terrain : std::uint8_t { Empty, Obstacle, Goal };

struct TaskSpec {
  struct Requirement {
    Vec2 offset;
    std::string type;
    bool operator==(const Requirement&) const = default;
  };
  std::string name;
  int announced_step = 0;
  int deadline = 0;
  int reward = 0;
  std::vector<Requirement> pattern;

  std::size_t size() const { return pattern.size(); }
};

struct Block {
  std::uint32_t id = 0;
  Vec2 pos;
  std::string type;
  std::optional<std::size_t> holder;  // index into agents
};

struct Dispenser {
  Vec2 pos;
  std::string type;
};

struct ClearCharge {
  Vec2 target;  // absolute cell
  int count = 0;
};

struct AgentState {
  std::string name;
  std::string team;
  Vec2 pos;
  int energy = 0;
  std::optional<int> disabled_until;
  ClearCharge charge;
  Action last_action;
  StepResult last_result;
};

struct Attachment {
  Vec2 offset;
  std::string type;
  bool operator==(const Attachment&) const = default;
};

/// Environment clear: everything within `radius` (Manhattan) of the centre is
/// wiped and agents there are disabled. `agent` re-centres the event on that
/// agent's position at the time it fires.
struct ClearEvent {
  int step = 0;
  Vec2 center;
  int radius = 1;
  std::optional<std::string> agent;
};

enum class ThingType : std::uint8_t { Entity, Block, Dispenser, Obstacle, Goal };

std::string_view to_string(ThingType t);
std::optional<ThingType> parse_thing_type(std::string_view text);

/// One observed thing at agent-relative coordinates. `detail` holds the team
/// for entities and the block type for blocks and dispensers.
struct Thing {
  Vec2 pos;
  ThingType type = ThingType::Obstacle;
  std::string detail;
  auto operator<=>(const Thing&) const = default;
};

/// Per-agent, per-step view of the world in the agent frame (agent at 0,0).
struct Percept {
  std::string name;
  std::string team;
  int step = 0;
  int vision = 5;
  int energy = 0;
  bool disabled = false;
  int score = 0;
  Action last_action;
  Outcome last_outcome = Outcome::Success;
  std::vector<Thing> things;       // sorted
  std::vector<Attachment> attached;  // blocks held by this agent
  std::vector<TaskSpec> tasks;

  bool in_vision(Vec2 rel) const { return manhattan(rel) <= vision; }
  bool has(Vec2 rel, ThingType type) const;
  bool has(Vec2 rel, ThingType type, std::string_view detail) const;
  bool is_obstacle(Vec2 rel) const { return has(rel, ThingType::Obstacle); }
  /// Obstacle or block (the exploration notion of an obstruction).
  bool is_obstruction(Vec2 rel) const;
  bool is_teammate(Vec2 rel) const;
  bool is_opponent(Vec2 rel) const;
  bool is_attached(Vec2 rel) const;
  /// Neither obstacle, block nor entity.
  bool is_free(Vec2 rel) const;
};

/// Authoritative simulator state and step function.
class World {
 public:
  World(WorldConfig config);

  /// Random world from the configured seed. Throws std::invalid_argument when
  /// the configuration cannot be satisfied.
  static World generate(const WorldConfig& config);

  const WorldConfig& config() const { return config_; }
  int step() const { return step_; }
  int width() const { return config_.width; }
  int height() const { return config_.height; }
  bool in_bounds(Vec2 p) const { return p.x >= 0 && p.y >= 0 && p.x < config_.width && p.y < config_.height; }

  // --- construction / test setup -----------------------------------------
  void set_terrain(Vec2 p, Terrain t);
  std::size_t add_agent(std::string name, std::string team, Vec2 pos);
  void add_dispenser(Vec2 p, std::string type);
  std::uint32_t add_block(Vec2 p, std::string type);
  /// Attach a free block to an agent (setup helper; ignores adjacency).
  void attach_block(std::size_t agent, std::uint32_t block_id);
  void add_task(TaskSpec task);
  void schedule_clear_event(ClearEvent ev) { scheduled_events_.push_back(std::move(ev)); }
  void set_energy(std::size_t agent, int energy) { agents_.at(agent).energy = energy; }
  void disable_agent(std::size_t agent, int duration);

  // --- queries -------------------------------------------------------------
  Terrain terrain(Vec2 p) const { return terrain_[index(p)]; }
  const std::vector<AgentState>& agents() const { return agents_; }
  const AgentState& agent(std::size_t i) const { return agents_.at(i); }
  std::optional<std::size_t> find_agent(std::string_view name) const;
  std::optional<std::size_t> agent_at(Vec2 p) const;
  std::optional<std::size_t> block_at(Vec2 p) const;  // index into blocks()
  const std::vector<Block>& blocks() const { return blocks_; }
  const std::vector<Dispenser>& dispensers() const { return dispensers_; }
  std::optional<std::string> dispenser_at(Vec2 p) const;
  const std::vector<TaskSpec>& tasks() const { return tasks_; }
  int score(std::string_view team) const;
  const std::map<std::string, int>& scores() const { return scores_; }
  std::vector<Attachment> attachments(std::size_t agent) const;
  bool is_disabled(std::size_t agent) const;
  /// Completed submissions so far: (step, team, task name, pattern size).
  struct Submission {
    int step;
    std::string team;
    std::string task;
    std::size_t size;
    int reward;
  };
  const std::vector<Submission>& submissions() const { return submissions_; }

  /// Everything at Manhattan distance <= vision, translated to the agent frame.
  Percept percept(std::size_t agent) const;
  Percept percept(std::string_view name) const;

  /// Applies one synchronous step. Agents without an entry skip (flagged as
  /// coerced). Entries naming unknown agents are returned and ignored.
  std::vector<std::string> advance(const std::map<std::string, Action>& actions);

  /// Canonical text serialization; identical states serialize identically.
  std::string serialize() const;
  std::uint64_t hash() const;

  /// Invariant audit: throws std::logic_error when a cell holds two occupants,
  /// energy is out of range or an attachment is inconsistent.
  void check_invariants() const;

 private:
  std::size_t index(Vec2 p) const { return static_cast<std::size_t>(p.y) * config_.width + p.x; }
  void rebuild_occupancy();
  std::vector<Vec2> claimed_cells(std::size_t agent, const Action& a, bool& out_of_bounds) const;
  Outcome apply_shift(std::size_t agent, const Action& a, const std::vector<long>& pre_occupancy);
  Outcome apply_clear(std::size_t agent, Vec2 target);
  Outcome apply_request(std::size_t agent, Dir d);
  Outcome apply_attach(std::size_t agent, Dir d);
  Outcome apply_detach(std::size_t agent, Dir d);
  Outcome apply_connect(std::size_t agent, const std::string& partner, Vec2 offset);
  Outcome apply_submit(std::size_t agent, const std::string& task);
  void release_blocks(std::size_t agent);
  void remove_block(std::size_t block_index);
  void disable_until(std::size_t agent, int until);
  void fire_clear_event(Vec2 center, int radius);
  void maybe_generate_task();
  TaskSpec random_task();

  WorldConfig config_;
  Rng rng_;
  int step_ = 0;
  std::vector<Terrain> terrain_;
  std::vector<AgentState> agents_;
  std::vector<Block> blocks_;
  std::vector<Dispenser> dispensers_;
  std::vector<TaskSpec> tasks_;
  std::vector<ClearEvent> scheduled_events_;
  std::map<std::string, int> scores_;
  std::vector<Submission> submissions_;
  std::uint32_t next_block_id_ = 1;
  int next_task_id_ = 1;

  // occupancy index: -1 empty, >=0 agent index, <=-2 block index (-2 - i)
  std::vector<long> occupancy_;
};

std::string block_type_name(int i);

}  // namespace assemble
