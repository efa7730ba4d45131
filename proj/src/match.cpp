#include "assemble/match.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "assemble/goal_eval.hpp"

namespace assemble {

using nlohmann::json;

namespace {

constexpr std::uint64_t kFnvBasis = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;
constexpr const char* kFormat = "assemble-replay";
constexpr int kVersion = 1;

std::uint64_t fnv(std::uint64_t h, std::string_view text) {
  for (unsigned char c : text) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << v;
  return out.str();
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument(std::string("bad value for '") + key + "'");
  }
}

// --- scripted opponents ------------------------------------------------------

class Opponent {
 public:
  Opponent(OpponentPolicy policy, std::uint64_t seed) : policy_(policy), rng_(seed) {}

  std::map<std::string, Action> decide(const World& w, const std::string& team) {
    if (goals_.empty())
      for (int y = 0; y < w.height(); ++y)
        for (int x = 0; x < w.width(); ++x)
          if (w.terrain({x, y}) == Terrain::Goal) goals_.push_back({x, y});
    std::map<std::string, Action> out;
    std::size_t k = 0;
    for (std::size_t i = 0; i < w.agents().size(); ++i) {
      const auto& a = w.agent(i);
      if (a.team != team) continue;
      const Percept p = w.percept(i);
      out[a.name] = policy_ == OpponentPolicy::RandomWalker ? walk() : squat(a, p, k);
      ++k;
    }
    return out;
  }

 private:
  Action walk() {
    if (rng_.chance(0.1)) return Action::skip();
    return Action::move(kAllDirs[rng_.below(4)]);
  }

  // Heads for a goal cell (ground truth) and, once there, clears foreign
  // blocks around it.
  Action squat(const AgentState& a, const Percept& p, std::size_t k) {
    if (goals_.empty() || p.disabled) return Action::skip();
    const Vec2 target = goals_[k % goals_.size()];
    if (a.pos != target) return movers_[a.name].step(target - a.pos, p);
    if (p.energy < 30) return Action::skip();
    std::optional<Vec2> victim;
    for (const auto& t : p.things)
      if (t.type == ThingType::Block && !p.is_attached(t.pos) && manhattan(t.pos) <= 3 &&
          (!victim || manhattan(t.pos) < manhattan(*victim)))
        victim = t.pos;
    return victim ? Action::clear(*victim) : Action::skip();
  }

  OpponentPolicy policy_;
  Rng rng_;
  std::vector<Vec2> goals_;
  std::map<std::string, GreedyMover> movers_;
};

void apply_interventions(World& w, const std::vector<Intervention>& ivs) {
  for (const auto& iv : ivs) {
    if (iv.kind == Intervention::Kind::Block) w.add_block(iv.cell, iv.type);
    else w.schedule_clear_event({w.step(), iv.cell, iv.radius, std::nullopt});
  }
}

json to_json(const Intervention& iv) {
  if (iv.kind == Intervention::Kind::Block) return {{"block", {iv.cell.x, iv.cell.y}}, {"type", iv.type}};
  return {{"clear", {iv.cell.x, iv.cell.y}}, {"radius", iv.radius}};
}

Intervention intervention_from_json(const json& j) {
  Intervention iv;
  if (j.contains("block")) {
    iv.cell = {j.at("block").at(0).get<int>(), j.at("block").at(1).get<int>()};
    iv.type = j.at("type").get<std::string>();
  } else {
    iv.kind = Intervention::Kind::ClearEvent;
    iv.cell = {j.at("clear").at(0).get<int>(), j.at("clear").at(1).get<int>()};
    iv.radius = j.at("radius").get<int>();
  }
  return iv;
}

void audit_decisions(const std::map<std::string, Percept>& ps, const TeamController& team, const MatchConfig& c,
                     AuditCounters& audit) {
  int origins = 0;
  for (const auto& [name, note] : team.notes()) {
    if (note.role == Role::Origin) ++origins;
    if (!note.exploring) continue;
    const Percept& p = ps.at(name);
    if (note.action.kind == ActionKind::Move) {
      ++audit.exploration_moves;
      if (obstructed(p, note.action.dir, note.rule_distance, c.options.exploration.wide_cone)) ++audit.rule_violations;
    }
    if (note.action.kind == ActionKind::Clear && note.energy <= c.options.exploration.clear_threshold)
      ++audit.low_energy_clears;
  }
  if (origins > 1) ++audit.multiple_origins;
}

void audit_world(const World& w, const TeamController& team, AuditCounters& audit) {
  for (const auto& a : w.agents())
    if (a.energy < 0) ++audit.negative_energy;
  for (const auto& [agent, entry] : team.stock().parked()) {
    const auto i = w.find_agent(agent);
    const auto held = i ? w.attachments(*i) : std::vector<Attachment>{};
    if (std::none_of(held.begin(), held.end(), [&](const Attachment& h) { return h.type == entry.type; }))
      ++audit.stock_mismatches;
  }
}

VerifyResult fail(std::optional<int> step, std::string message) {
  return {false, step, std::move(message)};
}

}  // namespace

std::string_view to_string(OpponentPolicy p) {
  switch (p) {
    case OpponentPolicy::None: return "none";
    case OpponentPolicy::RandomWalker: return "random_walker";
    case OpponentPolicy::GoalSquatter: return "goal_squatter";
  }
  return "none";
}

std::optional<OpponentPolicy> parse_opponent(std::string_view text) {
  for (auto p : {OpponentPolicy::None, OpponentPolicy::RandomWalker, OpponentPolicy::GoalSquatter})
    if (to_string(p) == text) return p;
  return std::nullopt;
}

WorldConfig MatchConfig::world_config() const {
  WorldConfig w = world;
  w.teams = {team};
  if (opponent != OpponentPolicy::None) w.teams.push_back(opponent_team);
  return w;
}

json to_json(const MatchConfig& c) {
  const auto& w = c.world;
  json world = {{"width", w.width},
                {"height", w.height},
                {"seed", w.seed},
                {"agents_per_team", w.agents_per_team},
                {"block_types", w.block_types},
                {"task_rate", w.task_rate},
                {"clear_event_rate", w.clear_event_rate},
                {"clear_event_radius_min", w.clear_event_radius_min},
                {"clear_event_radius_max", w.clear_event_radius_max},
                {"max_energy", w.max_energy},
                {"clear_cost", w.clear_cost},
                {"clear_steps", w.clear_steps},
                {"vision", w.vision},
                {"energy_regen", w.energy_regen},
                {"disable_duration", w.disable_duration},
                {"random_fail_prob", w.random_fail_prob},
                {"obstacle_density", w.obstacle_density},
                {"goal_clusters", w.goal_clusters},
                {"goal_cluster_size", w.goal_cluster_size},
                {"dispensers_per_type", w.dispensers_per_type},
                {"task_min_duration", w.task_min_duration},
                {"task_max_duration", w.task_max_duration},
                {"task_max_size", w.task_max_size}};
  const auto& o = c.options;
  json flags = {{"watchdog", o.watchdog},
                {"wide_cone", o.exploration.wide_cone},
                {"planner_cap", o.planner_cap},
                {"livelock_guard", o.navigation.livelock_guard},
                {"watchdog_patience", o.watchdog_patience},
                {"max_in_flight", o.max_in_flight},
                {"min_time_left", o.min_time_left}};
  return {{"world", world},
          {"team", c.team},
          {"opponent_team", c.opponent_team},
          {"opponent", std::string(to_string(c.opponent))},
          {"steps", c.steps},
          {"flags", flags},
          {"decision_budget_ms", c.decision_budget_ms}};
}

MatchConfig config_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  MatchConfig c;
  if (j.contains("world")) {
    const json& w = j.at("world");
    if (!w.is_object()) throw std::invalid_argument("'world' must be an object");
    auto& o = c.world;
    read(w, "width", o.width);
    read(w, "height", o.height);
    read(w, "seed", o.seed);
    read(w, "agents_per_team", o.agents_per_team);
    read(w, "block_types", o.block_types);
    read(w, "task_rate", o.task_rate);
    read(w, "clear_event_rate", o.clear_event_rate);
    read(w, "clear_event_radius_min", o.clear_event_radius_min);
    read(w, "clear_event_radius_max", o.clear_event_radius_max);
    read(w, "max_energy", o.max_energy);
    read(w, "clear_cost", o.clear_cost);
    read(w, "clear_steps", o.clear_steps);
    read(w, "vision", o.vision);
    read(w, "energy_regen", o.energy_regen);
    read(w, "disable_duration", o.disable_duration);
    read(w, "random_fail_prob", o.random_fail_prob);
    read(w, "obstacle_density", o.obstacle_density);
    read(w, "goal_clusters", o.goal_clusters);
    read(w, "goal_cluster_size", o.goal_cluster_size);
    read(w, "dispensers_per_type", o.dispensers_per_type);
    read(w, "task_min_duration", o.task_min_duration);
    read(w, "task_max_duration", o.task_max_duration);
    read(w, "task_max_size", o.task_max_size);
  }
  read(j, "team", c.team);
  read(j, "opponent_team", c.opponent_team);
  std::string opponent(to_string(c.opponent));
  read(j, "opponent", opponent);
  const auto policy = parse_opponent(opponent);
  if (!policy) throw std::invalid_argument("unknown opponent policy '" + opponent + "'");
  c.opponent = *policy;
  read(j, "steps", c.steps);
  read(j, "decision_budget_ms", c.decision_budget_ms);
  if (j.contains("flags")) {
    const json& f = j.at("flags");
    auto& o = c.options;
    read(f, "watchdog", o.watchdog);
    read(f, "wide_cone", o.exploration.wide_cone);
    read(f, "planner_cap", o.planner_cap);
    read(f, "livelock_guard", o.navigation.livelock_guard);
    read(f, "watchdog_patience", o.watchdog_patience);
    read(f, "max_in_flight", o.max_in_flight);
    read(f, "min_time_left", o.min_time_left);
  }
  if (c.steps < 0) throw std::invalid_argument("'steps' must not be negative");
  if (c.decision_budget_ms <= 0) throw std::invalid_argument("'decision_budget_ms' must be positive");
  if (c.options.planner_cap < 0) throw std::invalid_argument("'planner_cap' must not be negative");
  if (c.options.max_in_flight < 1) throw std::invalid_argument("'max_in_flight' must be at least 1");
  if (c.team.empty() || c.team == c.opponent_team) throw std::invalid_argument("team names must differ");
  return c;
}

MatchConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  try {
    return config_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

std::optional<int> MatchResult::first_submission(const std::string& team, std::size_t min_size) const {
  for (const auto& s : submissions)
    if (s.team == team && s.size >= min_size) return s.step;
  return std::nullopt;
}

MatchResult run_match(const MatchConfig& config, const MatchObserver& observer) {
  World world = World::generate(config.world_config());
  std::vector<std::string> roster;
  for (const auto& a : world.agents())
    if (a.team == config.team) roster.push_back(a.name);
  TeamController team(config.team, roster, config.options, config.world.seed ^ 0x5eed7ea3ULL);
  std::optional<Opponent> opponent;
  if (config.opponent != OpponentPolicy::None) opponent.emplace(config.opponent, config.world.seed ^ 0x0bb0ULL);

  MatchResult r;
  r.replay.push_back(json{{"format", kFormat}, {"version", kVersion}, {"config", to_json(config)}}.dump());
  std::uint64_t chain = kFnvBasis;
  const auto budget = std::chrono::milliseconds(config.decision_budget_ms);

  for (int s = 0; s < config.steps; ++s) {
    std::vector<Intervention> ivs;
    if (observer.hook) ivs = observer.hook(world, team);
    apply_interventions(world, ivs);

    std::map<std::string, Percept> ps;
    for (const auto& n : roster) ps.emplace(n, world.percept(std::string_view(n)));
    std::map<std::string, Action> actions;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      actions = team.decide(ps);
    } catch (const std::exception&) {
      actions.clear();  // a failed decision is recorded as no action
    }
    if (std::chrono::steady_clock::now() - t0 > budget) {
      actions.clear();
      ++r.overruns;
    }
    if (observer.after_decide) observer.after_decide(world, team);
    audit_decisions(ps, team, config, r.audit);
    audit_world(world, team, r.audit);
    if (opponent)
      for (auto& [n, a] : opponent->decide(world, config.opponent_team)) actions[n] = std::move(a);

    world.advance(actions);
    for (const auto& a : world.agents())
      if (a.energy < 0) ++r.audit.negative_energy;

    json rec;
    rec["step"] = s + 1;
    json acts = json::object();
    for (const auto& [n, a] : actions) acts[n] = to_string(a);
    rec["actions"] = acts;
    json outs = json::object();
    for (const auto& a : world.agents()) outs[a.name] = std::string(to_string(a.last_result.outcome));
    rec["outcomes"] = outs;
    rec["scores"] = world.scores();
    rec["hash"] = hex(world.hash());
    rec["digest"] = hex(team.message_digest());
    if (!ivs.empty()) {
      json ev = json::array();
      for (const auto& iv : ivs) ev.push_back(to_json(iv));
      rec["events"] = ev;
    }
    chain = fnv(chain, rec.dump());
    rec["chain"] = hex(chain);
    r.replay.push_back(rec.dump());
    if (observer.after_step) observer.after_step(world, team);
  }

  r.scores = world.scores();
  r.submissions = world.submissions();
  r.steps = config.steps;
  r.resets = team.resets();
  r.commitments = team.commitments();
  r.failed_commitments = team.failed_commitments();
  r.stop_step = team.stop_step();
  return r;
}

VerifyResult verify_replay(const std::vector<std::string>& lines) {
  if (lines.empty()) return fail(std::nullopt, "line 1: empty replay");
  json header;
  try {
    header = json::parse(lines[0]);
  } catch (const json::parse_error& e) {
    return fail(std::nullopt, std::string("line 1: ") + e.what());
  }
  if (!header.is_object() || header.value("format", "") != kFormat || header.value("version", 0) != kVersion ||
      !header.contains("config"))
    return fail(std::nullopt, "line 1: not a replay header of a supported version");

  MatchConfig config;
  std::optional<World> world;
  try {
    config = config_from_json(header.at("config"));
    world.emplace(World::generate(config.world_config()));
  } catch (const std::exception& e) {
    return fail(std::nullopt, std::string("line 1: ") + e.what());
  }

  std::uint64_t chain = kFnvBasis;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string where = "line " + std::to_string(i + 1) + ": ";
    const int expected = static_cast<int>(i);
    json rec;
    std::map<std::string, Action> actions;
    std::vector<Intervention> ivs;
    try {
      rec = json::parse(lines[i]);
      if (rec.at("step").get<int>() != expected) return fail(expected, where + "unexpected step number");
      for (const auto& [n, text] : rec.at("actions").items()) {
        auto a = parse_action(text.get<std::string>());
        if (!a) return fail(expected, where + "malformed action '" + text.get<std::string>() + "'");
        actions[n] = *a;
      }
      if (rec.contains("events"))
        for (const auto& ev : rec.at("events")) ivs.push_back(intervention_from_json(ev));
      rec.at("hash").get<std::string>();
      rec.at("chain").get<std::string>();
      rec.at("outcomes").items();
    } catch (const json::exception& e) {
      return fail(expected, where + e.what());
    }

    apply_interventions(*world, ivs);
    world->advance(actions);
    for (const auto& a : world->agents()) {
      auto it = rec["outcomes"].find(a.name);
      if (it == rec["outcomes"].end() || *it != std::string(to_string(a.last_result.outcome)))
        return fail(expected, "step " + std::to_string(expected) + ": outcome of " + a.name + " differs");
    }
    if (rec["hash"] != hex(world->hash()))
      return fail(expected, "step " + std::to_string(expected) + ": world hash differs");

    const std::string recorded_chain = rec["chain"];
    rec.erase("chain");
    chain = fnv(chain, rec.dump());
    if (recorded_chain != hex(chain))
      return fail(expected, "step " + std::to_string(expected) + ": record does not match the hash chain");
  }
  if (static_cast<int>(lines.size()) - 1 != config.steps)
    return fail(static_cast<int>(lines.size()), "replay ends before the configured step limit");
  return {true, std::nullopt, "ok"};
}

VerifyResult verify_replay_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) return fail(std::nullopt, "cannot open " + path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return verify_replay(lines);
}

void write_replay(const std::vector<std::string>& lines, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& l : lines) out << l << '\n';
}

}  // namespace assemble
