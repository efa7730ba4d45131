#include "assemble/scenarios.hpp"

#include <algorithm>
#include <memory>
#include <set>

#include "assemble/path_planner.hpp"

namespace assemble {

namespace {

// Fixed seeds on which the team commits early in the match.
constexpr std::uint64_t kBlockadeSeed = 3;
constexpr std::uint64_t kDisableSeed = 3;
constexpr int kMatchSteps = 500;
// The disabled origin stays down long enough for its tasks to expire.
constexpr int kLongDisable = 100;

MatchConfig benign(std::uint64_t seed, bool watchdog) {
  MatchConfig c;
  c.world.seed = seed;
  c.world.clear_event_rate = 0;  // only the scripted event
  c.steps = kMatchSteps;
  c.options.watchdog = watchdog;
  return c;
}

Vec2 absolute_of(const World& w, const std::string& agent) { return w.agent(*w.find_agent(agent)).pos; }

bool submitted(const MatchResult& r, const std::string& task) {
  return std::any_of(r.submissions.begin(), r.submissions.end(), [&](const auto& s) { return s.task == task; });
}

int submissions_between(const MatchResult& r, const std::string& team, int from, int to) {
  return static_cast<int>(std::count_if(r.submissions.begin(), r.submissions.end(), [&](const auto& s) {
    return s.team == team && s.step > from && s.step <= to;
  }));
}

struct Incident {
  bool fired = false;
  int step = 0;
  std::string task;
  int deadline = 0;
  int resets_before = 0;
  int reset_step = -1;
  std::set<std::string> explored_after_reset;
  std::set<std::string> active_at_reset;  // agents able to act when the reset happened
};

// Records the first reset after the incident and who went back to exploring.
void track(Incident& t, const World& w, const TeamController& team) {
  if (!t.fired) return;
  if (t.reset_step < 0 && team.resets() > t.resets_before) {
    t.reset_step = w.step();
    for (const auto& n : team.roster())
      if (!w.is_disabled(*w.find_agent(n))) t.active_at_reset.insert(n);
  }
  if (t.reset_step >= 0 && w.step() - t.reset_step <= 40)
    for (const auto& n : team.roster())
      if (team.role(n) == Role::Explorer || team.role(n) == Role::Evaluator) t.explored_after_reset.insert(n);
}

ScenarioRun blockade(bool flags) {
  auto t = std::make_shared<Incident>();
  MatchObserver obs;
  obs.hook = [t](const World& w, const TeamController& team) {
    std::vector<Intervention> ivs;
    if (t->fired || !team.commitment() || !team.origin()) return ivs;
    const auto& c = *team.commitment();
    if (w.step() - c.committed_step > 1) return ivs;
    const Vec2 origin = absolute_of(w, *team.origin());
    const std::size_t first = c.order.front();
    const Vec2 target = origin + c.task.pattern[first].offset;
    // wait for a commitment whose carrier still has some way to go and whose
    // target can be walled in completely
    if (manhattan(absolute_of(w, c.carriers[first]) - target) < 3) return ivs;
    for (Dir d : kAllDirs) {
      const Vec2 n = target + unit(d);
      if (n == origin) continue;
      if (!w.in_bounds(n) || w.terrain(n) != Terrain::Empty || w.agent_at(n) || w.block_at(n) || w.dispenser_at(n))
        return std::vector<Intervention>{};
      ivs.push_back({Intervention::Kind::Block, n, block_type_name(0), 1});
    }
    t->fired = true;
    t->step = w.step();
    t->task = c.task.name;
    t->deadline = c.task.deadline;
    t->resets_before = team.resets();
    return ivs;
  };
  obs.after_step = [t](const World& w, const TeamController& team) { track(*t, w, team); };
  const auto r = run_match(benign(kBlockadeSeed, flags), obs);

  ScenarioRun run;
  run.flags = flags;
  run.replay = r.replay;
  if (!t->fired) {
    run.detail = "the team never committed to a task";
    return run;
  }
  const bool done = submitted(r, t->task);
  const int later = t->reset_step < 0 ? 0 : submissions_between(r, "A", t->reset_step, kMatchSteps);
  run.failure = !done;
  run.recovered = t->reset_step >= 0 && t->reset_step < t->deadline && later > 0;
  run.detail = "task " + t->task + " committed, blocks placed at step " + std::to_string(t->step) + "; " +
               (done ? "submitted" : "not submitted, carrier stuck until step " + std::to_string(t->deadline)) +
               (t->reset_step >= 0 ? "; reset at step " + std::to_string(t->reset_step) + ", " +
                                         std::to_string(later) + " submissions afterwards"
                                   : "; no reset");
  return run;
}

ScenarioRun disabled_origin(bool flags) {
  auto t = std::make_shared<Incident>();
  MatchObserver obs;
  obs.hook = [t](const World& w, const TeamController& team) {
    std::vector<Intervention> ivs;
    if (t->fired || !team.commitment() || !team.origin()) return ivs;
    const auto& c = *team.commitment();
    if (c.connected == 0 || c.connected >= c.task.pattern.size()) return ivs;
    ivs.push_back({Intervention::Kind::ClearEvent, absolute_of(w, *team.origin()), {}, 1});
    t->fired = true;
    t->step = w.step();
    t->task = c.task.name;
    t->deadline = c.task.deadline;
    t->resets_before = team.resets();
    return ivs;
  };
  obs.after_step = [t](const World& w, const TeamController& team) { track(*t, w, team); };
  auto config = benign(kDisableSeed, flags);
  config.world.disable_duration = kLongDisable;
  const auto r = run_match(config, obs);

  ScenarioRun run;
  run.flags = flags;
  run.replay = r.replay;
  if (!t->fired) {
    run.detail = "the team never committed to a task";
    return run;
  }
  const bool done = submitted(r, t->task);
  const int quiet = submissions_between(r, "A", t->step, t->deadline);
  run.failure = !done && quiet == 0;
  const bool all_back = std::includes(t->explored_after_reset.begin(), t->explored_after_reset.end(),
                                      t->active_at_reset.begin(), t->active_at_reset.end());
  const int later = t->reset_step < 0 ? 0 : submissions_between(r, "A", t->reset_step, kMatchSteps);
  run.recovered = t->reset_step >= 0 && t->reset_step - t->step <= 3 && all_back && later > 0;
  run.detail = "origin hit at step " + std::to_string(t->step) + " during task " + t->task + "; " +
               (done ? "task submitted" : "task lost") + ", " + std::to_string(quiet) + " submissions until step " +
               std::to_string(t->deadline) +
               (t->reset_step >= 0 ? "; reset at step " + std::to_string(t->reset_step) + ", " +
                                         std::to_string(t->explored_after_reset.size()) + " of " +
                                         std::to_string(t->active_at_reset.size()) + " active agents exploring again, " +
                                         std::to_string(later) + " submissions afterwards"
                                   : "; no reset");
  return run;
}

ScenarioRun squatted(bool guard) {
  WorldConfig c;
  c.width = 30;
  c.height = 30;
  c.task_rate = 0;
  c.clear_event_rate = 0;
  World w(c);
  const Vec2 dest{20, 15};
  w.add_agent("A1", "A", {4, 15});
  w.add_agent("B1", "B", dest);

  NavigatorOptions opt;
  opt.livelock_guard = guard;
  Navigator nav(opt);
  Rng rng(11);

  constexpr int kSteps = 120;
  int best = manhattan(dest - w.agent(0).pos);
  int last_gain = 0;
  int stall = 0;
  std::optional<int> perturbed_at;
  std::optional<Vec2> detour;
  int detour_start = 0;
  std::optional<int> closer_at;
  for (int s = 0; s < kSteps; ++s) {
    const Vec2 pos = w.agent(0).pos;
    const Action a = nav.step(w.percept(std::size_t{0}), {PlanGoal::Kind::AgentAt, dest - pos}, rng);
    if (!perturbed_at && nav.perturbation()) {
      perturbed_at = s;
      detour = dest + *nav.perturbation();
      detour_start = manhattan(*detour - pos);
    }
    w.advance({{"A1", a}, {"B1", Action::skip()}});
    const Vec2 now = w.agent(0).pos;
    const int d = manhattan(dest - now);
    if (d < best) {
      best = d;
      last_gain = s;
    }
    stall = std::max(stall, s - last_gain);
    if (detour && !closer_at && manhattan(*detour - now) < detour_start) closer_at = s;
  }

  ScenarioRun run;
  run.flags = guard;
  run.failure = stall >= 50;
  run.recovered = perturbed_at && closer_at && *closer_at - *perturbed_at <= 20;
  run.detail = "closest approach " + std::to_string(best) + ", longest stretch without progress " +
               std::to_string(stall) + " steps" +
               (perturbed_at ? "; destination moved at step " + std::to_string(*perturbed_at) +
                                   (closer_at ? ", closer after " + std::to_string(*closer_at - *perturbed_at) + " steps"
                                              : ", no progress afterwards")
                             : "; destination never moved");
  return run;
}

}  // namespace

ScenarioReport scenario_blocks_near_origin() {
  return {"blocks_near_origin", "blocks around the first pattern cell trap the carrier; watchdog resets the team",
          blockade(false), blockade(true)};
}

ScenarioReport scenario_squatted_destination() {
  return {"squatted_destination", "an opponent parks on the destination; the livelock guard moves it",
          squatted(false), squatted(true)};
}

ScenarioReport scenario_origin_disabled() {
  return {"origin_disabled", "a clear event disables the origin mid-task; watchdog resets the team",
          disabled_origin(false), disabled_origin(true)};
}

std::vector<std::string> scenario_names() { return {"blocks_near_origin", "squatted_destination", "origin_disabled"}; }

std::optional<ScenarioReport> run_scenario(const std::string& name) {
  if (name == "blocks_near_origin") return scenario_blocks_near_origin();
  if (name == "squatted_destination") return scenario_squatted_destination();
  if (name == "origin_disabled") return scenario_origin_disabled();
  return std::nullopt;
}

}  // namespace assemble
