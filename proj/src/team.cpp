#include "assemble/team.hpp"

#include <algorithm>
#include <climits>

namespace assemble {

namespace {

constexpr std::uint64_t kFnvBasis = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::optional<Dir> attached_dir(const Percept& p) {
  for (const auto& a : p.attached)
    if (auto d = dir_of(a.offset)) return d;
  return std::nullopt;
}

bool in_pattern_box(Vec2 v) { return std::abs(v.x) <= 1 && v.y >= 1 && v.y <= 2; }

// Cells next to another entity are left alone: the block there is probably
// attached to it, and a clear would hit a teammate's cargo.
bool next_to_entity(const Percept& p, Vec2 cell) {
  for (Dir d : kAllDirs) {
    const Vec2 n = cell + unit(d);
    if (n != Vec2{} && p.has(n, ThingType::Entity)) return true;
  }
  return false;
}

}  // namespace

TeamController::TeamController(std::string team, std::vector<std::string> roster, TeamOptions opt,
                               std::uint64_t seed)
    : team_(std::move(team)), roster_(std::move(roster)), opt_(opt), rng_(seed), store_(roster_) {
  for (const auto& n : roster_) {
    Memory m;
    m.nav = Navigator(opt_.navigation);
    mem_.emplace(n, std::move(m));
    ledgers_[n];
  }
}

void TeamController::mix(std::string_view text) {
  for (unsigned char c : text) {
    digest_ ^= c;
    digest_ *= kFnvPrime;
  }
  digest_ ^= 0xffU;
  digest_ *= kFnvPrime;
}

std::map<std::string, Action> TeamController::decide(const std::map<std::string, Percept>& ps) {
  notes_.clear();
  planner_calls_ = 0;
  digest_ = kFnvBasis;
  if (ps.empty()) return {};
  step_ = ps.begin()->second.step;

  track_positions(ps);
  delivery_feedback(ps);
  for (const auto& n : roster_)
    if (auto it = ps.find(n); it != ps.end()) store_.observe(n, it->second);
  identify_and_merge(ps);

  announced_ = announced_in(ps.begin()->second.tasks, step_);
  if (!announced_.empty()) pool_.refresh(announced_);
  switch_strategy(announced_, step_);
  if (opt_.watchdog) watchdog(ps, step_);
  claim_clusters(ps);
  assign_slots();

  std::map<std::string, Action> out;
  for (const auto& n : roster_) {
    auto it = ps.find(n);
    if (it == ps.end()) continue;
    Action a = act(n, it->second, step_);
    auto& note = notes_[n];
    note.role = mem_.at(n).role;
    note.energy = it->second.energy;
    note.action = a;
    out[n] = std::move(a);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Shared bookkeeping
// ---------------------------------------------------------------------------

void TeamController::track_positions(const std::map<std::string, Percept>& ps) {
  for (const auto& n : roster_)
    if (auto it = ps.find(n); it != ps.end()) store_.update_position(n, it->second.last_action, it->second.last_outcome);
}

void TeamController::delivery_feedback(const std::map<std::string, Percept>& ps) {
  if (!commit_) return;
  for (std::size_t i = 0; i < commit_->carriers.size(); ++i) {
    const auto& c = commit_->carriers[i];
    auto it = ps.find(c);
    auto& m = mem_.at(c);
    if (it == ps.end() || m.job != Job::Deliver || m.delivering != i) continue;
    if (it->second.last_action.kind == ActionKind::Detach && it->second.last_outcome == Outcome::Success) {
      commit_->delivered[i] = true;
      commit_->last_progress = step_;
      m.delivering.reset();
      m.job = Job::Fetch;
      m.nav.reset();
      mix("delivered " + c);
    }
  }
}

void TeamController::identify_and_merge(const std::map<std::string, Percept>& ps) {
  std::vector<ThingReport> reports;
  for (const auto& n : roster_)
    if (auto it = ps.find(n); it != ps.end()) reports.push_back(make_report(it->second));

  MergeProtocol proto(store_);
  for (const auto& a1 : roster_) {
    auto it = ps.find(a1);
    if (it == ps.end()) continue;
    const Percept& p = it->second;
    const Vec2 me = store_.position(a1);
    std::vector<Vec2> known;
    for (const auto& [other, pos] : store_.map_of(a1).positions)
      if (other != a1) known.push_back(pos - me);
    const ThingReport mine = make_report(p);
    for (Vec2 s : unknown_teammates(p, known)) {
      const auto r = identify(mine, s, reports, p.vision);
      if (r.verdict != Verdict::Identified) continue;
      const std::string& a2 = r.candidates.front();
      ledgers_[a1].record(a2, {step_, s});
      mix("identified " + a1 + " " + a2);
      if (!store_.same_map(a1, a2)) proto.initiate(a1, a2, s);
    }
  }
  proto.run();
  for (const auto& msg : proto.log()) mix(std::string(to_string(msg.kind)) + " " + msg.from + " " + msg.to);
  for (const auto& rec : proto.completed()) shift_memory(rec);
}

void TeamController::shift_memory(const MergeRecord& rec) {
  for (const auto& name : rec.moved) {
    auto& m = mem_.at(name);
    for (auto* v : {&m.nav_target, &m.dispenser, &m.stand, &m.slot})
      if (*v) **v += rec.offset;
    m.nav.reset();
    if (stock_.holds(name)) {
      const auto e = stock_.parked().at(name);
      stock_.park(name, e.type, e.slot + rec.offset);
    }
    if (origin_ == name && origin_goal_) *origin_goal_ += rec.offset;
    if (m.evaluator) {
      std::vector<int> claimed;
      for (const auto& c : store_.map(rec.survivor).clusters)
        if (c.status == ClusterStatus::Evaluating && c.evaluator == name) claimed.push_back(c.id);
      for (int id : claimed) store_.reset_evaluation(rec.survivor, id);
      m.evaluator.reset();
      m.role = Role::Explorer;
      m.explore = {};
    }
  }
}

void TeamController::claim_clusters(const std::map<std::string, Percept>& ps) {
  for (const auto& n : roster_) {
    auto& mm = mem_.at(n);
    auto it = ps.find(n);
    if (mm.role != Role::Explorer || it == ps.end() || it->second.disabled) continue;
    const auto& m = store_.map_of(n);
    // one good cluster per group is all the strategy uses
    if (std::any_of(m.clusters.begin(), m.clusters.end(),
                    [](const GoalCluster& c) { return c.status == ClusterStatus::Good; }))
      continue;
    const Vec2 me = store_.position(n);
    std::vector<std::pair<int, Vec2>> open;
    for (const auto& c : m.clusters) {
      if (c.status != ClusterStatus::Unevaluated) continue;
      const Vec2 near = *std::min_element(c.cells.begin(), c.cells.end(), [&](Vec2 a, Vec2 b) {
        return manhattan(a - me) < manhattan(b - me);
      });
      if (manhattan(near - me) <= kVision) open.push_back({c.id, near});
    }
    for (const auto& [id, near] : open)
      if (store_.try_claim_evaluation(m.id, id, n)) {
        mm.evaluator.emplace(id, near, opt_.evaluation);
        mm.role = Role::Evaluator;
        mm.nav.reset();
        mix("evaluate " + n + " " + std::to_string(id));
        break;
      }
  }
}

void TeamController::switch_strategy(const std::vector<TaskSpec>& announced, int step) {
  auto exploring = [&](const std::string& n) {
    const Role r = mem_.at(n).role;
    return r == Role::Explorer || r == Role::Evaluator;
  };
  if (origin_) {
    const int om = store_.map_id(*origin_);
    for (const auto& n : roster_)
      if (exploring(n) && store_.map_id(n) == om) {
        become_retriever(n);
        mix("join " + n);
      }
    return;
  }
  if (announced.empty()) return;
  std::vector<std::string> stoppers;
  for (const auto& n : roster_)
    if (exploring(n) && should_stop_exploring(store_.map_of(n), announced, false)) stoppers.push_back(n);
  const auto elected = elect_origin(stoppers, roster_, false);
  if (!elected) return;

  const auto& m = store_.map_of(*elected);
  const GoalCluster* chosen = nullptr;
  int rank = INT_MAX;
  for (const auto& c : m.clusters) {
    if (c.status != ClusterStatus::Good) continue;
    auto it = good_order_.find(c.id);
    const int r = it == good_order_.end() ? INT_MAX - 1 : it->second;
    if (!chosen || r < rank) {
      chosen = &c;
      rank = r;
    }
  }
  if (!chosen) return;
  origin_goal_ = cluster_centers(chosen->cells).front();
  origin_ = *elected;
  origin_settled_ = false;
  if (!stop_step_) stop_step_ = step;
  mix("origin " + *elected);

  const std::vector<std::string> members = m.members;
  for (const auto& n : members) {
    if (n == *elected) continue;
    become_retriever(n);
  }
  auto& om = mem_.at(*elected);
  if (om.evaluator) {
    std::vector<int> claimed;
    for (const auto& c : m.clusters)
      if (c.status == ClusterStatus::Evaluating && c.evaluator == *elected) claimed.push_back(c.id);
    for (int id : claimed) store_.reset_evaluation(m.id, id);
    om.evaluator.reset();
  }
  om.role = Role::Origin;
  om.nav.reset();
}

void TeamController::become_retriever(const std::string& name) {
  auto& m = mem_.at(name);
  if (m.evaluator) {
    const auto& map = store_.map_of(name);
    std::vector<int> claimed;
    for (const auto& c : map.clusters)
      if (c.status == ClusterStatus::Evaluating && c.evaluator == name) claimed.push_back(c.id);
    for (int id : claimed) store_.reset_evaluation(map.id, id);
    m.evaluator.reset();
  }
  m.role = Role::Retriever;
  m.job = Job::Fetch;
  m.job_steps = 0;
  m.nav.reset();
  m.wanted.reset();
  m.dispenser.reset();
  m.stand.reset();
  m.delivering.reset();
}

void TeamController::assign_slots() {
  if (!origin_ || !origin_goal_) return;
  const auto& map = store_.map_of(*origin_);
  const GoalCluster* c = map.cluster_of(*origin_goal_);
  if (!c) return;
  std::set<Vec2> used;
  for (const auto& n : roster_)
    if (mem_.at(n).role == Role::Retriever && mem_.at(n).slot) used.insert(*mem_.at(n).slot);
  for (const auto& n : roster_) {
    auto& m = mem_.at(n);
    if (m.role != Role::Retriever || m.slot) continue;
    for (Vec2 s : c->slots)
      if (used.insert(s).second) {
        m.slot = s;
        mix("slot " + n + " " + to_string(s));
        break;
      }
  }
}

void TeamController::watchdog(const std::map<std::string, Percept>& ps, int step) {
  if (!origin_) return;
  bool fire = false;
  if (auto it = ps.find(*origin_); it != ps.end() && it->second.disabled) fire = true;
  if (commit_ && step - commit_->last_progress > opt_.watchdog_patience) fire = true;
  if (fire) full_reset();
}

void TeamController::full_reset() {
  if (commit_) ++failed_commitments_;
  store_.reset();
  for (auto& [_, l] : ledgers_) l = IdentificationLedger{};
  for (const auto& n : roster_) {
    Memory m;
    m.nav = Navigator(opt_.navigation);
    m.role = Role::Recovering;
    m.cleanup_left = opt_.cleanup_clears * 3;
    mem_[n] = std::move(m);
  }
  pool_ = BlockPool{};
  stock_.clear();
  origin_.reset();
  origin_goal_.reset();
  origin_settled_ = false;
  commit_.reset();
  good_order_.clear();
  ++resets_;
  mix("reset");
}

// ---------------------------------------------------------------------------
// Per-role behaviour
// ---------------------------------------------------------------------------

Action TeamController::act(const std::string& name, const Percept& p, int step) {
  auto& m = mem_.at(name);
  if (p.disabled) {
    m.nav.reset();
    if (m.role == Role::Explorer) m.explore = {};
    if (m.role == Role::Retriever && p.attached.empty() && m.job == Job::Parked) {
      stock_.remove(name);
      m.job = Job::Fetch;
    }
    return Action::skip();
  }
  switch (m.role) {
    case Role::Explorer: return explore(name, p);
    case Role::Evaluator: return evaluate(name, p);
    case Role::Origin: return originate(name, p, step);
    case Role::Retriever: return retrieve(name, p);
    case Role::Recovering: return recover(name, p);
  }
  return Action::skip();
}

Action TeamController::explore(const std::string& name, const Percept& p) {
  auto& m = mem_.at(name);
  auto d = choose_exploration_action(p, m.explore, rng_, opt_.exploration);
  m.explore = d.state;
  auto& note = notes_[name];
  note.exploring = true;
  note.rule_distance = d.rule_distance;
  return d.action;
}

Action TeamController::evaluate(const std::string& name, const Percept& p) {
  auto& m = mem_.at(name);
  auto& ev = *m.evaluator;
  const int mid = store_.map_id(name);
  const GoalCluster* c = store_.map(mid).cluster(ev.cluster_id());
  if (!c || c->status != ClusterStatus::Evaluating || c->evaluator != name) {
    // the cluster fused with another one or was taken over
    std::vector<int> claimed;
    for (const auto& k : store_.map(mid).clusters)
      if (k.status == ClusterStatus::Evaluating && k.evaluator == name) claimed.push_back(k.id);
    for (int id : claimed) store_.reset_evaluation(mid, id);
    m.evaluator.reset();
    m.role = Role::Explorer;
    m.explore = {};
    return explore(name, p);
  }
  Action a = ev.step(store_.position(name), p, store_.map(mid), rng_);
  if (ev.finished()) {
    const int id = ev.cluster_id();
    if (ev.result() == ClusterStatus::Unevaluated) {
      store_.reset_evaluation(mid, id);
    } else {
      store_.finish_evaluation(mid, id, ev.result(), ev.slots());
      if (ev.result() == ClusterStatus::Good) good_order_[id] = good_count_++;
    }
    mix("evaluated " + std::to_string(id) + " " + std::string(to_string(ev.result())));
    m.evaluator.reset();
    m.role = Role::Explorer;
    m.explore = {};
  }
  return a;
}

Action TeamController::navigate(const std::string& name, const Percept& p, Vec2 target, PlanGoal::Kind kind) {
  auto& m = mem_.at(name);
  if (m.nav_target != target || m.nav_kind != kind) {
    m.nav.reset();
    m.nav_target = target;
    m.nav_kind = kind;
  }
  const Vec2 rel = target - store_.position(name);
  const int before = m.nav.planner_calls();
  Action a = m.nav.step(p, {kind, rel}, rng_, planner_calls_ < opt_.planner_cap);
  planner_calls_ += m.nav.planner_calls() - before;
  return a;
}

std::optional<Action> TeamController::clear_nearby(const Percept& p, int max_distance, bool pattern_only) const {
  if (p.energy < opt_.clear_cost) return std::nullopt;
  std::vector<Vec2> cands;
  for (const auto& t : p.things) {
    if (t.type != ThingType::Obstacle && t.type != ThingType::Block) continue;
    if (t.pos == Vec2{} || p.is_attached(t.pos)) continue;
    if (pattern_only ? !in_pattern_box(t.pos) : manhattan(t.pos) > max_distance) continue;
    if (next_to_entity(p, t.pos)) continue;
    cands.push_back(t.pos);
  }
  if (cands.empty()) return std::nullopt;
  std::sort(cands.begin(), cands.end(), [](Vec2 a, Vec2 b) {
    if (manhattan(a) != manhattan(b)) return manhattan(a) < manhattan(b);
    return a < b;
  });
  return Action::clear(cands.front());
}

Action TeamController::recover(const std::string& name, const Percept& p) {
  auto& m = mem_.at(name);
  if (auto d = attached_dir(p)) return Action::detach(*d);
  if (m.cleanup_left > 0) {
    if (auto a = clear_nearby(p, 2, false)) {
      --m.cleanup_left;
      return *a;
    }
  }
  m.cleanup_left = 0;
  m.role = Role::Explorer;
  m.explore = {};
  return explore(name, p);
}

// --- origin ------------------------------------------------------------------

Action TeamController::originate(const std::string& name, const Percept& p, int step) {
  auto& m = mem_.at(name);
  if (commit_) return assemble_step(p, step);
  if (auto d = attached_dir(p)) return Action::detach(*d);

  const Vec2 pos = store_.position(name);
  if (pos != *origin_goal_) {
    const Vec2 rel = *origin_goal_ - pos;
    const auto& map = store_.map_of(name);
    const GoalCluster* here = map.cluster_of(pos);
    // someone sits on the chosen cell: any goal cell of the same cluster will do
    if (p.in_vision(rel) && p.has(rel, ThingType::Entity) && here && here == map.cluster_of(*origin_goal_)) {
      origin_goal_ = pos;
      mix("origin moved " + to_string(pos));
    } else {
      return navigate(name, p, *origin_goal_, PlanGoal::Kind::AgentAt);
    }
  }
  origin_settled_ = true;

  if (m.cleanup_left > 0) {
    if (auto a = clear_nearby(p, kVision, false)) {
      --m.cleanup_left;
      return *a;
    }
    m.cleanup_left = 0;
  }
  if (auto a = clear_nearby(p, 0, true)) return *a;
  if (!announced_.empty()) {
    commit(p, announced_, step);
    if (commit_) return assemble_step(p, step);
  }
  return Action::skip();
}

void TeamController::commit(const Percept& p, const std::vector<TaskSpec>& announced, int step) {
  auto t = select_task(announced, stock_, *origin_goal_, step, opt_.min_time_left);
  if (!t) return;
  for (const auto& r : t->pattern)
    if (!p.is_free(r.offset)) return;
  Commitment c;
  c.task = *t;
  c.carriers = *stock_.assign(*t, *origin_goal_);
  c.order = attach_order(*t, &c.parents);
  c.dispatched.assign(t->size(), false);
  c.delivered.assign(t->size(), false);
  c.committed_step = c.last_progress = step;
  commit_ = std::move(c);
  ++commitments_;
  mix("commit " + t->name);
}

Action TeamController::assemble_step(const Percept& p, int step) {
  auto& c = *commit_;
  if (p.last_action.kind == ActionKind::Submit && p.last_action.name == c.task.name &&
      p.last_outcome == Outcome::Success) {
    end_commitment(true, step);
    return Action::skip();
  }
  const bool alive = std::any_of(p.tasks.begin(), p.tasks.end(), [&](const TaskSpec& t) { return t.name == c.task.name; });
  if (!alive || step > c.task.deadline) {
    end_commitment(false, step);
    if (auto d = attached_dir(p)) return Action::detach(*d);
    return Action::skip();
  }
  if (p.last_action.kind == ActionKind::Connect && p.last_outcome == Outcome::Success) {
    ++c.connected;
    c.last_progress = step;
  }

  std::map<Vec2, std::string> held;
  for (const auto& a : p.attached) held[a.offset] = a.type;
  const bool complete = held.size() == c.task.size() &&
                        std::all_of(c.task.pattern.begin(), c.task.pattern.end(), [&](const auto& r) {
                          auto it = held.find(r.offset);
                          return it != held.end() && it->second == r.type;
                        });
  if (complete) return Action::submit(c.task.name);

  auto parent_held = [&](std::size_t i) {
    const int par = c.parents[i];
    return par < 0 || held.count(c.task.pattern[static_cast<std::size_t>(par)].offset) > 0;
  };

  // Carriers that lost their block go back to the queue.
  for (std::size_t i = 0; i < c.carriers.size(); ++i) {
    const auto& m = mem_.at(c.carriers[i]);
    if (c.dispatched[i] && !c.delivered[i] && (m.job != Job::Deliver || m.delivering != i)) c.dispatched[i] = false;
  }

  std::vector<std::size_t> in_flight;
  for (std::size_t i = 0; i < c.carriers.size(); ++i)
    if (c.dispatched[i] && !c.delivered[i]) in_flight.push_back(i);
  for (std::size_t idx : c.order) {
    if (static_cast<int>(in_flight.size()) >= opt_.max_in_flight) break;
    if (c.dispatched[idx] || c.delivered[idx]) continue;
    if (!parent_held(idx) || !parallel_safe(c.parents, in_flight, idx)) continue;
    const auto& req = c.task.pattern[idx];
    if (!stock_.holds(c.carriers[idx]) || stock_.parked().at(c.carriers[idx]).type != req.type) {
      // the assigned carrier is gone; take the closest other parked block of the type
      std::optional<std::string> best;
      int best_d = 0;
      for (const auto& [agent, e] : stock_.parked()) {
        if (e.type != req.type || std::find(c.carriers.begin(), c.carriers.end(), agent) != c.carriers.end()) continue;
        const int d = manhattan(e.slot, *origin_goal_ + req.offset);
        if (!best || d < best_d) {
          best = agent;
          best_d = d;
        }
      }
      if (!best) continue;
      c.carriers[idx] = *best;
    }
    auto& m = mem_.at(c.carriers[idx]);
    c.dispatched[idx] = true;
    m.job = Job::Deliver;
    m.delivering = idx;
    m.job_steps = 0;
    m.nav.reset();
    stock_.remove(c.carriers[idx]);
    in_flight.push_back(idx);
    mix("bring " + c.carriers[idx] + " " + to_string(req.offset));
  }

  for (std::size_t idx : c.order) {
    const auto& r = c.task.pattern[idx];
    if (held.count(r.offset) || !parent_held(idx)) continue;
    if (c.delivered[idx] && p.has(r.offset, ThingType::Block, r.type)) return Action::connect(c.carriers[idx], r.offset);
    // an obstacle grew on a cell nobody is bringing to yet; blocks are left
    // alone while a task is in progress
    if (p.is_obstacle(r.offset) && !c.dispatched[idx] && p.energy >= opt_.clear_cost) return Action::clear(r.offset);
  }
  return Action::skip();
}

void TeamController::end_commitment(bool success, int /*step*/) {
  auto& c = *commit_;
  for (std::size_t i = 0; i < c.carriers.size(); ++i) {
    auto& m = mem_.at(c.carriers[i]);
    if (m.job == Job::Deliver && m.delivering == i) {
      // still carrying: back to the slot, the block returns to the stock
      m.delivering.reset();
      m.job = Job::ToSlot;
      m.job_steps = 0;
      m.nav.reset();
    }
  }
  if (!success) ++failed_commitments_;
  mem_.at(*origin_).cleanup_left = opt_.cleanup_clears * 3;
  mix(success ? "submitted " + c.task.name : "abandoned " + c.task.name);
  commit_.reset();
}

// --- retriever ---------------------------------------------------------------

void TeamController::pick_dispenser(const std::string& name) {
  auto& m = mem_.at(name);
  const auto& map = store_.map_of(name);
  std::set<std::string> kinds;
  for (const auto& [_, type] : map.dispensers) kinds.insert(type);
  const std::vector<std::string> known(kinds.begin(), kinds.end());
  if (known.empty()) {
    m.dispenser.reset();
    return;
  }
  std::optional<std::string> want;
  const std::size_t tries = std::max<std::size_t>(pool_.types().size(), 1);
  for (std::size_t k = 0; k < tries && !want; ++k)
    if (auto t = pool_.next(known); t && kinds.count(*t)) want = t;
  if (!want) want = known.front();

  const Vec2 pos = store_.position(name);
  const auto previous = m.dispenser;
  std::optional<Vec2> best;
  for (const auto& [cell, type] : map.dispensers) {
    if (type != *want) continue;
    // the dispenser that just failed goes last when there is another one
    auto score = [&](Vec2 c) { return manhattan(c - pos) + (previous && c == *previous ? 1000 : 0); };
    if (!best || score(cell) < score(*best)) best = cell;
  }
  m.wanted = want;
  m.dispenser = best;
  m.stand.reset();
  m.job_steps = 0;
}

Action TeamController::retrieve(const std::string& name, const Percept& p) {
  auto& m = mem_.at(name);
  ++m.job_steps;
  const Vec2 pos = store_.position(name);
  const bool holding = !p.attached.empty();

  for (int hop = 0; hop < 6; ++hop) {
    switch (m.job) {
      case Job::None:
      case Job::Cleanup:
      case Job::Fetch:
        if (holding) {
          m.job = Job::ToSlot;
          m.job_steps = 0;
          continue;
        }
        pick_dispenser(name);
        if (!m.dispenser) return explore(name, p);
        m.job = Job::ToDispenser;
        mix("fetch " + name + " " + *m.wanted);
        continue;

      case Job::ToDispenser: {
        if (holding) {
          m.job = Job::ToSlot;
          m.job_steps = 0;
          continue;
        }
        if (m.job_steps > opt_.fetch_timeout) {
          mix("unreachable " + name + " " + to_string(*m.dispenser));
          pick_dispenser(name);
          m.nav.reset();
          if (!m.dispenser) return explore(name, p);
        }
        const Vec2 disp = *m.dispenser;
        auto usable = [&](Vec2 cell) {
          const Vec2 rel = cell - pos;
          return cell == pos || !p.in_vision(rel) || p.is_free(rel);
        };
        if (!m.stand || !usable(*m.stand)) {
          std::vector<Vec2> sides;
          for (Dir d : kAllDirs) sides.push_back(disp + unit(d));
          std::stable_sort(sides.begin(), sides.end(),
                           [&](Vec2 a, Vec2 b) { return manhattan(a - pos) < manhattan(b - pos); });
          m.stand = sides.front();
          for (Vec2 s : sides)
            if (usable(s)) {
              m.stand = s;
              break;
            }
        }
        if (pos == *m.stand) {
          m.job = Job::Collect;
          continue;
        }
        return navigate(name, p, *m.stand, PlanGoal::Kind::AgentAt);
      }

      case Job::Collect: {
        if (holding) {
          m.job = Job::ToSlot;
          m.job_steps = 0;
          continue;
        }
        if (!m.stand || pos != *m.stand) {
          m.job = Job::ToDispenser;
          continue;
        }
        if (m.job_steps > opt_.fetch_timeout) {
          m.job = Job::ToDispenser;  // re-picks on the timeout path
          continue;
        }
        const Vec2 rel = *m.dispenser - pos;
        const Dir d = *dir_of(rel);
        if (p.has(rel, ThingType::Block)) return Action::attach(d);
        if (p.has(rel, ThingType::Entity)) return Action::skip();
        return Action::request(d);
      }

      case Job::ToSlot: {
        if (!holding) {
          m.job = Job::Fetch;
          continue;
        }
        const Vec2 dest = m.slot ? *m.slot : pos;
        if (pos == dest || m.job_steps > 2 * opt_.fetch_timeout) {
          stock_.park(name, p.attached.front().type, pos);
          m.job = Job::Parked;
          mix("parked " + name + " " + p.attached.front().type);
          return Action::skip();
        }
        return navigate(name, p, dest, PlanGoal::Kind::AgentAt);
      }

      case Job::Parked:
        if (!holding) {
          stock_.remove(name);
          m.job = Job::Fetch;
          continue;
        }
        if (!stock_.holds(name)) stock_.park(name, p.attached.front().type, pos);
        return Action::skip();

      case Job::Deliver: {
        if (!holding) {
          m.delivering.reset();
          m.job = Job::Fetch;
          continue;
        }
        if (!commit_ || !m.delivering) {
          m.delivering.reset();
          m.job = Job::ToSlot;
          continue;
        }
        const Vec2 target = *origin_goal_ + commit_->task.pattern[*m.delivering].offset;
        const Vec2 off = p.attached.front().offset;
        if (pos + off == target) {
          if (auto d = dir_of(off)) return Action::detach(*d);
        }
        return navigate(name, p, target, PlanGoal::Kind::BlockAt);
      }
    }
  }
  return Action::skip();
}

}  // namespace assemble
