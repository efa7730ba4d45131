#include "assemble/path_planner.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <sstream>
#include <unordered_map>

namespace assemble {

PlanningSnapshot PlanningSnapshot::from_percept(const Percept& p, PlanGoal goal, int clear_cost) {
  PlanningSnapshot s;
  s.goal = goal;
  s.clear_allowed = p.energy >= clear_cost;
  if (p.attached.size() == 1 && manhattan(p.attached[0].offset) == 1) s.attached = p.attached[0].offset;
  for (const auto& t : p.things) {
    if (!in_diamond(t.pos) || t.pos == Vec2{}) continue;
    if (s.attached && t.pos == *s.attached) continue;
    if (t.type == ThingType::Obstacle && s.at(t.pos) == CellClass::Free) s.set(t.pos, CellClass::Obstacle);
    if (t.type == ThingType::Block || t.type == ThingType::Entity) s.set(t.pos, CellClass::Blocked);
  }
  // Any other held block makes the structure too big to plan for; treat it
  // as an obstruction so plans never assume it moves along.
  for (const auto& a : p.attached)
    if (!(s.attached && a.offset == *s.attached)) s.set(a.offset, CellClass::Blocked);
  return s;
}

int action_cost(const Action& a) { return a.kind == ActionKind::Clear ? 3 : 1; }

namespace {

struct Node {
  Vec2 pos;
  std::optional<Vec2> block;
  std::uint64_t cleared = 0;
};

struct Key {
  std::uint64_t cleared;
  std::uint32_t cell;
  bool operator==(const Key&) const = default;
};

struct KeyHash {
  std::size_t operator()(const Key& k) const noexcept {
    return std::hash<std::uint64_t>{}(k.cleared * 0x9E3779B97F4A7C15ULL ^ k.cell);
  }
};

class Search {
 public:
  explicit Search(const PlanningSnapshot& s) : s_(s) {
    for (int y = -kVision; y <= kVision; ++y)
      for (int x = -kVision; x <= kVision; ++x)
        if (s.at({x, y}) == CellClass::Obstacle) bit_[{x, y}] = static_cast<int>(bit_.size());
  }

  bool passable(Vec2 c, std::uint64_t cleared) const {
    switch (s_.at(c)) {
      case CellClass::Free: return true;
      case CellClass::Blocked: return false;
      case CellClass::Obstacle: return (cleared >> bit_.at(c)) & 1U;
    }
    return false;
  }

  // Consistent lower bound: a move shifts the agent (and block) by one cell,
  // a rotation shifts the block by at most two, a clear shifts nothing.
  int heuristic(const Node& n) const {
    if (s_.goal.kind == PlanGoal::Kind::AgentAt) return manhattan(s_.goal.dest - n.pos);
    const Vec2 b = n.block ? n.pos + *n.block : n.pos;
    return (manhattan(s_.goal.dest - b) + 1) / 2;
  }

  bool goal(const Node& n) const {
    if (s_.goal.kind == PlanGoal::Kind::AgentAt) return n.pos == s_.goal.dest;
    return n.block && n.pos + *n.block == s_.goal.dest;
  }

  Key key(const Node& n) const {
    std::uint32_t att = 0;
    if (n.block) att = 1 + static_cast<std::uint32_t>(*dir_of(*n.block));
    return {n.cleared, static_cast<std::uint32_t>(PlanningSnapshot::index(n.pos)) * 5 + att};
  }

  // Applies `a` to `n`; nullopt when illegal.
  std::optional<Node> apply(const Node& n, const Action& a) const {
    Node out = n;
    switch (a.kind) {
      case ActionKind::Move: {
        const Vec2 u = unit(a.dir);
        const Vec2 to = n.pos + u;
        if (!(n.block && to == n.pos + *n.block) && !passable(to, n.cleared)) return std::nullopt;
        if (n.block) {
          const Vec2 bto = n.pos + *n.block + u;
          if (bto != n.pos && !passable(bto, n.cleared)) return std::nullopt;
        }
        out.pos = to;
        return out;
      }
      case ActionKind::Rotate: {
        if (!n.block) return std::nullopt;
        const Vec2 o = rotate(*n.block, a.rotation);
        if (!passable(n.pos + o, n.cleared)) return std::nullopt;
        out.block = o;
        return out;
      }
      case ActionKind::Clear: {
        if (!s_.clear_allowed || manhattan(a.target) != 1) return std::nullopt;
        const Vec2 c = n.pos + a.target;
        if (s_.at(c) != CellClass::Obstacle || passable(c, n.cleared)) return std::nullopt;
        out.cleared |= std::uint64_t{1} << bit_.at(c);
        return out;
      }
      default: return std::nullopt;
    }
  }

  static const std::vector<Action>& moves() {
    static const std::vector<Action> all = [] {
      std::vector<Action> v;
      for (Dir d : kAllDirs) v.push_back(Action::move(d));
      v.push_back(Action::rotate(Rotation::CW));
      v.push_back(Action::rotate(Rotation::CCW));
      for (Dir d : kAllDirs) v.push_back(Action::clear(unit(d)));
      return v;
    }();
    return all;
  }

 private:
  const PlanningSnapshot& s_;
  std::map<Vec2, int> bit_;
};

}  // namespace

Plan plan(const PlanningSnapshot& s, const PlannerOptions& opt) {
  Search search(s);
  const Node start{{0, 0}, s.attached, 0};
  if (search.goal(start)) return {};
  if (!PlanningSnapshot::in_diamond(s.goal.dest)) return {};

  struct Entry {
    Node node;
    int cost;
    long parent;
    Action via;
  };
  std::vector<Entry> nodes{{start, 0, -1, Action::skip()}};
  std::unordered_map<Key, int, KeyHash> best{{search.key(start), 0}};
  using Item = std::tuple<int, std::size_t, std::size_t>;  // estimate, sequence, node index
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  open.emplace(search.heuristic(start), 0, 0);
  const auto deadline = std::chrono::steady_clock::now() + opt.budget;
  std::size_t expansions = 0;

  while (!open.empty()) {
    const auto idx = std::get<2>(open.top());
    open.pop();
    const Node cur = nodes[idx].node;
    const int cost = nodes[idx].cost;
    if (best.at(search.key(cur)) < cost) continue;
    if (search.goal(cur)) {
      Plan out;
      out.cost = cost;
      for (long i = static_cast<long>(idx); nodes[static_cast<std::size_t>(i)].parent >= 0;
           i = nodes[static_cast<std::size_t>(i)].parent)
        out.actions.push_back(nodes[static_cast<std::size_t>(i)].via);
      std::reverse(out.actions.begin(), out.actions.end());
      return out;
    }
    if (++expansions > opt.max_expansions) return {};
    if ((expansions & 1023U) == 0 && std::chrono::steady_clock::now() > deadline) return {};
    for (const auto& a : Search::moves()) {
      auto next = search.apply(cur, a);
      if (!next) continue;
      const int c = cost + action_cost(a);
      const Key k = search.key(*next);
      auto it = best.find(k);
      if (it != best.end() && it->second <= c) continue;
      best[k] = c;
      nodes.push_back({*next, c, static_cast<long>(idx), a});
      open.emplace(c + search.heuristic(*next), nodes.size() - 1, nodes.size() - 1);
    }
  }
  return {};
}

bool plan_reaches_goal(const PlanningSnapshot& s, const Plan& p) {
  Search search(s);
  Node n{{0, 0}, s.attached, 0};
  int cost = 0;
  for (const auto& a : p.actions) {
    auto next = search.apply(n, a);
    if (!next) return false;
    n = *next;
    cost += action_cost(a);
  }
  return cost == p.cost && search.goal(n);
}

namespace {

bool good_cell(const PlanningSnapshot& s, Vec2 c) {
  const auto cls = s.at(c);
  return cls == CellClass::Free || (cls == CellClass::Obstacle && s.clear_allowed);
}

std::vector<Vec2> border_cells() {
  std::vector<Vec2> out;
  for (int y = -kVision; y <= kVision; ++y)
    for (int x = -kVision; x <= kVision; ++x)
      if (manhattan({x, y}) == kVision) out.push_back({x, y});
  return out;
}

// Closest to `target` by Manhattan, then by squared Euclidean distance.
void sort_by_closeness(std::vector<Vec2>& cells, Vec2 target) {
  std::stable_sort(cells.begin(), cells.end(), [&](Vec2 a, Vec2 b) {
    const int da = manhattan(a, target), db = manhattan(b, target);
    if (da != db) return da < db;
    const Vec2 ea = a - target, eb = b - target;
    return ea.x * ea.x + ea.y * ea.y < eb.x * eb.x + eb.y * eb.y;
  });
}

Dir axis_dir(Vec2 d) {
  const int ax = std::abs(d.x), ay = std::abs(d.y);
  if (ax > ay) return d.x > 0 ? Dir::E : Dir::W;
  return d.y > 0 ? Dir::S : Dir::N;
}

}  // namespace

std::optional<Vec2> select_destination(Vec2 final_dest, const PlanningSnapshot& s) {
  if (manhattan(final_dest) <= kVision) return good_cell(s, final_dest) ? std::optional(final_dest) : std::nullopt;
  auto border = border_cells();
  sort_by_closeness(border, final_dest);
  if (good_cell(s, border.front())) return border.front();

  const Vec2 axis = unit(axis_dir(final_dest)) * kVision;
  if (good_cell(s, axis)) return axis;
  std::vector<Vec2> around;
  for (Vec2 c : border)
    if (c != axis) around.push_back(c);
  sort_by_closeness(around, axis);
  for (std::size_t i = 0; i < 3 && i < around.size(); ++i)
    if (good_cell(s, around[i])) return around[i];
  return std::nullopt;
}

Action fallback_step(const PlanningSnapshot& s, Vec2 dest) {
  auto free_move = [&](Dir d) {
    const Vec2 u = unit(d);
    if (!(s.attached && u == *s.attached) && s.at(u) != CellClass::Free) return false;
    if (s.attached) {
      const Vec2 b = *s.attached + u;
      if (b != Vec2{} && s.at(b) != CellClass::Free) return false;
    }
    return true;
  };
  if (dest != Vec2{}) {
    const Dir preferred = axis_dir(dest);
    if (free_move(preferred)) return Action::move(preferred);
  }
  std::optional<Dir> best;
  for (Dir d : kAllDirs)
    if (free_move(d) && (!best || manhattan(dest - unit(d)) < manhattan(dest - unit(*best)))) best = d;
  return best ? Action::move(*best) : Action::skip();
}

// ---------------------------------------------------------------------------
// PDDL
// ---------------------------------------------------------------------------

namespace {

std::string cell_name(Vec2 p) {
  auto part = [](int v) { return v < 0 ? "m" + std::to_string(-v) : std::to_string(v); };
  return "c_" + part(p.x) + "_" + part(p.y);
}

}  // namespace

std::string export_pddl_domain(bool clear_allowed) {
  std::ostringstream out;
  out << "(define (domain assemble-move)\n"
      << "  (:requirements :strips :typing :action-costs)\n"
      << "  (:types cell dir)\n"
      << "  (:predicates (adj ?a ?b - cell ?d - dir) (free ?c - cell) (obstacle ?c - cell)\n"
      << "               (agent-at ?c - cell) (block-at ?c - cell) (attached)\n"
      << "               (turn-cw ?a ?from ?to - cell) (turn-ccw ?a ?from ?to - cell))\n"
      << "  (:functions (total-cost))\n"
      << "  (:action move\n"
      << "    :parameters (?from ?to - cell ?d - dir)\n"
      << "    :precondition (and (agent-at ?from) (adj ?from ?to ?d) (free ?to) (not (attached)))\n"
      << "    :effect (and (not (agent-at ?from)) (agent-at ?to) (free ?from) (not (free ?to))\n"
      << "                 (increase (total-cost) 1)))\n"
      << "  (:action move-with-block\n"
      << "    :parameters (?from ?to ?bfrom ?bto - cell ?d - dir)\n"
      << "    :precondition (and (attached) (agent-at ?from) (block-at ?bfrom) (adj ?from ?to ?d)\n"
      << "                       (adj ?bfrom ?bto ?d) (or (free ?to) (= ?to ?bfrom)) (or (free ?bto) (= ?bto ?from)))\n"
      << "    :effect (and (not (agent-at ?from)) (agent-at ?to) (not (block-at ?bfrom)) (block-at ?bto)\n"
      << "                 (free ?from) (free ?bfrom) (not (free ?to)) (not (free ?bto))\n"
      << "                 (increase (total-cost) 1)))\n"
      << "  (:action rotate-cw\n"
      << "    :parameters (?a ?from ?to - cell)\n"
      << "    :precondition (and (attached) (agent-at ?a) (block-at ?from) (turn-cw ?a ?from ?to) (free ?to))\n"
      << "    :effect (and (not (block-at ?from)) (block-at ?to) (free ?from) (not (free ?to))\n"
      << "                 (increase (total-cost) 1)))\n"
      << "  (:action rotate-ccw\n"
      << "    :parameters (?a ?from ?to - cell)\n"
      << "    :precondition (and (attached) (agent-at ?a) (block-at ?from) (turn-ccw ?a ?from ?to) (free ?to))\n"
      << "    :effect (and (not (block-at ?from)) (block-at ?to) (free ?from) (not (free ?to))\n"
      << "                 (increase (total-cost) 1)))\n";
  if (clear_allowed)
    out << "  (:action clear\n"
        << "    :parameters (?a ?c - cell ?d - dir)\n"
        << "    :precondition (and (agent-at ?a) (adj ?a ?c ?d) (obstacle ?c))\n"
        << "    :effect (and (not (obstacle ?c)) (free ?c) (increase (total-cost) 3)))\n";
  out << ")\n";
  return out.str();
}

std::string export_pddl_problem(const PlanningSnapshot& s) {
  std::vector<Vec2> cells;
  for (int y = -kVision; y <= kVision; ++y)
    for (int x = -kVision; x <= kVision; ++x)
      if (manhattan({x, y}) <= kVision) cells.push_back({x, y});
  std::ostringstream out;
  out << "(define (problem vision-snapshot)\n  (:domain assemble-move)\n  (:objects";
  for (Vec2 c : cells) out << " " << cell_name(c);
  out << " - cell n s e w - dir)\n  (:init\n    (= (total-cost) 0)\n";
  out << "    (agent-at " << cell_name({0, 0}) << ")\n";
  if (s.attached) out << "    (attached)\n    (block-at " << cell_name(*s.attached) << ")\n";
  for (Vec2 c : cells) {
    const bool occupied_by_self = c == Vec2{} || (s.attached && c == *s.attached);
    switch (s.at(c)) {
      case CellClass::Free:
        if (!occupied_by_self) out << "    (free " << cell_name(c) << ")\n";
        else out << "    (self " << cell_name(c) << ")\n";
        break;
      case CellClass::Obstacle: out << "    (obstacle " << cell_name(c) << ")\n"; break;
      case CellClass::Blocked: out << "    (blocked " << cell_name(c) << ")\n"; break;
    }
  }
  for (Vec2 c : cells)
    for (Dir d : kAllDirs)
      if (PlanningSnapshot::in_diamond(c + unit(d)))
        out << "    (adj " << cell_name(c) << " " << cell_name(c + unit(d)) << " " << to_char(d) << ")\n";
  if (s.attached)
    for (Vec2 o : {Vec2{0, -1}, Vec2{0, 1}, Vec2{1, 0}, Vec2{-1, 0}}) {
      out << "    (turn-cw " << cell_name({0, 0}) << " " << cell_name(o) << " "
          << cell_name(rotate(o, Rotation::CW)) << ")\n";
      out << "    (turn-ccw " << cell_name({0, 0}) << " " << cell_name(o) << " "
          << cell_name(rotate(o, Rotation::CCW)) << ")\n";
    }
  out << "  )\n  (:goal ("
      << (s.goal.kind == PlanGoal::Kind::AgentAt ? "agent-at " : "block-at ") << cell_name(s.goal.dest) << "))\n"
      << "  (:metric minimize (total-cost))\n)\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

void PlanExecutor::load(const Plan& p) {
  queue_.clear();
  for (const auto& a : p.actions) {
    const int repeat = a.kind == ActionKind::Clear ? clear_steps_ : 1;
    for (int i = 0; i < repeat; ++i) queue_.push_back(a);
  }
  std::reverse(queue_.begin(), queue_.end());
  emitted_ = false;
}

void PlanExecutor::feedback(const Action& last, Outcome outcome) {
  if (!emitted_) return;
  emitted_ = false;
  if (last.kind != ActionKind::Move) return;
  if (outcome == Outcome::Success) {
    displacement_ += unit(last.dir);
  } else {
    ++failed_moves_;
    shortfall_ += unit(last.dir);
  }
}

std::optional<Action> PlanExecutor::next() {
  if (queue_.empty()) return std::nullopt;
  Action a = queue_.back();
  queue_.pop_back();
  emitted_ = true;
  return a;
}

void Navigator::reset() {
  exec_.cancel();
  fallback_streak_ = 0;
  best_distance_ = INT32_MAX;
  perturb_.reset();
}

PlanGoal Navigator::effective_goal(PlanGoal g) const {
  if (perturb_) g.dest += *perturb_;
  return g;
}

Action Navigator::step(const Percept& p, PlanGoal final_goal, Rng& rng, bool planner_available) {
  exec_.feedback(p.last_action, p.last_outcome);
  const PlanGoal goal = effective_goal(final_goal);
  auto snap = PlanningSnapshot::from_percept(p, goal, opt_.clear_cost);

  const bool arrived = goal.kind == PlanGoal::Kind::AgentAt ? goal.dest == Vec2{}
                                                            : (snap.attached && *snap.attached == goal.dest);
  if (arrived) {
    exec_.cancel();
    return Action::skip();
  }
  if (exec_.active()) return *exec_.next();

  if (planner_available) {
    std::optional<Vec2> dest;
    PlanGoal local = goal;
    if (manhattan(goal.dest) <= kVision) {
      dest = goal.dest;
    } else {
      dest = select_destination(goal.dest, snap);
      local = {PlanGoal::Kind::AgentAt, dest.value_or(Vec2{})};
    }
    if (dest) {
      snap.goal = local;
      ++planner_calls_;
      Plan pl = plan(snap, opt_.planner);
      if (!pl.empty()) {
        fallback_streak_ = 0;
        exec_.load(pl);
        return *exec_.next();
      }
    }
  }

  // Fallback, with the livelock guard watching for lack of progress.
  const int dist = manhattan(goal.dest);
  if (dist < best_distance_) {
    best_distance_ = dist;
    fallback_streak_ = 0;
  } else {
    ++fallback_streak_;
  }
  if (opt_.livelock_guard && goal.kind == PlanGoal::Kind::AgentAt && fallback_streak_ >= opt_.guard_after) {
    std::vector<Vec2> options;
    for (int dy = -opt_.perturbation; dy <= opt_.perturbation; ++dy)
      for (int dx = -opt_.perturbation; dx <= opt_.perturbation; ++dx) {
        const Vec2 off{dx, dy};
        const Vec2 cell = final_goal.dest + off;
        if (off == Vec2{} || (perturb_ && off == *perturb_)) continue;
        if (snap.at(cell) == CellClass::Free || !PlanningSnapshot::in_diamond(cell)) options.push_back(off);
      }
    if (!options.empty()) {
      perturb_ = options[rng.below(options.size())];
      ++perturbations_;
    }
    fallback_streak_ = 0;
    best_distance_ = INT32_MAX;
  }
  return fallback_step(snap, goal.dest);
}

}  // namespace assemble
