#include "assemble/exploration.hpp"

#include <vector>

namespace assemble {

namespace {

std::vector<Vec2> rule_cells(Dir d, int distance, bool wide_cone) {
  std::vector<Vec2> cells;
  for (int k = 1; k <= distance; ++k) cells.push_back(unit(d) * k);
  if (wide_cone) {
    cells.push_back(unit(d) + unit(right_of(d)));
    cells.push_back(unit(d) + unit(left_of(d)));
  }
  return cells;
}

Dir pick(const DirSet& set, Rng& rng) {
  std::vector<Dir> dirs;
  set.for_each([&](Dir d) { dirs.push_back(d); });
  return dirs[rng.below(dirs.size())];
}

bool is_special(ExploreMode m) { return m == ExploreMode::SpecialStage1 || m == ExploreMode::SpecialStage2; }

class Explorer {
 public:
  Explorer(const Percept& p, ExplorationState& s, Rng& rng, const ExplorationOptions& opt)
      : p_(p), s_(s), rng_(rng), opt_(opt) {}

  Action decide() {
    if (p_.disabled) {
      s_.clear_target.reset();
      s_.clear_count = 0;
      s_.forced.reset();
      return Action::skip();
    }
    if (auto a = continue_clear()) return *a;
    if (all_sides_teammates()) {
      DirSet legal;
      for (Dir d : kAllDirs)
        if (!blocked(d)) legal.insert(d);
      return legal.empty() ? Action::skip() : Action::move(pick(legal, rng_));
    }
    if (s_.forced) {
      const Dir d = *s_.forced;
      s_.forced.reset();
      if (!blocked(d)) return Action::move(d);
    }
    return by_mode(0);
  }

  int distance() const { return is_special(s_.mode) ? opt_.relaxed_distance : opt_.normal_distance; }

 private:
  bool blocked(Dir d) const { return obstructed(p_, d, distance(), opt_.wide_cone); }

  bool all_sides_teammates() const {
    for (Dir d : kAllDirs)
      if (!p_.is_teammate(unit(d))) return false;
    return true;
  }

  std::optional<Action> continue_clear() {
    if (!s_.clear_target) return std::nullopt;
    const bool last_was_clear = p_.last_action.kind == ActionKind::Clear;
    const bool charging = s_.clear_count > 0 && s_.clear_count < 3;
    if (charging && last_was_clear && p_.last_outcome == Outcome::Success && p_.is_obstruction(*s_.clear_target)) {
      ++s_.clear_count;
      return Action::clear(*s_.clear_target);
    }
    s_.clear_target.reset();
    s_.clear_count = 0;
    return std::nullopt;
  }

  Action start_clear(Vec2 target) {
    s_.clear_target = target;
    s_.clear_count = 1;
    return Action::clear(target);
  }

  bool can_clear() const { return p_.energy > opt_.clear_threshold; }

  // Move in `d`, going around a teammate that stands right in front.
  Action go(Dir d) {
    if (!p_.is_teammate(unit(d))) return Action::move(d);
    for (Dir side : {right_of(d), left_of(d)})
      if (!blocked(side) && p_.is_free(unit(side))) return Action::move(side);
    return Action::skip();
  }

  Action by_mode(int depth) {
    switch (s_.mode) {
      case ExploreMode::Normal: return normal(depth);
      case ExploreMode::SpecialStage1: return stage1(depth);
      case ExploreMode::SpecialStage2: return stage2(depth);
      case ExploreMode::BoxedIn: return boxed(depth);
    }
    return Action::skip();
  }

  void reset_normal() {
    s_.mode = ExploreMode::Normal;
    s_.valid_dirs = DirSet::all();
    s_.current_dir.reset();
    s_.stage_steps = 0;
  }

  Action normal(int depth) {
    if (s_.current_dir && s_.valid_dirs.contains(*s_.current_dir)) {
      const Dir cur = *s_.current_dir;
      if (!blocked(cur)) return go(cur);
      if (can_clear())
        if (auto target = nearest_obstruction(p_, cur, distance(), opt_.wide_cone)) return start_clear(*target);
      s_.valid_dirs.erase(cur);
      s_.valid_dirs.erase(opposite(cur));
    }
    s_.current_dir.reset();
    for (Dir d : kAllDirs)
      if (s_.valid_dirs.contains(d) && blocked(d)) s_.valid_dirs.erase(d);
    if (s_.valid_dirs.empty()) {
      s_.mode = ExploreMode::SpecialStage1;
      s_.stage_steps = 0;
      return by_mode(depth + 1);
    }
    const Dir d = pick(s_.valid_dirs, rng_);
    s_.current_dir = d;
    return go(d);
  }

  // Keeps the stage direction until it is blocked or the stage cap is hit.
  std::optional<Action> keep_stage_dir() {
    if (!s_.current_dir) return std::nullopt;
    if (s_.stage_steps < opt_.stage_cap && !blocked(*s_.current_dir)) return go(*s_.current_dir);
    s_.current_dir.reset();
    return std::nullopt;
  }

  Action stage1(int depth) {
    if (s_.current_dir) {
      if (auto a = keep_stage_dir()) return *a;
      s_.mode = ExploreMode::SpecialStage2;
      s_.stage_steps = 0;
      return by_mode(depth + 1);
    }
    DirSet candidates;
    for (Dir d : kAllDirs)
      if (!(s_.last_dir && d == opposite(*s_.last_dir)) && !blocked(d)) candidates.insert(d);
    if (candidates.empty()) {
      s_.mode = ExploreMode::BoxedIn;
      s_.boxed_phase = 0;
      return by_mode(depth + 1);
    }
    const Dir d = pick(candidates, rng_);
    s_.current_dir = d;
    s_.stage_steps = 0;
    return go(d);
  }

  Action stage2(int depth) {
    if (s_.current_dir) {
      if (auto a = keep_stage_dir()) return *a;
      reset_normal();
      return depth < 3 ? by_mode(depth + 1) : Action::skip();
    }
    const bool vertical = s_.last_dir && is_vertical(*s_.last_dir);
    DirSet candidates;
    for (Dir d : vertical ? std::array<Dir, 2>{Dir::E, Dir::W} : std::array<Dir, 2>{Dir::N, Dir::S})
      if (!blocked(d)) candidates.insert(d);
    if (candidates.empty()) {
      reset_normal();
      return depth < 3 ? by_mode(depth + 1) : Action::skip();
    }
    const Dir d = pick(candidates, rng_);
    s_.current_dir = d;
    s_.stage_steps = 0;
    return go(d);
  }

  Action boxed(int depth) {
    if (s_.boxed_phase == 0) {
      s_.boxed_phase = 1;
      return Action::skip();
    }
    s_.boxed_phase = 0;
    reset_normal();
    if (can_clear()) {
      DirSet adjacent;
      for (Dir d : kAllDirs)
        if (p_.is_obstruction(unit(d))) adjacent.insert(d);
      if (!adjacent.empty()) return start_clear(unit(pick(adjacent, rng_)));
    }
    return depth < 3 ? by_mode(depth + 1) : Action::skip();
  }

  const Percept& p_;
  ExplorationState& s_;
  Rng& rng_;
  const ExplorationOptions& opt_;
};

}  // namespace

bool obstructed(const Percept& p, Dir d, int distance, bool wide_cone) {
  return nearest_obstruction(p, d, distance, wide_cone).has_value();
}

std::optional<Vec2> nearest_obstruction(const Percept& p, Dir d, int distance, bool wide_cone) {
  std::optional<Vec2> best;
  for (Vec2 c : rule_cells(d, distance, wide_cone))
    if (p.is_obstruction(c) && (!best || manhattan(c) < manhattan(*best))) best = c;
  return best;
}

ExplorationState handle_move_failure(const Percept& p, ExplorationState s, const ExplorationOptions& opt) {
  if (p.last_action.kind != ActionKind::Move || p.last_outcome == Outcome::Success) return s;
  const Dir d = p.last_action.dir;
  const int distance = is_special(s.mode) ? opt.relaxed_distance : opt.normal_distance;
  switch (p.last_outcome) {
    case Outcome::FailedOutOfBounds:
      s.valid_dirs.erase(d);
      if (s.current_dir == d) {
        // in a special stage this ends the stage on the next call
        if (is_special(s.mode)) s.stage_steps = opt.stage_cap;
        else s.current_dir.reset();
      }
      break;
    case Outcome::FailedPath: {
      const bool teammate = p.is_teammate(unit(d)) || p.is_teammate(unit(d) * 2);
      const bool opponent = p.is_opponent(unit(d)) || p.is_opponent(unit(d) * 2);
      if (teammate) {
        for (Dir side : {right_of(d), left_of(d)})
          if (!obstructed(p, side, distance, opt.wide_cone) && p.is_free(unit(side))) {
            s.forced = side;
            break;
          }
      } else if (opponent) {
        s.forced = d;
      }
      break;
    }
    default: break;
  }
  return s;
}

ExplorationDecision choose_exploration_action(const Percept& p, ExplorationState s, Rng& rng,
                                              const ExplorationOptions& opt) {
  if (p.last_action.kind == ActionKind::Move) {
    if (p.last_outcome == Outcome::Success) {
      s.last_dir = p.last_action.dir;
      if (is_special(s.mode)) ++s.stage_steps;
    } else {
      s = handle_move_failure(p, s, opt);
    }
  }
  Explorer ex(p, s, rng, opt);
  ExplorationDecision out;
  out.action = ex.decide();
  out.rule_distance = ex.distance();
  out.state = s;
  return out;
}

}  // namespace assemble
