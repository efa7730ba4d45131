#include "assemble/goal_eval.hpp"

#include <algorithm>
#include <climits>

namespace assemble {

Dir greedy_direction(Vec2 t) {
  Dir dir = Dir::W;
  int dist = manhattan(t - unit(Dir::W));
  for (Dir d : {Dir::E, Dir::N, Dir::S}) {
    const int nd = manhattan(t - unit(d));
    if (nd <= dist) {
      dir = d;
      dist = nd;
    }
  }
  return dir;
}

bool blocks_path(const Percept& p, Vec2 rel) { return p.is_obstruction(rel) && !p.is_attached(rel); }

bool gap_toward(const Percept& p, Dir blocked, Dir side) {
  for (int k = 1; k <= p.vision; ++k) {
    const Vec2 row = unit(side) * k;
    const Vec2 beyond = row + unit(blocked);
    if (!p.in_vision(beyond) || blocks_path(p, row)) return false;
    if (!blocks_path(p, beyond)) return true;
  }
  return false;
}

std::optional<DetourPlan> build_detour(Dir blocked, const Percept& p) {
  const Dir back = opposite(blocked);
  const bool vertical = is_vertical(blocked);
  const Dir first = vertical ? Dir::W : Dir::N;
  const Dir second = vertical ? Dir::E : Dir::S;
  for (Dir side : {first, second}) {
    if (!gap_toward(p, blocked, side)) continue;
    const Dir other = opposite(side);
    return DetourPlan{{{side, blocked}, {blocked, other}, {other, back}, {back, side}}, 0, 0};
  }
  return std::nullopt;
}

DetourStep advance_detour(DetourPlan& d, const Percept& p, Vec2 rel_target, int leg_cap) {
  while (d.progress < d.legs.size()) {
    const auto [go, side] = d.legs[d.progress];
    const bool heading_back = rel_target == Vec2{} || greedy_direction(rel_target) == opposite(side);
    if (!blocks_path(p, unit(side)) || heading_back) {
      ++d.progress;
      d.leg_moves = 0;
      continue;
    }
    if (blocks_path(p, unit(go)) || d.leg_moves >= leg_cap) return {DetourStep::Kind::Failed, go};
    ++d.leg_moves;
    return {DetourStep::Kind::Move, go};
  }
  return {DetourStep::Kind::Done, Dir::N};
}

void GreedyMover::reset() {
  detour_.reset();
  stubborn_ = false;
}

Action GreedyMover::blocked_fallback(Dir d, const Percept& p) {
  stubborn_ = true;
  return p.energy >= opt_.clear_cost ? Action::clear(unit(d)) : Action::skip();
}

Action GreedyMover::step(Vec2 rel, const Percept& p) {
  if (rel == Vec2{}) {
    reset();
    return Action::skip();
  }
  if (detour_) {
    const auto r = advance_detour(*detour_, p, rel, opt_.leg_cap);
    if (r.kind == DetourStep::Kind::Move) return Action::move(r.dir);
    detour_.reset();
    if (r.kind == DetourStep::Kind::Failed) {
      const Dir d = greedy_direction(rel);
      if (blocks_path(p, unit(d))) return blocked_fallback(d, p);
    }
  }

  const Dir d = greedy_direction(rel);
  if (!blocks_path(p, unit(d))) {
    stubborn_ = false;
    return Action::move(d);
  }
  if (manhattan(rel - unit(d)) <= opt_.near_distance) {
    return p.energy >= opt_.clear_cost ? Action::clear(unit(d)) : Action::skip();
  }
  if (!stubborn_) {
    if (auto plan = build_detour(d, p)) {
      ++detours_;
      detour_ = std::move(plan);
      const auto r = advance_detour(*detour_, p, rel, opt_.leg_cap);
      if (r.kind == DetourStep::Kind::Move) return Action::move(r.dir);
      detour_.reset();
    }
  }
  return blocked_fallback(d, p);
}

// ---------------------------------------------------------------------------
// Cluster evaluation
// ---------------------------------------------------------------------------

std::vector<Vec2> cluster_centers(const std::set<Vec2>& cells) {
  std::vector<Vec2> best;
  int best_radius = INT_MAX;
  for (Vec2 c : cells) {
    int radius = 0;
    for (Vec2 o : cells) radius = std::max(radius, manhattan(c, o));
    if (radius < best_radius) {
      best_radius = radius;
      best.clear();
    }
    if (radius == best_radius) best.push_back(c);
  }
  return best;
}

std::vector<Vec2> slot_candidates(const std::set<Vec2>& cells, const std::set<Vec2>& goals, int inflate, int stride) {
  if (cells.empty()) return {};
  Vec2 lo = *cells.begin(), hi = lo;
  for (Vec2 c : cells) {
    lo = {std::min(lo.x, c.x), std::min(lo.y, c.y)};
    hi = {std::max(hi.x, c.x), std::max(hi.y, c.y)};
  }
  lo -= Vec2{inflate, inflate};
  hi += Vec2{inflate, inflate};
  std::set<Vec2> out;
  auto keep = [&](Vec2 c) {
    if (!goals.count(c) && !cells.count(c)) out.insert(c);
  };
  for (int x = lo.x; x <= hi.x; x += stride) {
    keep({x, lo.y});
    keep({x, hi.y});
  }
  for (int y = lo.y; y <= hi.y; y += stride) {
    keep({lo.x, y});
    keep({hi.x, y});
  }
  return {out.begin(), out.end()};
}

ClusterEvaluator::ClusterEvaluator(int cluster_id, Vec2 discovered, EvaluationOptions opt)
    : cluster_id_(cluster_id), discovered_(discovered), opt_(opt), mover_(opt.mover) {}

Action ClusterEvaluator::finish(ClusterStatus s) {
  phase_ = EvalPhase::Done;
  result_ = s;
  if (s != ClusterStatus::Good) slots_.clear();
  return Action::skip();
}

Action ClusterEvaluator::step(Vec2 position, const Percept& p, const LocalMap& map, Rng& rng) {
  if (phase_ == EvalPhase::Done) return Action::skip();
  if (++steps_ > opt_.budget) return finish(ClusterStatus::Unevaluated);
  const GoalCluster* cluster = map.cluster(cluster_id_);
  if (!cluster) return finish(ClusterStatus::Unevaluated);

  if (phase_ == EvalPhase::ToGoal) {
    if (position != discovered_) return mover_.step(discovered_ - position, p);
    const auto centers = cluster_centers(cluster->cells);
    center_ = centers[rng.below(centers.size())];
    mover_.reset();
    phase_ = EvalPhase::ToCenter;
  }
  if (phase_ == EvalPhase::ToCenter) {
    if (position != *center_) return mover_.step(*center_ - position, p);
    phase_ = EvalPhase::Clearing;
  }
  if (phase_ == EvalPhase::Clearing) {
    Action a = clearing_step(p);
    if (phase_ != EvalPhase::Scouting) return a;
    candidates_ = slot_candidates(cluster->cells, map.goals, opt_.inflate, opt_.stride);
    mover_.reset();
  }
  return scouting_step(position, p, map);
}

Action ClusterEvaluator::clearing_step(const Percept& p) {
  if (clear_pending_) {
    clear_pending_ = false;
    switch (p.last_outcome) {
      case Outcome::Success:
        if (++charge_ == 3) {
          charge_ = 0;
          ++clear_dir_;
        }
        break;
      case Outcome::FailedTarget: return finish(ClusterStatus::Bad);  // off the grid
      default: charge_ = 0; break;                                   // random failure or disabled: restart
    }
  }
  if (clear_dir_ == kAllDirs.size()) {
    phase_ = EvalPhase::Scouting;
    return Action::skip();
  }
  const Vec2 target = unit(kAllDirs[clear_dir_]) * opt_.clear_distance;
  // Never hit an agent; wait for it to leave. A fresh charge needs the energy.
  if (p.has(target, ThingType::Entity) || (charge_ == 0 && p.energy < opt_.mover.clear_cost)) {
    charge_ = 0;
    return Action::skip();
  }
  clear_pending_ = true;
  return Action::clear(target);
}

Action ClusterEvaluator::scouting_step(Vec2 position, const Percept& p, const LocalMap& map) {
  for (;;) {
    if (static_cast<int>(slots_.size()) >= opt_.slots_needed) return finish(ClusterStatus::Good);
    if (visiting_) {
      if (position == *visiting_) {
        slots_.push_back(*visiting_);
        visiting_.reset();
        continue;
      }
      const bool off_grid = visit_started_ && p.last_action.kind == ActionKind::Move &&
                            p.last_outcome == Outcome::FailedOutOfBounds;
      if (--visit_budget_ < 0 || off_grid || map.goals.count(*visiting_)) {
        visiting_.reset();
        continue;
      }
      visit_started_ = true;
      return mover_.step(*visiting_ - position, p);
    }
    if (candidates_.empty()) return finish(ClusterStatus::Bad);
    auto nearest = std::min_element(candidates_.begin(), candidates_.end(), [&](Vec2 a, Vec2 b) {
      const int da = manhattan(a, position), db = manhattan(b, position);
      return da != db ? da < db : a < b;
    });
    visiting_ = *nearest;
    candidates_.erase(nearest);
    visit_budget_ = 2 * manhattan(*visiting_, position) + opt_.visit_slack;
    visit_started_ = false;
    mover_.reset();
  }
}

}  // namespace assemble
