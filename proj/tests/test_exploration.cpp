#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "assemble/exploration.hpp"

using namespace assemble;

namespace {

Percept percept_with(std::vector<Thing> things, int energy = 200) {
  Percept p;
  p.name = "A1";
  p.team = "A";
  p.energy = energy;
  things.push_back({{0, 0}, ThingType::Entity, "A"});
  std::sort(things.begin(), things.end());
  p.things = std::move(things);
  return p;
}

Thing obstacle(int x, int y) { return {{x, y}, ThingType::Obstacle, ""}; }
Thing block(int x, int y) { return {{x, y}, ThingType::Block, "b0"}; }
Thing mate(int x, int y) { return {{x, y}, ThingType::Entity, "A"}; }
Thing enemy(int x, int y) { return {{x, y}, ThingType::Entity, "B"}; }

WorldConfig open_config(int size) {
  WorldConfig c;
  c.width = size;
  c.height = size;
  c.task_rate = 0;
  c.clear_event_rate = 0;
  return c;
}

}  // namespace

TEST_CASE("two side obstacles and a block north leave only south") {
  Rng rng(1);
  auto p = percept_with({obstacle(1, 0), obstacle(-1, 0), block(0, -2)});
  auto d = choose_exploration_action(p, {}, rng);
  CHECK(d.action == Action::move(Dir::S));
  DirSet only_south;
  only_south.insert(Dir::S);
  CHECK(d.state.valid_dirs == only_south);
  CHECK(d.state.current_dir == Dir::S);
}

TEST_CASE("an obstruction ahead removes the direction and its opposite") {
  Rng rng(2);
  ExplorationState s;
  s.current_dir = Dir::S;
  auto p = percept_with({obstacle(0, 2)}, 200);
  auto d = choose_exploration_action(p, s, rng);
  CHECK_FALSE(d.state.valid_dirs.contains(Dir::S));
  CHECK_FALSE(d.state.valid_dirs.contains(Dir::N));
  CHECK(d.state.valid_dirs.contains(Dir::E));
  CHECK(d.state.valid_dirs.contains(Dir::W));
  CHECK(d.action.kind == ActionKind::Move);
  CHECK(!is_vertical(d.action.dir));
}

TEST_CASE("energy above the threshold clears instead of turning") {
  Rng rng(3);
  ExplorationState s;
  s.current_dir = Dir::E;
  auto p = percept_with({obstacle(1, 0)}, 250);
  auto d = choose_exploration_action(p, s, rng);
  CHECK(d.action == Action::clear({1, 0}));
  // the charge is re-submitted on the next two steps
  p.last_action = d.action;
  for (int i = 0; i < 2; ++i) {
    d = choose_exploration_action(p, d.state, rng);
    CHECK(d.action == Action::clear({1, 0}));
    p.last_action = d.action;
  }
  p.things = percept_with({}).things;
  d = choose_exploration_action(p, d.state, rng);
  CHECK(d.action == Action::move(Dir::E));
}

TEST_CASE("energy at exactly the threshold does not clear") {
  Rng rng(4);
  ExplorationState s;
  s.current_dir = Dir::E;
  auto d = choose_exploration_action(percept_with({obstacle(1, 0)}, 240), s, rng);
  CHECK(d.action.kind != ActionKind::Clear);
  CHECK_FALSE(d.state.valid_dirs.contains(Dir::E));
}

TEST_CASE("out of bounds removes only that direction") {
  Rng rng(5);
  ExplorationState s;
  s.current_dir = Dir::W;
  auto p = percept_with({});
  p.last_action = Action::move(Dir::W);
  p.last_outcome = Outcome::FailedOutOfBounds;
  auto after = handle_move_failure(p, s);
  CHECK_FALSE(after.valid_dirs.contains(Dir::W));
  CHECK(after.valid_dirs.contains(Dir::E));
  CHECK(after.valid_dirs.size() == 3);
}

TEST_CASE("an opponent ahead means trying the same move again") {
  Rng rng(6);
  ExplorationState s;
  s.current_dir = Dir::N;
  auto p = percept_with({enemy(0, -1)});
  p.last_action = Action::move(Dir::N);
  p.last_outcome = Outcome::FailedPath;
  auto d = choose_exploration_action(p, s, rng);
  CHECK(d.action == Action::move(Dir::N));
}

TEST_CASE("a teammate ahead triggers a sidestep to the relative right") {
  Rng rng(7);
  ExplorationState s;
  s.current_dir = Dir::N;
  auto d = choose_exploration_action(percept_with({mate(0, -1)}), s, rng);
  CHECK(d.action == Action::move(Dir::E));
  s.current_dir = Dir::E;
  d = choose_exploration_action(percept_with({mate(1, 0)}), s, rng);
  CHECK(d.action == Action::move(Dir::S));
}

TEST_CASE("teammates walking head-on pass each other") {
  World w(open_config(20));
  w.add_agent("A1", "A", {5, 10});
  w.add_agent("A2", "A", {8, 10});
  ExplorationState s1, s2;
  s1.current_dir = Dir::E;
  s2.current_dir = Dir::W;
  Rng rng(8);
  for (int step = 0; step < 8; ++step) {
    auto d1 = choose_exploration_action(w.percept(0), s1, rng);
    auto d2 = choose_exploration_action(w.percept(1), s2, rng);
    s1 = d1.state;
    s2 = d2.state;
    w.advance({{"A1", d1.action}, {"A2", d2.action}});
  }
  CHECK(w.agent(0).pos.x > 8);
  CHECK(w.agent(1).pos.x < 5);
}

TEST_CASE("the second special stage moves along the perpendicular axis") {
  Rng rng(9);
  ExplorationState s;
  s.mode = ExploreMode::SpecialStage1;
  s.current_dir = Dir::S;
  s.last_dir = Dir::S;
  auto p = percept_with({obstacle(0, 1)});
  p.last_action = Action::move(Dir::S);
  for (int i = 0; i < 20; ++i) {
    auto d = choose_exploration_action(p, s, rng);
    CHECK(d.state.mode == ExploreMode::SpecialStage2);
    REQUIRE(d.action.kind == ActionKind::Move);
    CHECK(!is_vertical(d.action.dir));
    CHECK(d.rule_distance == 1);
  }
}

TEST_CASE("the first special stage excludes the way back") {
  ExplorationState s;
  s.mode = ExploreMode::SpecialStage1;
  s.last_dir = Dir::E;
  std::set<Dir> seen;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    // obstructions at distance 2 are tolerated under the relaxed rule
    auto d = choose_exploration_action(percept_with({obstacle(0, 2), obstacle(0, -2), obstacle(2, 0)}), s, rng);
    REQUIRE(d.action.kind == ActionKind::Move);
    seen.insert(d.action.dir);
  }
  CHECK(seen == std::set<Dir>{Dir::N, Dir::S, Dir::E});
}

TEST_CASE("boxed in: skip, then clear, then rebuild the list") {
  Rng rng(10);
  auto p = percept_with({obstacle(1, 0), obstacle(-1, 0), obstacle(0, 1), block(0, -1)}, 300);
  auto d = choose_exploration_action(p, {}, rng);
  CHECK(d.action == Action::skip());
  CHECK(d.state.mode == ExploreMode::BoxedIn);
  p.last_action = d.action;
  d = choose_exploration_action(p, d.state, rng);
  REQUIRE(d.action.kind == ActionKind::Clear);
  CHECK(manhattan(d.action.target) == 1);
  CHECK(d.state.mode == ExploreMode::Normal);
  CHECK(d.state.valid_dirs == DirSet::all());
}

TEST_CASE("boxed in with low energy never clears") {
  Rng rng(11);
  auto p = percept_with({obstacle(1, 0), obstacle(-1, 0), obstacle(0, 1), obstacle(0, -1)}, 100);
  ExplorationState s;
  for (int i = 0; i < 12; ++i) {
    auto d = choose_exploration_action(p, s, rng);
    CHECK(d.action.kind != ActionKind::Clear);
    CHECK(d.action.kind != ActionKind::Move);
    s = d.state;
  }
}

TEST_CASE("surrounded by teammates: any of the four directions") {
  std::set<Dir> seen;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Rng rng(seed);
    auto d = choose_exploration_action(percept_with({mate(1, 0), mate(-1, 0), mate(0, 1), mate(0, -1)}), {}, rng);
    REQUIRE(d.action.kind == ActionKind::Move);
    seen.insert(d.action.dir);
  }
  CHECK(seen.size() == 4);
}

TEST_CASE("the wide cone also tests the flanking diagonals") {
  auto p = percept_with({obstacle(1, -1)});
  CHECK_FALSE(obstructed(p, Dir::N, 2, false));
  CHECK(obstructed(p, Dir::N, 2, true));
}

TEST_CASE("single explorer covers most of an open map") {
  int good = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    World w(open_config(30));
    Rng place(seed);
    w.add_agent("A1", "A", {place.range(0, 29), place.range(0, 29)});
    Rng rng(seed * 31);
    ExplorationState s;
    std::set<Vec2> seen;
    for (int step = 0; step < 500; ++step) {
      const auto p = w.percept(0);
      for (int dy = -5; dy <= 5; ++dy)
        for (int dx = -5; dx <= 5; ++dx) {
          Vec2 c = w.agent(0).pos + Vec2{dx, dy};
          if (std::abs(dx) + std::abs(dy) <= 5 && w.in_bounds(c)) seen.insert(c);
        }
      auto d = choose_exploration_action(p, s, rng);
      s = d.state;
      w.advance({{"A1", d.action}});
    }
    if (seen.size() * 10 >= 900 * 6) ++good;
  }
  CHECK(good >= 90);
}

TEST_CASE("explorers in generated worlds follow the obstruction rule") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    WorldConfig c;
    c.seed = seed;
    c.obstacle_density = 0.2;
    World w = World::generate(c);
    std::vector<ExplorationState> states(w.agents().size());
    Rng rng(seed);
    for (int step = 0; step < 300; ++step) {
      std::map<std::string, Action> acts;
      for (std::size_t i = 0; i < w.agents().size(); ++i) {
        const auto p = w.percept(i);
        auto d = choose_exploration_action(p, states[i], rng);
        if (d.action.kind == ActionKind::Move) {
          CHECK_FALSE(obstructed(p, d.action.dir, d.rule_distance));
        }
        if (d.action.kind == ActionKind::Clear && states[i].clear_count == 0) {
          CHECK(p.energy > 240);
        }
        states[i] = d.state;
        acts[w.agent(i).name] = d.action;
      }
      w.advance(acts);
      for (const auto& a : w.agents()) CHECK(a.energy >= 0);
    }
  }
}
