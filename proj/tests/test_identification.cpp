#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "assemble/identification.hpp"

using namespace assemble;

namespace {

ThingReport report(std::string sender, std::vector<Thing> things, int step = 7) {
  things.push_back({{0, 0}, ThingType::Entity, "A"});
  std::sort(things.begin(), things.end());
  return {std::move(sender), "A", step, std::move(things)};
}

Thing entity(int x, int y, std::string team = "A") { return {{x, y}, ThingType::Entity, std::move(team)}; }

WorldConfig open_config(int w, int h) {
  WorldConfig c;
  c.width = w;
  c.height = h;
  c.task_rate = 0;
  c.clear_event_rate = 0;
  return c;
}

std::vector<ThingReport> all_reports(const World& w) {
  std::vector<ThingReport> out;
  for (std::size_t i = 0; i < w.agents().size(); ++i) out.push_back(make_report(w.percept(i)));
  return out;
}

}  // namespace

TEST_CASE("worked example: a shared dispenser singles out the sender") {
  const auto mine = report("A5", {entity(4, 0), {{1, -2}, ThingType::Dispenser, "b2"}});
  const auto a3 = report("A3", {entity(-4, 0), {{-3, -2}, ThingType::Dispenser, "b2"}});
  const auto a7 = report("A7", {entity(2, 2)});
  const auto a9 = report("A9", {entity(-4, 0), {{-3, -2}, ThingType::Dispenser, "b1"}});
  auto r = identify(mine, {4, 0}, {a3, a7, a9});
  CHECK(r.verdict == Verdict::Identified);
  CHECK(r.candidates == std::vector<std::string>{"A3"});
}

TEST_CASE("things that would land outside my vision are not checked") {
  const auto mine = report("A1", {entity(4, 0)});
  // (2,0) + (4,0) is at distance 6 from me
  const auto far = report("A2", {entity(-4, 0), {{2, 0}, ThingType::Obstacle, ""}});
  CHECK(filter_candidates(mine, {4, 0}, {far}) == std::vector<std::string>{"A2"});
  // (1,0) + (4,0) is at distance 5 and must be present
  const auto near = report("A2", {entity(-4, 0), {{1, 0}, ThingType::Obstacle, ""}});
  CHECK(filter_candidates(mine, {4, 0}, {near}).empty());
}

TEST_CASE("stale and self replies are ignored") {
  const auto mine = report("A1", {entity(2, 0)});
  const auto stale = report("A2", {entity(-2, 0)}, 6);
  const auto self = report("A1", {entity(-2, 0)});
  auto r = identify(mine, {2, 0}, {stale, self});
  CHECK(r.verdict == Verdict::Inconsistent);
}

TEST_CASE("a distant look-alike pair leaves two candidates") {
  World w(open_config(45, 20));
  w.add_agent("A1", "A", {10, 10});
  w.add_agent("A2", "A", {12, 10});
  w.add_agent("A3", "A", {30, 10});
  w.add_agent("A4", "A", {32, 10});
  auto reports = all_reports(w);
  auto r = identify(reports[0], {2, 0}, reports);
  CHECK(r.verdict == Verdict::Ambiguous);
  CHECK(std::set<std::string>(r.candidates.begin(), r.candidates.end()) == std::set<std::string>{"A2", "A4"});
}

TEST_CASE("no unknown teammates means no query") {
  World w(open_config(30, 30));
  w.add_agent("A1", "A", {10, 10});
  w.add_agent("A2", "A", {12, 10});
  w.add_agent("B1", "B", {10, 12});
  const auto p = w.percept(0);
  CHECK(unknown_teammates(p, {{2, 0}}).empty());
  CHECK(unknown_teammates(p, {}) == std::vector<Vec2>{{2, 0}});
}

TEST_CASE("the ledger is idempotent and flags conflicts") {
  IdentificationLedger ledger;
  CHECK(ledger.record("A3", {4, {1, 0}}) == IdentificationLedger::Record::Added);
  CHECK(ledger.record("A3", {4, {1, 0}}) == IdentificationLedger::Record::Known);
  CHECK(ledger.record("A3", {9, {3, 3}}) == IdentificationLedger::Record::Known);
  CHECK(ledger.record("A3", {4, {0, 2}}) == IdentificationLedger::Record::Conflict);
  CHECK(ledger.record("A4", {4, {1, 0}}) == IdentificationLedger::Record::Conflict);
  CHECK(ledger.identified().at("A3").rel == Vec2{1, 0});
  CHECK(ledger.diagnostics().size() == 2);
  CHECK(ledger.size() == 1);
}

TEST_CASE("ledgers on both sides are independent") {
  // Step 0: A1 sees A2 and the look-alike pair does not exist yet.
  World w(open_config(45, 20));
  w.add_agent("A1", "A", {10, 10});
  w.add_agent("A2", "A", {12, 10});
  w.add_agent("A3", "A", {30, 10});
  w.add_agent("A4", "A", {34, 10});
  IdentificationLedger l1, l2;
  auto reports = all_reports(w);
  auto r1 = identify(reports[0], {2, 0}, reports);
  REQUIRE(r1.verdict == Verdict::Identified);
  CHECK(r1.candidates[0] == "A2");
  l1.record("A2", {0, {2, 0}});
  // Step 1: A4 closes the gap; A2 only asks now and cannot decide.
  w.advance({{"A4", Action::move(Dir::W)}});
  w.advance({{"A4", Action::move(Dir::W)}});
  reports = all_reports(w);
  auto r2 = identify(reports[1], {-2, 0}, reports);
  CHECK(r2.verdict == Verdict::Ambiguous);
  CHECK(l1.knows("A2"));
  CHECK_FALSE(l2.knows("A1"));
}

TEST_CASE("randomized encounters never conclude a wrong identity") {
  Rng rng(2024);
  int concluded = 0;
  int encounters = 0;
  while (encounters < 1000) {
    WorldConfig c = open_config(24, 24);
    World w(c);
    const int agents = rng.range(3, 10);
    for (int i = 0; i < 30; ++i) {
      Vec2 p{rng.range(0, 23), rng.range(0, 23)};
      if (w.terrain(p) == Terrain::Empty && !w.dispenser_at(p)) w.set_terrain(p, Terrain::Obstacle);
    }
    for (int i = 0; i < 3; ++i) {
      Vec2 p{rng.range(0, 23), rng.range(0, 23)};
      if (w.terrain(p) == Terrain::Empty && !w.dispenser_at(p)) w.add_dispenser(p, block_type_name(rng.range(0, 1)));
    }
    // cluster agents so that many see each other
    for (int i = 0; i < agents; ++i) {
      for (int attempt = 0; attempt < 50; ++attempt) {
        Vec2 p{rng.range(6, 17), rng.range(6, 17)};
        if (w.terrain(p) == Terrain::Empty && !w.agent_at(p)) {
          w.add_agent("A" + std::to_string(i + 1), "A", p);
          break;
        }
      }
    }
    const auto reports = all_reports(w);
    for (std::size_t i = 0; i < w.agents().size() && encounters < 1000; ++i) {
      for (Vec2 s : unknown_teammates(w.percept(i), {})) {
        ++encounters;
        auto r = identify(reports[i], s, reports);
        const auto truth = w.agent_at(w.agent(i).pos + s);
        REQUIRE(truth);
        // the true agent always survives the filter
        CHECK(std::count(r.candidates.begin(), r.candidates.end(), w.agent(*truth).name) == 1);
        if (r.verdict == Verdict::Identified) {
          ++concluded;
          CHECK(r.candidates[0] == w.agent(*truth).name);
        }
      }
    }
  }
  CHECK(concluded > 500);
}

TEST_CASE("adding a reported thing never grows the candidate set") {
  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Thing> mine_things{entity(3, 0)};
    for (int k = 0; k < 6; ++k) mine_things.push_back({{rng.range(-3, 3), rng.range(-2, 2)}, ThingType::Obstacle, ""});
    const auto mine = report("A1", mine_things);
    std::vector<ThingReport> replies;
    for (int r = 2; r <= 5; ++r) {
      std::vector<Thing> t{entity(-3, 0)};
      for (int k = 0; k < 2; ++k) t.push_back({{rng.range(-4, 1), rng.range(-2, 2)}, ThingType::Obstacle, ""});
      replies.push_back(report("A" + std::to_string(r), t));
    }
    const auto before = filter_candidates(mine, {3, 0}, replies);
    auto& victim = replies[rng.below(replies.size())];
    victim.things.push_back({{rng.range(-5, 2), rng.range(-2, 2)}, ThingType::Obstacle, ""});
    std::sort(victim.things.begin(), victim.things.end());
    const auto after = filter_candidates(mine, {3, 0}, replies);
    for (const auto& name : after) CHECK(std::count(before.begin(), before.end(), name) == 1);
  }
}
