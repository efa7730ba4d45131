#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "assemble/match.hpp"

using namespace assemble;

namespace {

MatchConfig quiet(std::uint64_t seed, int steps) {
  MatchConfig c;
  c.world.seed = seed;
  c.steps = steps;
  return c;
}

struct Tally {
  int steps = 0;
  int max_origins = 0;
  int stock_bad = 0;
  int in_flight_over = 0;
  int unsafe_pairs = 0;
  int shared_carriers = 0;
};

// The requirement `a` is attached through `b` when b is a's parent.
bool linked(const std::vector<int>& parents, std::size_t a, std::size_t b) {
  return parents[a] == static_cast<int>(b) || parents[b] == static_cast<int>(a);
}

Tally watch(const MatchConfig& config) {
  Tally t;
  std::set<std::string> stale;
  MatchObserver obs;
  obs.after_step = [&](const World& w, const TeamController& team) {
    ++t.steps;
    int origins = 0;
    for (const auto& n : team.roster()) origins += team.role(n) == Role::Origin;
    t.max_origins = std::max(t.max_origins, origins);

    // the world may take a parked block away during a step; the team has to
    // notice by its next decision
    std::set<std::string> mismatched;
    for (const auto& [agent, entry] : team.stock().parked()) {
      const auto held = w.attachments(*w.find_agent(agent));
      if (held.size() != 1 || held.front().type != entry.type) mismatched.insert(agent);
    }
    for (const auto& a : mismatched) t.stock_bad += stale.count(a) > 0;
    stale = mismatched;

    if (const auto& c = team.commitment()) {
      std::vector<std::size_t> flying;
      for (std::size_t i = 0; i < c->dispatched.size(); ++i)
        if (c->dispatched[i] && !c->delivered[i]) flying.push_back(i);
      if (static_cast<int>(flying.size()) > config.options.max_in_flight) ++t.in_flight_over;
      for (std::size_t i = 0; i < flying.size(); ++i)
        for (std::size_t j = i + 1; j < flying.size(); ++j)
          if (linked(c->parents, flying[i], flying[j])) ++t.unsafe_pairs;
      std::set<std::string> distinct(c->carriers.begin(), c->carriers.end());
      if (distinct.size() != c->carriers.size()) ++t.shared_carriers;
    }
  };
  run_match(config, obs);
  return t;
}

}  // namespace

TEST_CASE("team invariants hold through whole matches") {
  for (std::uint64_t seed : {1u, 2u, 5u}) {
    CAPTURE(seed);
    const auto t = watch(quiet(seed, 300));
    CHECK(t.steps == 300);
    CHECK(t.max_origins <= 1);
    CHECK(t.stock_bad == 0);
    CHECK(t.in_flight_over == 0);
    CHECK(t.unsafe_pairs == 0);
    CHECK(t.shared_carriers == 0);
  }
}

TEST_CASE("one delivery at a time when in-flight is limited to one") {
  auto c = quiet(4, 300);
  c.options.max_in_flight = 1;
  const auto t = watch(c);
  CHECK(t.in_flight_over == 0);
}

TEST_CASE("the team settles on an origin and submits") {
  const auto r = run_match(quiet(2, 500));
  CHECK(r.stop_step.has_value());
  CHECK(r.commitments > 0);
  CHECK(r.first_submission("A", 2).has_value());
  CHECK(r.audit.multiple_origins == 0);
  CHECK(r.audit.stock_mismatches == 0);
}

TEST_CASE("no resets without the watchdog") {
  const auto r = run_match(quiet(6, 300));
  CHECK(r.resets == 0);
}

TEST_CASE("controller tolerates an empty percept map") {
  TeamController team("A", {"A1", "A2"}, TeamOptions{}, 1);
  const auto actions = team.decide({});
  CHECK(actions.empty());
  CHECK(team.role("A1") == Role::Explorer);
}
