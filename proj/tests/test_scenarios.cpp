#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "assemble/scenarios.hpp"

using namespace assemble;

TEST_CASE("scenario names resolve") {
  const auto names = scenario_names();
  CHECK(names.size() == 3);
  CHECK_FALSE(run_scenario("no_such_scenario"));
}

TEST_CASE("blocks near the origin: stuck without watchdog, reset with it") {
  const auto r = scenario_blocks_near_origin();
  INFO(r.off.detail);
  INFO(r.on.detail);
  CHECK(r.off.failure);
  CHECK_FALSE(r.off.recovered);
  CHECK(r.on.recovered);
  CHECK(r.passed());
  CHECK(verify_replay(r.off.replay).ok);
  CHECK(verify_replay(r.on.replay).ok);
}

TEST_CASE("squatted destination: no progress without guard, detour with it") {
  const auto r = scenario_squatted_destination();
  INFO(r.off.detail);
  INFO(r.on.detail);
  CHECK(r.off.failure);
  CHECK_FALSE(r.off.recovered);
  CHECK(r.on.recovered);
  CHECK(r.passed());
}

TEST_CASE("disabled origin: task lost without watchdog, team restarts with it") {
  const auto r = scenario_origin_disabled();
  INFO(r.off.detail);
  INFO(r.on.detail);
  CHECK(r.off.failure);
  CHECK_FALSE(r.off.recovered);
  CHECK(r.on.recovered);
  CHECK(r.passed());
  CHECK(verify_replay(r.on.replay).ok);
}
