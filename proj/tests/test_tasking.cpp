#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "assemble/tasking.hpp"

using namespace assemble;

namespace {

TaskSpec task(std::string name, int announced, int deadline, std::vector<TaskSpec::Requirement> pattern) {
  TaskSpec t;
  t.name = std::move(name);
  t.announced_step = announced;
  t.deadline = deadline;
  t.reward = 10 * static_cast<int>(pattern.size());
  t.pattern = std::move(pattern);
  return t;
}

// Map with a good cluster, dispensers of type b0 and `members` agents.
LocalMap ready_map(std::size_t members) {
  LocalMap m;
  for (std::size_t i = 0; i < members; ++i) m.members.push_back("A" + std::to_string(i + 1));
  m.dispensers[{4, 4}] = "b0";
  GoalCluster c;
  c.id = 1;
  c.cells = {{0, 0}};
  c.status = ClusterStatus::Good;
  m.clusters.push_back(c);
  return m;
}

}  // namespace

TEST_CASE("role names") {
  CHECK(to_string(Role::Origin) == "origin");
  CHECK(to_string(Role::Recovering) == "recovering");
}

TEST_CASE("only tasks announced this step count") {
  const std::vector<TaskSpec> ts{task("t1", 3, 90, {{{0, 1}, "b0"}}), task("t2", 4, 90, {{{0, 1}, "b0"}})};
  const auto now = announced_in(ts, 4);
  REQUIRE(now.size() == 1);
  CHECK(now[0].name == "t2");
  CHECK(announced_in(ts, 5).empty());
}

TEST_CASE("exploration stops only when every condition holds") {
  const std::vector<TaskSpec> ann{task("t1", 7, 90, {{{0, 1}, "b0"}})};
  CHECK(should_stop_exploring(ready_map(3), ann, false));
  // two identified teammates are not enough
  CHECK_FALSE(should_stop_exploring(ready_map(2), ann, false));
  // no announcement
  CHECK_FALSE(should_stop_exploring(ready_map(3), {}, false));
  // unknown dispenser type
  const std::vector<TaskSpec> other{task("t2", 7, 90, {{{0, 1}, "b1"}})};
  CHECK_FALSE(should_stop_exploring(ready_map(3), other, false));
  // the cluster is not good
  auto m = ready_map(3);
  m.clusters[0].status = ClusterStatus::Bad;
  CHECK_FALSE(should_stop_exploring(m, ann, false));
  // merging into a group that already stopped
  CHECK(should_stop_exploring(LocalMap{}, {}, true));
}

TEST_CASE("origin election follows the roster") {
  const std::vector<std::string> roster{"A1", "A2", "A3", "A4"};
  CHECK(elect_origin({"A4", "A2", "A3"}, roster, false) == std::optional<std::string>("A2"));
  CHECK_FALSE(elect_origin({"A4"}, roster, true));
  CHECK_FALSE(elect_origin({}, roster, false));
}

TEST_CASE("the pool rotates so consecutive retrievers fetch different types") {
  BlockPool pool;
  CHECK(pool.next({"b1"}) == std::optional<std::string>("b1"));
  CHECK_FALSE(BlockPool{}.next());
  pool.refresh({task("t1", 1, 90, {{{0, 1}, "b1"}, {{0, 2}, "b0"}})});
  CHECK(pool.types() == std::vector<std::string>{"b0", "b1"});
  const auto first = pool.next();
  const auto second = pool.next();
  CHECK(first != second);
  // an announcement without tasks keeps the previous types
  pool.refresh({});
  CHECK(pool.types().size() == 2);
}

TEST_CASE("stock assignment covers each requirement with a distinct closest retriever") {
  BlockStock stock;
  stock.park("A2", "b0", {5, 5});
  stock.park("A3", "b0", {1, 2});
  stock.park("A4", "b1", {-3, 2});
  const auto t = task("t1", 1, 90, {{{0, 1}, "b0"}, {{0, 2}, "b0"}, {{-1, 2}, "b1"}});
  const auto a = stock.assign(t, {0, 0});
  REQUIRE(a);
  CHECK((*a)[0] == "A3");
  CHECK((*a)[1] == "A2");
  CHECK((*a)[2] == "A4");
  stock.remove("A4");
  CHECK_FALSE(stock.assign(t, {0, 0}));
  CHECK(stock.counts() == std::map<std::string, int>{{"b0", 2}});
}

TEST_CASE("attach order grows from the agent") {
  // listed out of order: (1,2) hangs from (1,1), which hangs from (0,1)
  const auto t = task("t", 1, 90, {{{1, 2}, "b0"}, {{1, 1}, "b0"}, {{0, 1}, "b1"}});
  std::vector<int> parents;
  const auto order = attach_order(t, &parents);
  CHECK(order == std::vector<std::size_t>{2, 1, 0});
  CHECK(parents == std::vector<int>{1, 2, -1});

  // (1,1) and (-1,1) both hang from (0,1): safe together, not with their parent
  const auto fork = task("f", 1, 90, {{{0, 1}, "b0"}, {{1, 1}, "b0"}, {{-1, 1}, "b0"}});
  attach_order(fork, &parents);
  CHECK(parallel_safe(parents, {1}, 2));
  CHECK_FALSE(parallel_safe(parents, {0}, 1));
  CHECK_FALSE(parallel_safe(parents, {1}, 0));
  CHECK(parallel_safe(parents, {}, 0));
}

TEST_CASE("task selection prefers reward, then deadline, and needs time and stock") {
  BlockStock stock;
  stock.park("A2", "b0", {0, 3});
  stock.park("A3", "b0", {1, 3});
  const auto small = task("s", 10, 100, {{{0, 1}, "b0"}});
  const auto big = task("b", 10, 100, {{{0, 1}, "b0"}, {{0, 2}, "b0"}});
  const auto early = task("e", 10, 60, {{{0, 1}, "b0"}});
  const auto missing = task("m", 10, 100, {{{0, 1}, "b0"}, {{0, 2}, "b0"}, {{1, 2}, "b0"}});
  CHECK(select_task({small, big, missing}, stock, {0, 0}, 10, 20)->name == "b");
  CHECK(select_task({small, early}, stock, {0, 0}, 10, 20)->name == "e");
  // too little time left
  CHECK(select_task({small, early}, stock, {0, 0}, 50, 20)->name == "s");
  CHECK_FALSE(select_task({missing}, stock, {0, 0}, 10, 20));
}
