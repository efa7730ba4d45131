#include "assemble/tasking.hpp"

#include <algorithm>

namespace assemble {

std::string_view to_string(Role r) {
  switch (r) {
    case Role::Explorer: return "explorer";
    case Role::Evaluator: return "evaluator";
    case Role::Origin: return "origin";
    case Role::Retriever: return "retriever";
    case Role::Recovering: return "recovering";
  }
  return "?";
}

std::vector<TaskSpec> announced_in(const std::vector<TaskSpec>& tasks, int step) {
  std::vector<TaskSpec> out;
  for (const auto& t : tasks)
    if (t.announced_step == step) out.push_back(t);
  return out;
}

bool should_stop_exploring(const LocalMap& map, const std::vector<TaskSpec>& announced, bool joins_stopped_group) {
  if (joins_stopped_group) return true;
  const bool good = std::any_of(map.clusters.begin(), map.clusters.end(),
                                [](const GoalCluster& c) { return c.status == ClusterStatus::Good; });
  if (!good || map.members.size() < 3) return false;
  std::set<std::string> known;
  for (const auto& [_, type] : map.dispensers) known.insert(type);
  return std::any_of(announced.begin(), announced.end(), [&](const TaskSpec& t) {
    return std::all_of(t.pattern.begin(), t.pattern.end(), [&](const auto& r) { return known.count(r.type) > 0; });
  });
}

std::optional<std::string> elect_origin(const std::vector<std::string>& stoppers,
                                        const std::vector<std::string>& roster, bool origin_exists) {
  if (origin_exists) return std::nullopt;
  for (const auto& name : roster)
    if (std::find(stoppers.begin(), stoppers.end(), name) != stoppers.end()) return name;
  return std::nullopt;
}

void BlockPool::refresh(const std::vector<TaskSpec>& announced) {
  std::set<std::string> types;
  for (const auto& t : announced)
    for (const auto& r : t.pattern) types.insert(r.type);
  if (!types.empty()) types_.assign(types.begin(), types.end());
}

std::optional<std::string> BlockPool::next(const std::vector<std::string>& fallback) {
  const auto& from = types_.empty() ? fallback : types_;
  if (from.empty()) return std::nullopt;
  return from[cursor_++ % from.size()];
}

std::map<std::string, int> BlockStock::counts() const {
  std::map<std::string, int> out;
  for (const auto& [_, e] : parked_) ++out[e.type];
  return out;
}

std::optional<std::vector<std::string>> BlockStock::assign(const TaskSpec& t, Vec2 origin) const {
  std::vector<std::string> out;
  std::set<std::string> used;
  for (const auto& r : t.pattern) {
    std::optional<std::string> best;
    int best_d = 0;
    for (const auto& [agent, e] : parked_) {
      if (e.type != r.type || used.count(agent)) continue;
      const int d = manhattan(e.slot, origin + r.offset);
      if (!best || d < best_d) {
        best = agent;
        best_d = d;
      }
    }
    if (!best) return std::nullopt;
    used.insert(*best);
    out.push_back(*best);
  }
  return out;
}

std::vector<std::size_t> attach_order(const TaskSpec& t, std::vector<int>* parents) {
  std::vector<std::size_t> order;
  std::vector<int> parent(t.pattern.size(), -2);
  std::vector<Vec2> placed{{0, 0}};
  std::vector<int> placed_index{-1};
  bool grew = true;
  while (grew) {
    grew = false;
    for (std::size_t i = 0; i < t.pattern.size(); ++i) {
      if (parent[i] != -2) continue;
      for (std::size_t k = 0; k < placed.size(); ++k)
        if (manhattan(placed[k], t.pattern[i].offset) == 1) {
          parent[i] = placed_index[k];
          order.push_back(i);
          placed.push_back(t.pattern[i].offset);
          placed_index.push_back(static_cast<int>(i));
          grew = true;
          break;
        }
    }
  }
  if (parents) *parents = parent;
  return order;
}

bool parallel_safe(const std::vector<int>& parents, const std::vector<std::size_t>& in_flight,
                   std::size_t candidate) {
  for (std::size_t other : in_flight) {
    if (parents[candidate] == static_cast<int>(other)) return false;
    if (parents[other] == static_cast<int>(candidate)) return false;
  }
  return true;
}

std::optional<TaskSpec> select_task(const std::vector<TaskSpec>& announced, const BlockStock& stock, Vec2 origin,
                                    int step, int min_time_left) {
  std::vector<TaskSpec> ok;
  for (const auto& t : announced)
    if (t.deadline - step >= min_time_left && stock.assign(t, origin)) ok.push_back(t);
  if (ok.empty()) return std::nullopt;
  std::sort(ok.begin(), ok.end(), [](const TaskSpec& a, const TaskSpec& b) {
    if (a.reward != b.reward) return a.reward > b.reward;
    if (a.deadline != b.deadline) return a.deadline < b.deadline;
    return a.name < b.name;
  });
  return ok.front();
}

}  // namespace assemble
