#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "assemble/team_map.hpp"
#include "assemble/world.hpp"

namespace assemble {

enum class Role : std::uint8_t { Explorer, Evaluator, Origin, Retriever, Recovering };
std::string_view to_string(Role r);

/// Tasks announced in `step`, the only ones a team may commit to.
std::vector<TaskSpec> announced_in(const std::vector<TaskSpec>& tasks, int step);

/// Exploration stops on an announcement when the agent's map has a good
/// cluster, at least two identified teammates and dispensers for every type of
/// one announced task. Joining a group that already stopped stops at once.
bool should_stop_exploring(const LocalMap& map, const std::vector<TaskSpec>& announced, bool joins_stopped_group);

/// The first stopper in roster order, unless an origin already exists.
std::optional<std::string> elect_origin(const std::vector<std::string>& stoppers,
                                        const std::vector<std::string>& roster, bool origin_exists);

/// Round-robin over the block types of the announced tasks. Refreshing keeps
/// the cursor so that consecutive picks keep rotating.
class BlockPool {
 public:
  void refresh(const std::vector<TaskSpec>& announced);
  /// Next type; `fallback` is used while no task has been seen.
  std::optional<std::string> next(const std::vector<std::string>& fallback = {});
  const std::vector<std::string>& types() const { return types_; }

 private:
  std::vector<std::string> types_;
  std::size_t cursor_ = 0;
};

/// Blocks parked at retriever slots, keyed by retriever.
class BlockStock {
 public:
  struct Entry {
    std::string type;
    Vec2 slot;
  };
  void park(const std::string& agent, std::string type, Vec2 slot) { parked_[agent] = {std::move(type), slot}; }
  void remove(const std::string& agent) { parked_.erase(agent); }
  void clear() { parked_.clear(); }
  bool holds(const std::string& agent) const { return parked_.count(agent) > 0; }
  const std::map<std::string, Entry>& parked() const { return parked_; }
  std::map<std::string, int> counts() const;

  /// One distinct parked retriever per requirement, closest slot first; nullopt
  /// unless every requirement is covered.
  std::optional<std::vector<std::string>> assign(const TaskSpec& t, Vec2 origin) const;

 private:
  std::map<std::string, Entry> parked_;
};

/// Order in which the pattern can be attached: every cell touches the agent
/// or an earlier cell. Returns requirement indices. `parents` receives, for
/// each requirement, the index of the cell it attaches to (-1: the agent).
std::vector<std::size_t> attach_order(const TaskSpec& t, std::vector<int>* parents = nullptr);

/// Parallel deliveries are safe when no in-flight target is the attachment
/// parent of the candidate and the candidate is not the parent of any of them.
bool parallel_safe(const std::vector<int>& parents, const std::vector<std::size_t>& in_flight,
                   std::size_t candidate);

/// Larger tasks first (reward), then earlier deadline, then name.
std::optional<TaskSpec> select_task(const std::vector<TaskSpec>& announced, const BlockStock& stock, Vec2 origin,
                                    int step, int min_time_left);

}  // namespace assemble
