#pragma once

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "assemble/geometry.hpp"
#include "assemble/rng.hpp"
#include "assemble/world.hpp"

namespace assemble {

enum class ClusterStatus : std::uint8_t { Unevaluated, Evaluating, Good, Bad };
std::string_view to_string(ClusterStatus s);

struct GoalCluster {
  int id = 0;
  std::set<Vec2> cells;
  ClusterStatus status = ClusterStatus::Unevaluated;
  std::optional<std::string> evaluator;
  std::vector<Vec2> slots;  // retriever slots, map frame
};

/// Shared map of one group. Coordinates are in the frame of the agent that
/// founded the map (its start cell is 0,0).
struct LocalMap {
  int id = 0;
  std::vector<std::string> members;  // leader first
  std::map<std::string, Vec2> positions;
  std::map<Vec2, std::string> dispensers;
  std::set<Vec2> goals;
  std::vector<GoalCluster> clusters;

  const std::string& leader() const { return members.front(); }
  const GoalCluster* cluster_of(Vec2 cell) const;
  const GoalCluster* cluster(int id) const;
};

/// NewX = GlobalA1X + LocalA2A1X - GlobalA2X (same for Y).
constexpr Vec2 compute_merge_offset(Vec2 global_a1, Vec2 local_a2_from_a1, Vec2 global_a2) {
  return global_a1 + local_a2_from_a1 - global_a2;
}

struct MergeRecord {
  int survivor = 0;
  int absorbed = 0;
  Vec2 offset;  // add to absorbed-map coordinates to get survivor-map coordinates
  std::vector<std::string> moved;  // members that changed map
};

/// Single owner of all maps of one team. Every read and write goes through
/// this object, which keeps each agent in exactly one map.
class TeamStore {
 public:
  static constexpr int kClusterDistance = 3;  // Chebyshev

  explicit TeamStore(std::vector<std::string> roster);

  const std::vector<std::string>& roster() const { return roster_; }
  std::size_t rank(const std::string& agent) const;

  int map_id(const std::string& agent) const { return map_of_.at(agent); }
  const LocalMap& map(int id) const { return maps_.at(id); }
  const LocalMap& map_of(const std::string& agent) const { return maps_.at(map_id(agent)); }
  std::vector<int> map_ids() const;
  Vec2 position(const std::string& agent) const { return map_of(agent).positions.at(agent); }
  bool same_map(const std::string& a, const std::string& b) const { return map_id(a) == map_id(b); }

  /// Shifts the agent by one unit iff its move succeeded.
  void update_position(const std::string& agent, const Action& last, Outcome outcome);

  /// Records dispensers and goal cells seen by the agent. Returns ids of
  /// clusters created by this observation.
  std::vector<int> observe(const std::string& agent, const Percept& p);

  /// Adds a goal cell; returns the id of a newly created cluster, if any.
  std::optional<int> add_goal(int map_id, Vec2 cell);

  /// Compare-and-set: unevaluated -> evaluating for `agent`.
  bool try_claim_evaluation(int map_id, int cluster_id, const std::string& agent);
  void finish_evaluation(int map_id, int cluster_id, ClusterStatus status, std::vector<Vec2> slots = {});
  void reset_evaluation(int map_id, int cluster_id);

  /// Which map survives when the two maps meet.
  std::pair<int, int> elect(int map_a, int map_b) const;

  /// Atomic merge of `absorbed` into `survivor` using the offset implied by
  /// a1 (in survivor) seeing a2 (in absorbed) at `sighting`.
  MergeRecord merge(const std::string& a1, const std::string& a2, Vec2 sighting);

  /// Forget everything: every agent back in its own map at (0,0).
  void reset();

  /// Throws std::logic_error on a broken membership or cluster partition.
  void check_invariants() const;

  std::string snapshot(int map_id) const;

 private:
  LocalMap& mut(int id) { return maps_.at(id); }
  void insert_cluster(LocalMap& m, GoalCluster c);

  std::vector<std::string> roster_;
  std::map<int, LocalMap> maps_;
  std::map<std::string, int> map_of_;
  int next_cluster_id_ = 1;
};

// ---------------------------------------------------------------------------
// Merge protocol
// ---------------------------------------------------------------------------

enum class MergeMsg : std::uint8_t { MergeRequest, ConfirmMerge, MergeConfirmed, MergeCancelled, RosterUpdate, OffsetUpdate };
std::string_view to_string(MergeMsg m);

struct MergeMessage {
  MergeMsg kind = MergeMsg::MergeRequest;
  std::string from;
  std::string to;
  std::uint64_t merge_id = 0;
  std::string a1;  // initiator, member of the surviving map
  std::string a2;  // identified agent, member of the absorbed map
  Vec2 sighting;   // a2 as seen from a1
  int survivor = -1;
  int absorbed = -1;
  Vec2 offset;
  bool swapped = false;
};

/// Leader-coordinated merge protocol. Leaders lock themselves for the whole
/// run of one merge; a leader that is busy answers merge_cancelled. Messages
/// are delivered FIFO, or in random order when an interleaving source is set.
class MergeProtocol {
 public:
  explicit MergeProtocol(TeamStore& store, Rng* interleave = nullptr) : store_(store), interleave_(interleave) {}

  /// a1 identified a2 at `sighting` (a1's frame) and they are in different maps.
  void initiate(const std::string& a1, const std::string& a2, Vec2 sighting);

  /// Delivers messages until no message is in flight.
  void run();

  bool idle() const { return queue_.empty() && locks_.empty(); }
  const std::vector<MergeRecord>& completed() const { return completed_; }
  int cancelled() const { return cancelled_; }
  const std::vector<MergeMessage>& log() const { return log_; }
  void clear_log() {
    log_.clear();
    completed_.clear();
    cancelled_ = 0;
  }

 private:
  void send(MergeMessage m);
  void handle(const MergeMessage& m);
  bool is_leader_of(const std::string& leader, int map) const;

  TeamStore& store_;
  Rng* interleave_;
  std::deque<MergeMessage> queue_;
  std::map<std::string, std::uint64_t> locks_;
  std::uint64_t next_id_ = 1;
  std::vector<MergeRecord> completed_;
  std::vector<MergeMessage> log_;
  int cancelled_ = 0;
};

}  // namespace assemble
