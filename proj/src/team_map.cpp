#include "assemble/team_map.hpp"

#include <algorithm>
#include <sstream>

namespace assemble {

std::string_view to_string(ClusterStatus s) {
  switch (s) {
    case ClusterStatus::Unevaluated: return "unevaluated";
    case ClusterStatus::Evaluating: return "evaluating";
    case ClusterStatus::Good: return "good";
    case ClusterStatus::Bad: return "bad";
  }
  return "unevaluated";
}

std::string_view to_string(MergeMsg m) {
  switch (m) {
    case MergeMsg::MergeRequest: return "merge_request";
    case MergeMsg::ConfirmMerge: return "confirm_merge";
    case MergeMsg::MergeConfirmed: return "merge_confirmed";
    case MergeMsg::MergeCancelled: return "merge_cancelled";
    case MergeMsg::RosterUpdate: return "roster_update";
    case MergeMsg::OffsetUpdate: return "offset_update";
  }
  return "merge_request";
}

const GoalCluster* LocalMap::cluster_of(Vec2 cell) const {
  for (const auto& c : clusters)
    if (c.cells.count(cell)) return &c;
  return nullptr;
}

const GoalCluster* LocalMap::cluster(int cid) const {
  for (const auto& c : clusters)
    if (c.id == cid) return &c;
  return nullptr;
}

namespace {

// Higher wins when clusters are fused.
int status_weight(ClusterStatus s) {
  switch (s) {
    case ClusterStatus::Good: return 3;
    case ClusterStatus::Evaluating: return 2;
    case ClusterStatus::Bad: return 1;
    case ClusterStatus::Unevaluated: return 0;
  }
  return 0;
}

bool near(const GoalCluster& a, const std::set<Vec2>& cells) {
  for (Vec2 p : a.cells)
    for (Vec2 q : cells)
      if (chebyshev(p, q) <= TeamStore::kClusterDistance) return true;
  return false;
}

}  // namespace

TeamStore::TeamStore(std::vector<std::string> roster) : roster_(std::move(roster)) { reset(); }

void TeamStore::reset() {
  maps_.clear();
  map_of_.clear();
  for (std::size_t i = 0; i < roster_.size(); ++i) {
    LocalMap m;
    m.id = static_cast<int>(i);
    m.members = {roster_[i]};
    m.positions[roster_[i]] = {0, 0};
    maps_.emplace(m.id, std::move(m));
    map_of_[roster_[i]] = static_cast<int>(i);
  }
}

std::size_t TeamStore::rank(const std::string& agent) const {
  auto it = std::find(roster_.begin(), roster_.end(), agent);
  if (it == roster_.end()) throw std::out_of_range("agent not in roster: " + agent);
  return static_cast<std::size_t>(it - roster_.begin());
}

std::vector<int> TeamStore::map_ids() const {
  std::vector<int> ids;
  for (const auto& [id, _] : maps_) ids.push_back(id);
  return ids;
}

void TeamStore::update_position(const std::string& agent, const Action& last, Outcome outcome) {
  if (last.kind != ActionKind::Move || outcome != Outcome::Success) return;
  mut(map_id(agent)).positions.at(agent) += unit(last.dir);
}

std::vector<int> TeamStore::observe(const std::string& agent, const Percept& p) {
  std::vector<int> created;
  const int id = map_id(agent);
  const Vec2 me = position(agent);
  for (const auto& t : p.things) {
    if (t.type == ThingType::Dispenser) mut(id).dispensers[me + t.pos] = t.detail;
    if (t.type == ThingType::Goal)
      if (auto c = add_goal(id, me + t.pos)) created.push_back(*c);
  }
  return created;
}

void TeamStore::insert_cluster(LocalMap& m, GoalCluster c) {
  std::vector<GoalCluster> keep;
  GoalCluster fused = std::move(c);
  for (auto& existing : m.clusters) {
    if (!near(existing, fused.cells)) {
      keep.push_back(std::move(existing));
      continue;
    }
    const bool existing_wins = status_weight(existing.status) > status_weight(fused.status) ||
                               (status_weight(existing.status) == status_weight(fused.status) && existing.id < fused.id);
    fused.cells.insert(existing.cells.begin(), existing.cells.end());
    if (existing_wins) {
      fused.status = existing.status;
      fused.evaluator = existing.evaluator;
      fused.slots = existing.slots;
    }
    fused.id = std::min(fused.id, existing.id);
  }
  keep.push_back(std::move(fused));
  std::sort(keep.begin(), keep.end(), [](const GoalCluster& a, const GoalCluster& b) { return a.id < b.id; });
  m.clusters = std::move(keep);
}

std::optional<int> TeamStore::add_goal(int id, Vec2 cell) {
  auto& m = mut(id);
  if (!m.goals.insert(cell).second) return std::nullopt;
  const std::set<Vec2> single{cell};
  const bool joins = std::any_of(m.clusters.begin(), m.clusters.end(), [&](const GoalCluster& c) { return near(c, single); });
  GoalCluster c;
  c.cells = single;
  if (joins) {
    c.id = INT32_MAX;
    insert_cluster(m, std::move(c));
    return std::nullopt;
  }
  c.id = next_cluster_id_++;
  insert_cluster(m, std::move(c));
  return c.id;
}

bool TeamStore::try_claim_evaluation(int id, int cluster_id, const std::string& agent) {
  for (auto& c : mut(id).clusters)
    if (c.id == cluster_id && c.status == ClusterStatus::Unevaluated) {
      c.status = ClusterStatus::Evaluating;
      c.evaluator = agent;
      return true;
    }
  return false;
}

void TeamStore::finish_evaluation(int id, int cluster_id, ClusterStatus status, std::vector<Vec2> slots) {
  for (auto& c : mut(id).clusters)
    if (c.id == cluster_id) {
      c.status = status;
      c.slots = status == ClusterStatus::Good ? std::move(slots) : std::vector<Vec2>{};
      c.evaluator.reset();
    }
}

void TeamStore::reset_evaluation(int id, int cluster_id) {
  for (auto& c : mut(id).clusters)
    if (c.id == cluster_id && c.status == ClusterStatus::Evaluating) {
      c.status = ClusterStatus::Unevaluated;
      c.evaluator.reset();
      c.slots.clear();
    }
}

std::pair<int, int> TeamStore::elect(int a, int b) const {
  if (a == b) throw std::logic_error("a map cannot be merged with itself");
  return rank(map(a).leader()) < rank(map(b).leader()) ? std::pair{a, b} : std::pair{b, a};
}

MergeRecord TeamStore::merge(const std::string& a1, const std::string& a2, Vec2 sighting) {
  const int m1 = map_id(a1);
  const int m2 = map_id(a2);
  if (m1 == m2) throw std::logic_error("agents already share a map");
  const Vec2 offset = compute_merge_offset(position(a1), sighting, position(a2));

  // Build the merged map completely before publishing it.
  LocalMap merged = map(m1);
  const LocalMap& absorbed = map(m2);
  for (const auto& [pos, type] : absorbed.dispensers) merged.dispensers.emplace(pos + offset, type);
  for (Vec2 g : absorbed.goals) merged.goals.insert(g + offset);
  for (const auto& c : absorbed.clusters) {
    GoalCluster moved = c;
    moved.cells.clear();
    for (Vec2 p : c.cells) moved.cells.insert(p + offset);
    for (auto& s : moved.slots) s += offset;
    insert_cluster(merged, std::move(moved));
  }
  // Goal cells already known to the survivor but not yet clustered with the
  // incoming ones stay where they are; the partition is rebuilt above.
  MergeRecord rec{m1, m2, offset, absorbed.members};
  for (const auto& name : absorbed.members) {
    merged.members.push_back(name);
    merged.positions[name] = absorbed.positions.at(name) + offset;
  }
  maps_[m1] = std::move(merged);
  maps_.erase(m2);
  for (const auto& name : rec.moved) map_of_[name] = m1;
  return rec;
}

void TeamStore::check_invariants() const {
  std::map<std::string, int> seen;
  for (const auto& [id, m] : maps_) {
    if (m.members.empty()) throw std::logic_error("map without members");
    if (m.positions.size() != m.members.size()) throw std::logic_error("member without a position");
    for (const auto& name : m.members) {
      if (!seen.emplace(name, id).second) throw std::logic_error(name + " belongs to two maps");
      if (!m.positions.count(name)) throw std::logic_error(name + " has no position");
      if (map_of_.at(name) != id) throw std::logic_error(name + " index disagrees with roster");
    }
    std::set<Vec2> clustered;
    for (const auto& c : m.clusters) {
      for (Vec2 p : c.cells) {
        if (!m.goals.count(p)) throw std::logic_error("cluster cell is not a goal");
        if (!clustered.insert(p).second) throw std::logic_error("goal in two clusters");
      }
      if ((c.status == ClusterStatus::Good) != !c.slots.empty())
        throw std::logic_error("slots present iff cluster is good");
    }
    if (clustered.size() != m.goals.size()) throw std::logic_error("goal outside every cluster");
  }
  if (seen.size() != roster_.size()) throw std::logic_error("agent without a map");
}

std::string TeamStore::snapshot(int id) const {
  const auto& m = map(id);
  std::ostringstream out;
  out << "map " << m.id << " leader " << m.leader() << "\n";
  for (const auto& name : m.members) out << "member " << name << " " << to_string(m.positions.at(name)) << "\n";
  for (const auto& [p, t] : m.dispensers) out << "dispenser " << to_string(p) << " " << t << "\n";
  for (const auto& c : m.clusters) {
    out << "cluster " << c.id << " " << to_string(c.status);
    for (Vec2 p : c.cells) out << " " << to_string(p);
    if (!c.slots.empty()) {
      out << " slots";
      for (Vec2 p : c.slots) out << " " << to_string(p);
    }
    out << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Protocol
// ---------------------------------------------------------------------------

bool MergeProtocol::is_leader_of(const std::string& leader, int id) const {
  const auto ids = store_.map_ids();
  return std::find(ids.begin(), ids.end(), id) != ids.end() && store_.map(id).leader() == leader;
}

void MergeProtocol::send(MergeMessage m) {
  log_.push_back(m);
  queue_.push_back(std::move(m));
}

void MergeProtocol::initiate(const std::string& a1, const std::string& a2, Vec2 sighting) {
  if (store_.same_map(a1, a2)) return;
  MergeMessage m;
  m.kind = MergeMsg::MergeRequest;
  m.from = a1;
  m.to = store_.map_of(a1).leader();  // may be a1 itself
  m.a1 = a1;
  m.a2 = a2;
  m.sighting = sighting;
  send(std::move(m));
}

void MergeProtocol::run() {
  while (!queue_.empty()) {
    std::size_t pick = 0;
    if (interleave_) pick = interleave_->below(queue_.size());
    MergeMessage m = queue_[pick];
    queue_.erase(queue_.begin() + static_cast<long>(pick));
    handle(m);
  }
}

void MergeProtocol::handle(const MergeMessage& m) {
  switch (m.kind) {
    case MergeMsg::MergeRequest: {
      // Re-read the roles: earlier merges in this step may have moved agents.
      if (store_.same_map(m.a1, m.a2) || store_.map_of(m.a1).leader() != m.to) {
        ++cancelled_;
        return;
      }
      const int m1 = store_.map_id(m.a1);
      const int m2 = store_.map_id(m.a2);
      const auto [survivor, absorbed] = store_.elect(m1, m2);
      if (survivor != m1) {
        // No priority: hand the merge to the other leader with roles swapped.
        if (m.swapped) {
          ++cancelled_;
          return;
        }
        MergeMessage swap = m;
        swap.from = m.to;
        swap.to = store_.map(m2).leader();
        swap.a1 = m.a2;
        swap.a2 = m.a1;
        swap.sighting = -m.sighting;
        swap.swapped = true;
        send(std::move(swap));
        return;
      }
      if (locks_.count(m.to)) {
        ++cancelled_;
        return;
      }
      const std::uint64_t id = next_id_++;
      locks_[m.to] = id;
      MergeMessage confirm = m;
      confirm.kind = MergeMsg::ConfirmMerge;
      confirm.from = m.to;
      confirm.to = store_.map(m2).leader();
      confirm.merge_id = id;
      confirm.survivor = m1;
      confirm.absorbed = m2;
      send(std::move(confirm));
      return;
    }
    case MergeMsg::ConfirmMerge: {
      MergeMessage reply = m;
      reply.from = m.to;
      reply.to = m.from;
      if (locks_.count(m.to) || !is_leader_of(m.to, m.absorbed) || store_.map_id(m.a2) != m.absorbed) {
        reply.kind = MergeMsg::MergeCancelled;
      } else {
        locks_[m.to] = m.merge_id;
        reply.kind = MergeMsg::MergeConfirmed;
      }
      send(std::move(reply));
      return;
    }
    case MergeMsg::MergeCancelled: {
      if (auto it = locks_.find(m.to); it != locks_.end() && it->second == m.merge_id) locks_.erase(it);
      ++cancelled_;
      return;
    }
    case MergeMsg::MergeConfirmed: {
      const std::string& l1 = m.to;
      const std::string& l2 = m.from;
      auto rec = store_.merge(m.a1, m.a2, m.sighting);
      completed_.push_back(rec);
      for (const auto& name : store_.map(rec.survivor).members) {
        MergeMessage u;
        u.from = l1;
        u.to = name;
        u.merge_id = m.merge_id;
        u.survivor = rec.survivor;
        u.absorbed = rec.absorbed;
        const bool moved = std::find(rec.moved.begin(), rec.moved.end(), name) != rec.moved.end();
        u.kind = moved ? MergeMsg::OffsetUpdate : MergeMsg::RosterUpdate;
        if (moved) u.offset = rec.offset;
        log_.push_back(std::move(u));
      }
      locks_.erase(l1);
      locks_.erase(l2);
      return;
    }
    case MergeMsg::RosterUpdate:
    case MergeMsg::OffsetUpdate: return;
  }
}

}  // namespace assemble
