#include "assemble/world.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <sstream>

namespace assemble {

namespace {

constexpr long kEmpty = -1;

long block_code(std::size_t i) { return -2 - static_cast<long>(i); }
bool is_block_code(long c) { return c <= -2; }
std::size_t block_index(long c) { return static_cast<std::size_t>(-2 - c); }

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && s[i] == ' ') ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::optional<int> to_int(std::string_view s) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

std::string block_type_name(int i) { return "b" + std::to_string(i); }

// ---------------------------------------------------------------------------
// Action text
// ---------------------------------------------------------------------------

bool Action::operator==(const Action& o) const {
  if (kind != o.kind) return false;
  switch (kind) {
    case ActionKind::Skip: return true;
    case ActionKind::Move:
    case ActionKind::Request:
    case ActionKind::Attach:
    case ActionKind::Detach: return dir == o.dir;
    case ActionKind::Rotate: return rotation == o.rotation;
    case ActionKind::Connect: return name == o.name && target == o.target;
    case ActionKind::Submit: return name == o.name;
    case ActionKind::Clear: return target == o.target;
  }
  return false;
}

std::string to_string(const Action& a) {
  switch (a.kind) {
    case ActionKind::Skip: return "skip";
    case ActionKind::Move: return std::string("move ") + to_char(a.dir);
    case ActionKind::Rotate: return a.rotation == Rotation::CW ? "rotate cw" : "rotate ccw";
    case ActionKind::Request: return std::string("request ") + to_char(a.dir);
    case ActionKind::Attach: return std::string("attach ") + to_char(a.dir);
    case ActionKind::Detach: return std::string("detach ") + to_char(a.dir);
    case ActionKind::Connect:
      return "connect " + a.name + " " + std::to_string(a.target.x) + " " + std::to_string(a.target.y);
    case ActionKind::Submit: return "submit " + a.name;
    case ActionKind::Clear: return "clear " + std::to_string(a.target.x) + " " + std::to_string(a.target.y);
  }
  return "skip";
}

std::optional<Action> parse_action(std::string_view text) {
  const auto parts = split_ws(text);
  if (parts.empty()) return std::nullopt;
  const auto verb = parts[0];
  auto single_dir = [&]() -> std::optional<Dir> {
    if (parts.size() != 2 || parts[1].size() != 1) return std::nullopt;
    return dir_from_char(parts[1][0]);
  };
  if (verb == "skip" && parts.size() == 1) return Action::skip();
  if (verb == "move" || verb == "request" || verb == "attach" || verb == "detach") {
    auto d = single_dir();
    if (!d) return std::nullopt;
    if (verb == "move") return Action::move(*d);
    if (verb == "request") return Action::request(*d);
    if (verb == "attach") return Action::attach(*d);
    return Action::detach(*d);
  }
  if (verb == "rotate" && parts.size() == 2) {
    if (parts[1] == "cw") return Action::rotate(Rotation::CW);
    if (parts[1] == "ccw") return Action::rotate(Rotation::CCW);
    return std::nullopt;
  }
  if (verb == "clear" && parts.size() == 3) {
    auto x = to_int(parts[1]);
    auto y = to_int(parts[2]);
    if (!x || !y) return std::nullopt;
    return Action::clear({*x, *y});
  }
  if (verb == "connect" && parts.size() == 4) {
    auto x = to_int(parts[2]);
    auto y = to_int(parts[3]);
    if (!x || !y) return std::nullopt;
    return Action::connect(std::string(parts[1]), {*x, *y});
  }
  if (verb == "submit" && parts.size() == 2) return Action::submit(std::string(parts[1]));
  return std::nullopt;
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Success: return "success";
    case Outcome::FailedPath: return "failed_path";
    case Outcome::FailedOutOfBounds: return "failed_out_of_bounds";
    case Outcome::FailedRandom: return "failed_random";
    case Outcome::FailedTarget: return "failed_target";
    case Outcome::FailedDisabled: return "failed_disabled";
  }
  return "success";
}

std::optional<Outcome> parse_outcome(std::string_view text) {
  for (auto o : {Outcome::Success, Outcome::FailedPath, Outcome::FailedOutOfBounds, Outcome::FailedRandom,
                 Outcome::FailedTarget, Outcome::FailedDisabled})
    if (to_string(o) == text) return o;
  return std::nullopt;
}

std::string_view to_string(ThingType t) {
  switch (t) {
    case ThingType::Entity: return "entity";
    case ThingType::Block: return "block";
    case ThingType::Dispenser: return "dispenser";
    case ThingType::Obstacle: return "obstacle";
    case ThingType::Goal: return "goal";
  }
  return "obstacle";
}

std::optional<ThingType> parse_thing_type(std::string_view text) {
  for (auto t : {ThingType::Entity, ThingType::Block, ThingType::Dispenser, ThingType::Obstacle, ThingType::Goal})
    if (to_string(t) == text) return t;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Percept lookups
// ---------------------------------------------------------------------------

bool Percept::has(Vec2 rel, ThingType type) const {
  return std::any_of(things.begin(), things.end(), [&](const Thing& t) { return t.pos == rel && t.type == type; });
}

bool Percept::has(Vec2 rel, ThingType type, std::string_view detail) const {
  return std::any_of(things.begin(), things.end(),
                     [&](const Thing& t) { return t.pos == rel && t.type == type && t.detail == detail; });
}

bool Percept::is_obstruction(Vec2 rel) const { return has(rel, ThingType::Obstacle) || has(rel, ThingType::Block); }

bool Percept::is_teammate(Vec2 rel) const {
  return !(rel == Vec2{}) && has(rel, ThingType::Entity, team);
}

bool Percept::is_opponent(Vec2 rel) const {
  return std::any_of(things.begin(), things.end(), [&](const Thing& t) {
    return t.pos == rel && t.type == ThingType::Entity && t.detail != team;
  });
}

bool Percept::is_attached(Vec2 rel) const {
  return std::any_of(attached.begin(), attached.end(), [&](const Attachment& a) { return a.offset == rel; });
}

bool Percept::is_free(Vec2 rel) const {
  return std::none_of(things.begin(), things.end(), [&](const Thing& t) {
    return t.pos == rel && (t.type == ThingType::Obstacle || t.type == ThingType::Block || t.type == ThingType::Entity);
  });
}

// ---------------------------------------------------------------------------
// World setup
// ---------------------------------------------------------------------------

World::World(WorldConfig config)
    : config_(std::move(config)),
      rng_(config_.seed * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL),
      terrain_(static_cast<std::size_t>(config_.width) * config_.height, Terrain::Empty),
      occupancy_(terrain_.size(), kEmpty) {
  if (config_.width <= 0 || config_.height <= 0) throw std::invalid_argument("world dimensions must be positive");
  for (const auto& t : config_.teams) scores_[t] = 0;
}

void World::set_terrain(Vec2 p, Terrain t) {
  if (!in_bounds(p)) throw std::out_of_range("terrain outside grid: " + to_string(p));
  if (t == Terrain::Obstacle && (occupancy_[index(p)] != kEmpty || dispenser_at(p)))
    throw std::invalid_argument("obstacle on occupied cell " + to_string(p));
  terrain_[index(p)] = t;
}

std::size_t World::add_agent(std::string name, std::string team, Vec2 pos) {
  if (!in_bounds(pos) || terrain(pos) == Terrain::Obstacle || occupancy_[index(pos)] != kEmpty)
    throw std::invalid_argument("cannot place agent " + name + " at " + to_string(pos));
  if (find_agent(name)) throw std::invalid_argument("duplicate agent " + name);
  AgentState a;
  a.name = std::move(name);
  a.team = team;
  a.pos = pos;
  a.energy = config_.max_energy;
  agents_.push_back(std::move(a));
  scores_.try_emplace(team, 0);
  rebuild_occupancy();
  return agents_.size() - 1;
}

void World::add_dispenser(Vec2 p, std::string type) {
  if (!in_bounds(p) || terrain(p) == Terrain::Obstacle || dispenser_at(p))
    throw std::invalid_argument("cannot place dispenser at " + to_string(p));
  dispensers_.push_back({p, std::move(type)});
}

std::uint32_t World::add_block(Vec2 p, std::string type) {
  if (!in_bounds(p) || terrain(p) == Terrain::Obstacle || occupancy_[index(p)] != kEmpty)
    throw std::invalid_argument("cannot place block at " + to_string(p));
  const auto id = next_block_id_++;
  blocks_.push_back({id, p, std::move(type), std::nullopt});
  rebuild_occupancy();
  return id;
}

void World::attach_block(std::size_t agent, std::uint32_t block_id) {
  for (auto& b : blocks_)
    if (b.id == block_id) {
      b.holder = agent;
      return;
    }
  throw std::invalid_argument("unknown block id");
}

void World::add_task(TaskSpec task) { tasks_.push_back(std::move(task)); }

void World::disable_agent(std::size_t agent, int duration) { disable_until(agent, step_ + duration); }

// ---------------------------------------------------------------------------
// Queries
// ---------------------------------------------------------------------------

std::optional<std::size_t> World::find_agent(std::string_view name) const {
  for (std::size_t i = 0; i < agents_.size(); ++i)
    if (agents_[i].name == name) return i;
  return std::nullopt;
}

std::optional<std::size_t> World::agent_at(Vec2 p) const {
  if (!in_bounds(p)) return std::nullopt;
  const long c = occupancy_[index(p)];
  if (c >= 0) return static_cast<std::size_t>(c);
  return std::nullopt;
}

std::optional<std::size_t> World::block_at(Vec2 p) const {
  if (!in_bounds(p)) return std::nullopt;
  const long c = occupancy_[index(p)];
  if (is_block_code(c)) return block_index(c);
  return std::nullopt;
}

std::optional<std::string> World::dispenser_at(Vec2 p) const {
  for (const auto& d : dispensers_)
    if (d.pos == p) return d.type;
  return std::nullopt;
}

int World::score(std::string_view team) const {
  auto it = scores_.find(std::string(team));
  return it == scores_.end() ? 0 : it->second;
}

std::vector<Attachment> World::attachments(std::size_t agent) const {
  std::vector<Attachment> out;
  for (const auto& b : blocks_)
    if (b.holder == agent) out.push_back({b.pos - agents_[agent].pos, b.type});
  std::sort(out.begin(), out.end(), [](const Attachment& a, const Attachment& b) { return a.offset < b.offset; });
  return out;
}

bool World::is_disabled(std::size_t agent) const {
  const auto& a = agents_.at(agent);
  return a.disabled_until && step_ < *a.disabled_until;
}

Percept World::percept(std::string_view name) const {
  auto i = find_agent(name);
  if (!i) throw std::out_of_range("unknown agent " + std::string(name));
  return percept(*i);
}

Percept World::percept(std::size_t agent) const {
  const auto& a = agents_.at(agent);
  Percept p;
  p.name = a.name;
  p.team = a.team;
  p.step = step_;
  p.vision = config_.vision;
  p.energy = a.energy;
  p.disabled = is_disabled(agent);
  p.score = score(a.team);
  p.last_action = a.last_action;
  p.last_outcome = a.last_result.outcome;
  const int v = config_.vision;
  for (int dy = -v; dy <= v; ++dy) {
    for (int dx = -v; dx <= v; ++dx) {
      const Vec2 rel{dx, dy};
      if (manhattan(rel) > v) continue;
      const Vec2 cell = a.pos + rel;
      if (!in_bounds(cell)) continue;
      switch (terrain(cell)) {
        case Terrain::Obstacle: p.things.push_back({rel, ThingType::Obstacle, ""}); break;
        case Terrain::Goal: p.things.push_back({rel, ThingType::Goal, ""}); break;
        case Terrain::Empty: break;
      }
      if (auto d = dispenser_at(cell)) p.things.push_back({rel, ThingType::Dispenser, *d});
      const long c = occupancy_[index(cell)];
      if (c >= 0)
        p.things.push_back({rel, ThingType::Entity, agents_[static_cast<std::size_t>(c)].team});
      else if (is_block_code(c))
        p.things.push_back({rel, ThingType::Block, blocks_[block_index(c)].type});
    }
  }
  std::sort(p.things.begin(), p.things.end());
  p.attached = attachments(agent);
  p.tasks = tasks_;
  return p;
}

// ---------------------------------------------------------------------------
// Step
// ---------------------------------------------------------------------------

void World::rebuild_occupancy() {
  std::fill(occupancy_.begin(), occupancy_.end(), kEmpty);
  for (std::size_t i = 0; i < agents_.size(); ++i) occupancy_[index(agents_[i].pos)] = static_cast<long>(i);
  for (std::size_t i = 0; i < blocks_.size(); ++i)
    if (in_bounds(blocks_[i].pos)) occupancy_[index(blocks_[i].pos)] = block_code(i);
}

std::vector<Vec2> World::claimed_cells(std::size_t agent, const Action& a, bool& out_of_bounds) const {
  out_of_bounds = false;
  const auto& st = agents_[agent];
  std::vector<Vec2> current{st.pos};
  std::vector<Vec2> next;
  if (a.kind == ActionKind::Move) next.push_back(st.pos + unit(a.dir));
  else next.push_back(st.pos);
  for (const auto& b : blocks_) {
    if (b.holder != agent) continue;
    current.push_back(b.pos);
    if (a.kind == ActionKind::Move) next.push_back(b.pos + unit(a.dir));
    else next.push_back(st.pos + rotate(b.pos - st.pos, a.rotation));
  }
  std::vector<Vec2> claims;
  for (Vec2 c : next) {
    if (!in_bounds(c)) out_of_bounds = true;
    if (std::find(current.begin(), current.end(), c) == current.end()) claims.push_back(c);
  }
  return claims;
}

Outcome World::apply_shift(std::size_t agent, const Action& a, const std::vector<long>& pre) {
  bool oob = false;
  const auto claims = claimed_cells(agent, a, oob);
  if (oob) return a.kind == ActionKind::Move ? Outcome::FailedOutOfBounds : Outcome::FailedPath;
  for (Vec2 c : claims) {
    if (terrain(c) == Terrain::Obstacle) return Outcome::FailedPath;
    if (occupancy_[index(c)] != kEmpty || pre[index(c)] != kEmpty) return Outcome::FailedPath;
  }
  auto& st = agents_[agent];
  if (a.kind == ActionKind::Move) {
    st.pos += unit(a.dir);
    for (auto& b : blocks_)
      if (b.holder == agent) b.pos += unit(a.dir);
  } else {
    for (auto& b : blocks_)
      if (b.holder == agent) b.pos = st.pos + rotate(b.pos - st.pos, a.rotation);
  }
  rebuild_occupancy();
  return Outcome::Success;
}

Outcome World::apply_clear(std::size_t agent, Vec2 target) {
  auto& st = agents_[agent];
  const Vec2 cell = st.pos + target;
  if (manhattan(target) > config_.vision || !in_bounds(cell) || st.energy < config_.clear_cost) {
    st.charge = {};
    return Outcome::FailedTarget;
  }
  const bool continuing = st.last_action.kind == ActionKind::Clear && st.last_result.outcome == Outcome::Success &&
                          st.charge.count > 0 && st.charge.target == cell;
  st.charge.count = continuing ? st.charge.count + 1 : 1;
  st.charge.target = cell;
  if (st.charge.count < config_.clear_steps) return Outcome::Success;

  st.charge = {};
  st.energy -= config_.clear_cost;
  if (auto other = agent_at(cell)) disable_until(*other, step_ + 1 + config_.disable_duration);
  if (auto b = block_at(cell)) remove_block(*b);
  if (terrain(cell) == Terrain::Obstacle) terrain_[index(cell)] = Terrain::Empty;
  return Outcome::Success;
}

Outcome World::apply_request(std::size_t agent, Dir d) {
  const Vec2 cell = agents_[agent].pos + unit(d);
  if (!in_bounds(cell)) return Outcome::FailedTarget;
  auto type = dispenser_at(cell);
  if (!type || occupancy_[index(cell)] != kEmpty) return Outcome::FailedTarget;
  blocks_.push_back({next_block_id_++, cell, *type, std::nullopt});
  rebuild_occupancy();
  return Outcome::Success;
}

Outcome World::apply_attach(std::size_t agent, Dir d) {
  const Vec2 cell = agents_[agent].pos + unit(d);
  auto b = block_at(cell);
  if (!b || blocks_[*b].holder) return Outcome::FailedTarget;
  // Direct attachment is limited to one block; structures grow via connect.
  for (const auto& other : blocks_)
    if (other.holder == agent) return Outcome::FailedTarget;
  blocks_[*b].holder = agent;
  return Outcome::Success;
}

Outcome World::apply_detach(std::size_t agent, Dir d) {
  const Vec2 cell = agents_[agent].pos + unit(d);
  auto b = block_at(cell);
  if (!b || blocks_[*b].holder != agent) return Outcome::FailedTarget;
  blocks_[*b].holder.reset();
  // Drop whatever is no longer connected to the agent through held blocks.
  std::set<Vec2> reached{agents_[agent].pos};
  std::vector<Vec2> frontier{agents_[agent].pos};
  while (!frontier.empty()) {
    Vec2 c = frontier.back();
    frontier.pop_back();
    for (Dir dd : kAllDirs) {
      Vec2 n = c + unit(dd);
      auto nb = block_at(n);
      if (nb && blocks_[*nb].holder == agent && reached.insert(n).second) frontier.push_back(n);
    }
  }
  for (auto& blk : blocks_)
    if (blk.holder == agent && !reached.count(blk.pos)) blk.holder.reset();
  return Outcome::Success;
}

Outcome World::apply_connect(std::size_t agent, const std::string& partner, Vec2 offset) {
  auto p = find_agent(partner);
  if (!p || *p == agent || agents_[*p].team != agents_[agent].team) return Outcome::FailedTarget;
  const Vec2 cell = agents_[agent].pos + offset;
  auto b = block_at(cell);
  if (!b || blocks_[*b].holder) return Outcome::FailedTarget;
  bool adjacent = false;
  for (Dir d : kAllDirs) {
    Vec2 n = cell + unit(d);
    if (n == agents_[agent].pos) adjacent = true;
    auto nb = block_at(n);
    if (nb && blocks_[*nb].holder == agent) adjacent = true;
  }
  if (!adjacent) return Outcome::FailedTarget;
  blocks_[*b].holder = agent;
  return Outcome::Success;
}

Outcome World::apply_submit(std::size_t agent, const std::string& name) {
  auto it = std::find_if(tasks_.begin(), tasks_.end(), [&](const TaskSpec& t) { return t.name == name; });
  if (it == tasks_.end() || it->deadline < step_ || it->announced_step > step_) return Outcome::FailedTarget;
  const auto& st = agents_[agent];
  if (terrain(st.pos) != Terrain::Goal) return Outcome::FailedTarget;
  auto held = attachments(agent);
  std::vector<Attachment> want;
  for (const auto& r : it->pattern) want.push_back({r.offset, r.type});
  std::sort(want.begin(), want.end(), [](const Attachment& a, const Attachment& b) { return a.offset < b.offset; });
  if (held != want) return Outcome::FailedTarget;

  scores_[st.team] += it->reward;
  submissions_.push_back({step_, st.team, it->name, it->pattern.size(), it->reward});
  for (std::size_t i = blocks_.size(); i-- > 0;)
    if (blocks_[i].holder == agent) blocks_.erase(blocks_.begin() + static_cast<long>(i));
  tasks_.erase(it);
  rebuild_occupancy();
  return Outcome::Success;
}

void World::release_blocks(std::size_t agent) {
  for (auto& b : blocks_)
    if (b.holder == agent) b.holder.reset();
}

void World::remove_block(std::size_t i) {
  blocks_.erase(blocks_.begin() + static_cast<long>(i));
  rebuild_occupancy();
}

void World::disable_until(std::size_t agent, int until) {
  auto& st = agents_[agent];
  st.disabled_until = std::max(st.disabled_until.value_or(0), until);
  st.charge = {};
  release_blocks(agent);
}

void World::fire_clear_event(Vec2 center, int radius) {
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx) {
      const Vec2 c = center + Vec2{dx, dy};
      if (manhattan({dx, dy}) > radius || !in_bounds(c)) continue;
      if (auto a = agent_at(c)) disable_until(*a, step_ + 1 + config_.disable_duration);
    }
  for (std::size_t i = blocks_.size(); i-- > 0;)
    if (manhattan(blocks_[i].pos, center) <= radius) blocks_.erase(blocks_.begin() + static_cast<long>(i));
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx) {
      const Vec2 c = center + Vec2{dx, dy};
      if (manhattan({dx, dy}) <= radius && in_bounds(c) && terrain(c) == Terrain::Obstacle)
        terrain_[index(c)] = Terrain::Empty;
    }
  rebuild_occupancy();
}

TaskSpec World::random_task() {
  TaskSpec t;
  t.name = "t" + std::to_string(next_task_id_++);
  t.announced_step = step_;
  t.deadline = step_ + rng_.range(config_.task_min_duration, config_.task_max_duration);
  const int size = rng_.range(1, std::max(1, std::min(config_.task_max_size, 6)));
  // Patterns grow from the cell south of the submitting agent and stay inside
  // the 3x2 box below it.
  std::vector<Vec2> cells{{0, 1}};
  while (static_cast<int>(cells.size()) < size) {
    std::vector<Vec2> frontier;
    for (Vec2 c : cells)
      for (Dir d : kAllDirs) {
        Vec2 n = c + unit(d);
        if (n.x < -1 || n.x > 1 || n.y < 1 || n.y > 2) continue;
        if (std::find(cells.begin(), cells.end(), n) != cells.end()) continue;
        if (std::find(frontier.begin(), frontier.end(), n) != frontier.end()) continue;
        frontier.push_back(n);
      }
    std::sort(frontier.begin(), frontier.end());
    cells.push_back(frontier[rng_.below(frontier.size())]);
  }
  for (Vec2 c : cells) t.pattern.push_back({c, block_type_name(rng_.range(0, config_.block_types - 1))});
  t.reward = 10 * static_cast<int>(t.pattern.size());
  return t;
}

void World::maybe_generate_task() {
  if (config_.block_types > 0 && rng_.chance(config_.task_rate)) tasks_.push_back(random_task());
}

std::vector<std::string> World::advance(const std::map<std::string, Action>& actions) {
  std::vector<std::string> rejected;
  for (const auto& [name, _] : actions)
    if (!find_agent(name)) rejected.push_back(name);

  const std::size_t n = agents_.size();
  std::vector<Action> chosen(n);
  std::vector<StepResult> result(n);
  std::vector<bool> pending(n, true);
  for (std::size_t i = 0; i < n; ++i) {
    auto it = actions.find(agents_[i].name);
    if (it != actions.end()) chosen[i] = it->second;
    else result[i].coerced = true;
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (is_disabled(i)) {
      result[i].outcome = Outcome::FailedDisabled;
      pending[i] = false;
    } else if (chosen[i].kind != ActionKind::Skip && rng_.chance(config_.random_fail_prob)) {
      result[i].outcome = Outcome::FailedRandom;
      pending[i] = false;
    }
  }

  // Moves and rotations that claim the same cell fail together.
  std::map<Vec2, int> claim_count;
  std::vector<std::vector<Vec2>> claims(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!pending[i]) continue;
    const auto k = chosen[i].kind;
    if (k != ActionKind::Move && k != ActionKind::Rotate) continue;
    bool oob = false;
    claims[i] = claimed_cells(i, chosen[i], oob);
    for (Vec2 c : claims[i]) ++claim_count[c];
  }
  for (std::size_t i = 0; i < n; ++i)
    for (Vec2 c : claims[i])
      if (claim_count[c] > 1 && pending[i]) {
        bool oob = false;
        claimed_cells(i, chosen[i], oob);
        result[i].outcome = oob && chosen[i].kind == ActionKind::Move ? Outcome::FailedOutOfBounds : Outcome::FailedPath;
        pending[i] = false;
      }

  const std::vector<long> pre = occupancy_;
  for (std::size_t i = 0; i < n; ++i) {
    if (chosen[i].kind != ActionKind::Clear || !pending[i]) agents_[i].charge = {};
    if (!pending[i]) continue;
    const Action& a = chosen[i];
    Outcome o = Outcome::Success;
    switch (a.kind) {
      case ActionKind::Skip: break;
      case ActionKind::Move:
      case ActionKind::Rotate: o = apply_shift(i, a, pre); break;
      case ActionKind::Clear: o = apply_clear(i, a.target); break;
      case ActionKind::Request: o = apply_request(i, a.dir); break;
      case ActionKind::Attach: o = apply_attach(i, a.dir); break;
      case ActionKind::Detach: o = apply_detach(i, a.dir); break;
      case ActionKind::Connect: o = apply_connect(i, a.name, a.target); break;
      case ActionKind::Submit: o = apply_submit(i, a.name); break;
    }
    result[i].outcome = o;
  }

  for (std::size_t i = 0; i < n; ++i) {
    agents_[i].energy = std::min(config_.max_energy, agents_[i].energy + config_.energy_regen);
    agents_[i].last_action = chosen[i];
    agents_[i].last_result = result[i];
  }

  // Environment events belong to the step just processed.
  for (const auto& ev : scheduled_events_) {
    if (ev.step != step_) continue;
    Vec2 center = ev.center;
    if (ev.agent)
      if (auto a = find_agent(*ev.agent)) center = agents_[*a].pos;
    fire_clear_event(center, ev.radius);
  }
  if (rng_.chance(config_.clear_event_rate)) {
    const Vec2 center{rng_.range(0, config_.width - 1), rng_.range(0, config_.height - 1)};
    fire_clear_event(center, rng_.range(config_.clear_event_radius_min, config_.clear_event_radius_max));
  }

  ++step_;
  for (auto& a : agents_)
    if (a.disabled_until && step_ >= *a.disabled_until) a.disabled_until.reset();
  std::erase_if(tasks_, [&](const TaskSpec& t) { return t.deadline < step_; });
  maybe_generate_task();
  return rejected;
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

World World::generate(const WorldConfig& cfg) {
  if (cfg.width < 20 || cfg.height < 20) throw std::invalid_argument("world must be at least 20x20");
  if (cfg.teams.empty()) throw std::invalid_argument("at least one team is required");
  if (cfg.agents_per_team < 1 || cfg.agents_per_team > cfg.width * cfg.height / 40)
    throw std::invalid_argument("too many agents per team for the grid area");
  if (cfg.block_types < 1) throw std::invalid_argument("at least one block type is required");
  const long area = static_cast<long>(cfg.width) * cfg.height;
  const long goal_cells = static_cast<long>(cfg.goal_clusters) * cfg.goal_cluster_size;
  const long feature_cells = goal_cells + static_cast<long>(cfg.block_types) * cfg.dispensers_per_type +
                             static_cast<long>(cfg.teams.size()) * cfg.agents_per_team +
                             static_cast<long>(cfg.obstacle_density * static_cast<double>(area));
  if (cfg.goal_clusters < 1 || cfg.goal_cluster_size < 1 || cfg.dispensers_per_type < 1 ||
      feature_cells > area / 2 || cfg.obstacle_density < 0.0 || cfg.obstacle_density > 0.4)
    throw std::invalid_argument("configuration has too many features for the grid area");

  World w(cfg);
  Rng gen(cfg.seed ^ 0xA5A5F00DCAFEBEEFULL);
  const int margin = 8;
  if (cfg.width - 2 * margin < 1 || cfg.height - 2 * margin < 1)
    throw std::invalid_argument("grid too small for goal placement margin");

  // Goal clusters away from the border, far apart from each other.
  std::vector<Vec2> goals;
  std::vector<Vec2> centers;
  for (int c = 0; c < cfg.goal_clusters; ++c) {
    bool placed = false;
    for (int attempt = 0; attempt < 500 && !placed; ++attempt) {
      const Vec2 center{gen.range(margin, cfg.width - 1 - margin), gen.range(margin, cfg.height - 1 - margin)};
      const bool far = std::all_of(centers.begin(), centers.end(), [&](Vec2 o) { return chebyshev(o, center) >= 12; });
      if (!far) continue;
      centers.push_back(center);
      std::vector<Vec2> cells{center};
      while (static_cast<int>(cells.size()) < cfg.goal_cluster_size) {
        Vec2 base = cells[gen.below(cells.size())];
        Vec2 n = base + unit(kAllDirs[gen.below(4)]);
        if (chebyshev(n, center) <= 2 && std::find(cells.begin(), cells.end(), n) == cells.end()) cells.push_back(n);
      }
      for (Vec2 g : cells) {
        w.terrain_[w.index(g)] = Terrain::Goal;
        goals.push_back(g);
      }
      placed = true;
    }
    if (!placed) throw std::invalid_argument("could not place goal clusters; grid too small");
  }
  auto protected_cell = [&](Vec2 p) {
    return std::any_of(goals.begin(), goals.end(), [&](Vec2 g) { return chebyshev(g, p) <= 6; });
  };

  // Obstacle patches as short random walks.
  const long target = static_cast<long>(cfg.obstacle_density * static_cast<double>(area));
  long placed = 0;
  for (int attempt = 0; placed < target && attempt < 100000; ++attempt) {
    Vec2 p{gen.range(0, cfg.width - 1), gen.range(0, cfg.height - 1)};
    const int len = gen.range(3, 8);
    for (int k = 0; k < len && placed < target; ++k) {
      if (w.in_bounds(p) && !protected_cell(p) && w.terrain(p) == Terrain::Empty) {
        w.terrain_[w.index(p)] = Terrain::Obstacle;
        ++placed;
      }
      p += unit(kAllDirs[gen.below(4)]);
    }
  }

  auto random_free = [&](auto&& ok) -> Vec2 {
    for (int attempt = 0; attempt < 100000; ++attempt) {
      Vec2 p{gen.range(0, cfg.width - 1), gen.range(0, cfg.height - 1)};
      if (w.terrain(p) == Terrain::Empty && !w.dispenser_at(p) && w.occupancy_[w.index(p)] == kEmpty && ok(p))
        return p;
    }
    throw std::invalid_argument("no free cell left for placement");
  };

  for (int t = 0; t < cfg.block_types; ++t)
    for (int k = 0; k < cfg.dispensers_per_type; ++k)
      w.dispensers_.push_back({random_free([](Vec2) { return true; }), block_type_name(t)});

  for (const auto& team : cfg.teams)
    for (int i = 1; i <= cfg.agents_per_team; ++i) {
      AgentState a;
      a.name = team + std::to_string(i);
      a.team = team;
      a.pos = random_free([](Vec2) { return true; });
      a.energy = cfg.max_energy;
      w.agents_.push_back(std::move(a));
      w.rebuild_occupancy();
    }
  return w;
}

// ---------------------------------------------------------------------------
// Serialization and audits
// ---------------------------------------------------------------------------

std::string World::serialize() const {
  std::ostringstream out;
  out << "world " << config_.width << "x" << config_.height << " step " << step_ << "\n";
  for (int y = 0; y < config_.height; ++y) {
    for (int x = 0; x < config_.width; ++x) {
      switch (terrain({x, y})) {
        case Terrain::Empty: out << '.'; break;
        case Terrain::Obstacle: out << '#'; break;
        case Terrain::Goal: out << 'g'; break;
      }
    }
    out << "\n";
  }
  for (const auto& d : dispensers_) out << "dispenser " << d.pos.x << " " << d.pos.y << " " << d.type << "\n";
  for (const auto& a : agents_) {
    out << "agent " << a.name << " " << a.team << " " << a.pos.x << " " << a.pos.y << " " << a.energy << " "
        << a.disabled_until.value_or(-1) << " " << a.charge.target.x << " " << a.charge.target.y << " "
        << a.charge.count << " [" << to_string(a.last_action) << "] " << to_string(a.last_result.outcome)
        << (a.last_result.coerced ? " coerced" : "") << "\n";
  }
  for (const auto& b : blocks_) {
    out << "block " << b.id << " " << b.pos.x << " " << b.pos.y << " " << b.type << " ";
    if (b.holder) out << agents_[*b.holder].name;
    else out << "-";
    out << "\n";
  }
  for (const auto& t : tasks_) {
    out << "task " << t.name << " " << t.announced_step << " " << t.deadline << " " << t.reward;
    for (const auto& r : t.pattern) out << " " << r.offset.x << "," << r.offset.y << ":" << r.type;
    out << "\n";
  }
  for (const auto& [team, s] : scores_) out << "score " << team << " " << s << "\n";
  out << "counters " << next_block_id_ << " " << next_task_id_ << "\n";
  return out.str();
}

std::uint64_t World::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : serialize()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void World::check_invariants() const {
  std::vector<int> count(terrain_.size(), 0);
  for (const auto& a : agents_) {
    if (!in_bounds(a.pos)) throw std::logic_error("agent out of bounds: " + a.name);
    if (terrain(a.pos) == Terrain::Obstacle) throw std::logic_error("agent on obstacle: " + a.name);
    if (a.energy < 0 || a.energy > config_.max_energy) throw std::logic_error("energy out of range: " + a.name);
    ++count[index(a.pos)];
  }
  for (const auto& b : blocks_) {
    if (!in_bounds(b.pos)) throw std::logic_error("block out of bounds");
    if (terrain(b.pos) == Terrain::Obstacle) throw std::logic_error("block on obstacle");
    ++count[index(b.pos)];
  }
  for (std::size_t i = 0; i < count.size(); ++i)
    if (count[i] > 1)
      throw std::logic_error("cell holds two occupants at " +
                             to_string(Vec2{static_cast<int>(i % config_.width), static_cast<int>(i / config_.width)}));
  for (const auto& d : dispensers_)
    if (terrain(d.pos) != Terrain::Empty) throw std::logic_error("dispenser overlaps obstacle or goal");
}

}  // namespace assemble
