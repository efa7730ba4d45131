#pragma once

#include <map>
#include <string>
#include <vector>

#include "assemble/world.hpp"

namespace assemble {

/// Everything one agent sees in one step, in its own frame (itself included
/// as an entity at 0,0).
struct ThingReport {
  std::string sender;
  std::string team;
  int step = 0;
  std::vector<Thing> things;
};

ThingReport make_report(const Percept& p);

/// Query broadcast when unknown teammates show up in vision.
struct IdentificationQuery {
  std::string asker;
  int step = 0;
  std::vector<Vec2> sightings;
};

/// Same-team entities in vision that are not explained by `known` relative
/// positions (teammates whose whereabouts are already known).
std::vector<Vec2> unknown_teammates(const Percept& p, const std::vector<Vec2>& known);

/// Reply filter for a sighting of a teammate at (X,Y). A reply survives when
/// it reports my team at (-X,-Y) and every reported thing that falls inside
/// my vision after translation by (X,Y) is present in my own report with the
/// same type and detail. Replies from another step or from myself are ignored.
std::vector<std::string> filter_candidates(const ThingReport& mine, Vec2 sighting,
                                           const std::vector<ThingReport>& replies, int vision = 5);

enum class Verdict : std::uint8_t { Identified, Ambiguous, Inconsistent };

struct IdentificationResult {
  Verdict verdict = Verdict::Inconsistent;
  std::vector<std::string> candidates;
};

IdentificationResult identify(const ThingReport& mine, Vec2 sighting, const std::vector<ThingReport>& replies,
                              int vision = 5);

struct Sighting {
  int step = 0;
  Vec2 rel;
  auto operator<=>(const Sighting&) const = default;
};

/// Per-agent record of who has been identified and where.
class IdentificationLedger {
 public:
  enum class Record : std::uint8_t { Added, Known, Conflict };

  Record record(const std::string& name, Sighting s);
  bool knows(const std::string& name) const { return identified_.count(name) > 0; }
  std::size_t size() const { return identified_.size(); }
  const std::map<std::string, Sighting>& identified() const { return identified_; }

  void add_pending(Sighting s) { pending_.push_back(s); }
  void clear_pending() { pending_.clear(); }
  const std::vector<Sighting>& pending() const { return pending_; }
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }

 private:
  std::map<std::string, Sighting> identified_;
  std::vector<Sighting> pending_;
  std::vector<std::string> diagnostics_;
};

}  // namespace assemble
