#include "assemble/identification.hpp"

#include <algorithm>

namespace assemble {

ThingReport make_report(const Percept& p) { return {p.name, p.team, p.step, p.things}; }

std::vector<Vec2> unknown_teammates(const Percept& p, const std::vector<Vec2>& known) {
  std::vector<Vec2> out;
  for (const auto& t : p.things) {
    if (t.type != ThingType::Entity || t.detail != p.team || t.pos == Vec2{}) continue;
    if (std::find(known.begin(), known.end(), t.pos) == known.end()) out.push_back(t.pos);
  }
  return out;
}

std::vector<std::string> filter_candidates(const ThingReport& mine, Vec2 sighting,
                                           const std::vector<ThingReport>& replies, int vision) {
  std::vector<std::string> out;
  for (const auto& reply : replies) {
    if (reply.step != mine.step || reply.sender == mine.sender) continue;
    const bool sees_me = std::any_of(reply.things.begin(), reply.things.end(), [&](const Thing& t) {
      return t.type == ThingType::Entity && t.detail == mine.team && t.pos == -sighting;
    });
    if (!sees_me) continue;
    bool consistent = true;
    for (const auto& t : reply.things) {
      const Vec2 mapped = sighting + t.pos;
      if (manhattan(mapped) > vision) continue;
      const Thing expected{mapped, t.type, t.detail};
      if (!std::binary_search(mine.things.begin(), mine.things.end(), expected)) {
        consistent = false;
        break;
      }
    }
    if (consistent) out.push_back(reply.sender);
  }
  return out;
}

IdentificationResult identify(const ThingReport& mine, Vec2 sighting, const std::vector<ThingReport>& replies,
                              int vision) {
  IdentificationResult r;
  r.candidates = filter_candidates(mine, sighting, replies, vision);
  if (r.candidates.size() == 1) r.verdict = Verdict::Identified;
  else if (r.candidates.empty()) r.verdict = Verdict::Inconsistent;
  else r.verdict = Verdict::Ambiguous;
  return r;
}

IdentificationLedger::Record IdentificationLedger::record(const std::string& name, Sighting s) {
  for (const auto& [other, seen] : identified_)
    if (other != name && seen == s) {
      diagnostics_.push_back(name + " claims the sighting already assigned to " + other);
      return Record::Conflict;
    }
  auto it = identified_.find(name);
  if (it == identified_.end()) {
    identified_.emplace(name, s);
    return Record::Added;
  }
  if (it->second.step == s.step && it->second.rel != s.rel) {
    diagnostics_.push_back(name + " identified at two positions in step " + std::to_string(s.step));
    return Record::Conflict;
  }
  return Record::Known;
}

}  // namespace assemble
