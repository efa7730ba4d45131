#include "assemble/geometry.hpp"

namespace assemble {

std::string to_string(Vec2 v) { return "(" + std::to_string(v.x) + "," + std::to_string(v.y) + ")"; }

std::optional<Dir> dir_of(Vec2 u) {
  for (Dir d : kAllDirs)
    if (unit(d) == u) return d;
  return std::nullopt;
}

char to_char(Dir d) {
  switch (d) {
    case Dir::N: return 'n';
    case Dir::S: return 's';
    case Dir::E: return 'e';
    case Dir::W: return 'w';
  }
  return '?';
}

std::optional<Dir> dir_from_char(char c) {
  switch (c) {
    case 'n': return Dir::N;
    case 's': return Dir::S;
    case 'e': return Dir::E;
    case 'w': return Dir::W;
    default: return std::nullopt;
  }
}

std::string to_string(DirSet s) {
  std::string out = "[";
  s.for_each([&](Dir d) {
    if (out.size() > 1) out += ',';
    out += to_char(d);
  });
  return out + "]";
}

}  // namespace assemble
