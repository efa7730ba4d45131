#pragma once

#include <array>
#include <bitset>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <optional>
#include <string>

namespace assemble {

/// Integer grid vector. Used for absolute cells, map-frame cells and
/// agent-relative offsets alike; y grows southward.
struct Vec2 {
  int x = 0;
  int y = 0;

  constexpr Vec2() = default;
  constexpr Vec2(int x_, int y_) : x(x_), y(y_) {}

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2 operator*(int k) const { return {x * k, y * k}; }
  constexpr Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr Vec2& operator-=(Vec2 o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  constexpr bool operator==(const Vec2&) const = default;
  // Row-major ordering keeps serialized output stable.
  constexpr std::strong_ordering operator<=>(const Vec2& o) const {
    if (auto c = y <=> o.y; c != 0) return c;
    return x <=> o.x;
  }
};

constexpr int manhattan(Vec2 v) { return (v.x < 0 ? -v.x : v.x) + (v.y < 0 ? -v.y : v.y); }
constexpr int manhattan(Vec2 a, Vec2 b) { return manhattan(a - b); }
constexpr int chebyshev(Vec2 a, Vec2 b) {
  const int dx = a.x > b.x ? a.x - b.x : b.x - a.x;
  const int dy = a.y > b.y ? a.y - b.y : b.y - a.y;
  return dx > dy ? dx : dy;
}

std::string to_string(Vec2 v);

enum class Dir : std::uint8_t { N = 0, S = 1, E = 2, W = 3 };

inline constexpr std::array<Dir, 4> kAllDirs{Dir::N, Dir::S, Dir::E, Dir::W};

constexpr Vec2 unit(Dir d) {
  switch (d) {
    case Dir::N: return {0, -1};
    case Dir::S: return {0, 1};
    case Dir::E: return {1, 0};
    case Dir::W: return {-1, 0};
  }
  return {};
}

constexpr Dir opposite(Dir d) {
  switch (d) {
    case Dir::N: return Dir::S;
    case Dir::S: return Dir::N;
    case Dir::E: return Dir::W;
    case Dir::W: return Dir::E;
  }
  return d;
}

/// Clockwise neighbour: the "relative right" of an agent facing `d`.
constexpr Dir right_of(Dir d) {
  switch (d) {
    case Dir::N: return Dir::E;
    case Dir::E: return Dir::S;
    case Dir::S: return Dir::W;
    case Dir::W: return Dir::N;
  }
  return d;
}

constexpr Dir left_of(Dir d) { return opposite(right_of(d)); }

constexpr bool is_vertical(Dir d) { return d == Dir::N || d == Dir::S; }

std::optional<Dir> dir_of(Vec2 unit_offset);
char to_char(Dir d);
std::optional<Dir> dir_from_char(char c);

enum class Rotation : std::uint8_t { CW, CCW };

/// Quarter turn about the origin in the y-down frame: east -> south under CW.
constexpr Vec2 rotate(Vec2 v, Rotation r) {
  return r == Rotation::CW ? Vec2{-v.y, v.x} : Vec2{v.y, -v.x};
}

/// Small set of directions with a stable iteration order (N, S, E, W).
class DirSet {
 public:
  constexpr DirSet() = default;
  static DirSet all() {
    DirSet s;
    s.bits_.set();
    return s;
  }
  void insert(Dir d) { bits_.set(static_cast<std::size_t>(d)); }
  void erase(Dir d) { bits_.reset(static_cast<std::size_t>(d)); }
  bool contains(Dir d) const { return bits_.test(static_cast<std::size_t>(d)); }
  bool empty() const { return bits_.none(); }
  std::size_t size() const { return bits_.count(); }
  bool operator==(const DirSet&) const = default;

  template <typename F>
  void for_each(F&& f) const {
    for (Dir d : kAllDirs)
      if (contains(d)) f(d);
  }

 private:
  std::bitset<4> bits_;
};

std::string to_string(DirSet s);

}  // namespace assemble

template <>
struct std::hash<assemble::Vec2> {
  std::size_t operator()(const assemble::Vec2& v) const noexcept {
    return std::hash<long long>{}((static_cast<long long>(v.x) << 32) ^ static_cast<unsigned>(v.y));
  }
};
