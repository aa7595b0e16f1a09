#pragma once

#include <cmath>
#include <vector>

namespace regen {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double k) const { return {x * k, y * k}; }
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }
inline Vec2 unit_from_heading(double heading) { return {std::cos(heading), std::sin(heading)}; }

// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double kPi = 3.14159265358979323846;
  while (a > kPi) a -= 2 * kPi;
  while (a <= -kPi) a += 2 * kPi;
  return a;
}

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // rad, counter-clockwise from +x
  Vec2 position() const { return {x, y}; }
  friend bool operator==(const Pose&, const Pose&) = default;
};

// Even-odd rule; points on the boundary may land either way.
inline bool point_in_polygon(Vec2 p, const std::vector<Vec2>& poly) {
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y > p.y) != (b.y > p.y) &&
        p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) {
      inside = !inside;
    }
  }
  return inside;
}

// Cumulative arc length at each polyline vertex.
inline std::vector<double> arc_lengths(const std::vector<Vec2>& pts) {
  std::vector<double> s(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i) s[i] = s[i - 1] + distance(pts[i - 1], pts[i]);
  return s;
}

struct Projection {
  double s = 0.0;        // arc length of the foot point
  double lateral = 0.0;  // signed, positive to the left
  double distance = 0.0;
  Vec2 point;
  std::size_t segment = 0;
};

// Projection of p onto the polyline restricted to segments [first, last).
inline Projection project_onto(const std::vector<Vec2>& pts, const std::vector<double>& s, Vec2 p,
                               std::size_t first = 0, std::size_t last = static_cast<std::size_t>(-1)) {
  Projection best;
  best.distance = INFINITY;
  if (pts.size() < 2) {
    if (!pts.empty()) best = {0.0, 0.0, distance(pts[0], p), pts[0], 0};
    return best;
  }
  if (last > pts.size() - 1) last = pts.size() - 1;
  for (std::size_t i = first; i < last; ++i) {
    Vec2 a = pts[i];
    Vec2 d = pts[i + 1] - a;
    double len2 = dot(d, d);
    double t = len2 > 0 ? dot(p - a, d) / len2 : 0.0;
    t = t < 0 ? 0 : (t > 1 ? 1 : t);
    Vec2 foot = a + d * t;
    double dist = distance(foot, p);
    if (dist < best.distance) {
      double len = std::sqrt(len2);
      best.distance = dist;
      best.point = foot;
      best.s = s[i] + t * len;
      best.lateral = len > 0 ? cross(d * (1.0 / len), p - a) : 0.0;
      best.segment = i;
    }
  }
  return best;
}

// Point and tangent heading at arc length `at`, clamped to the ends.
inline Pose pose_at(const std::vector<Vec2>& pts, const std::vector<double>& s, double at) {
  if (pts.size() == 1) return {pts[0].x, pts[0].y, 0.0};
  std::size_t i = 0;
  while (i + 2 < pts.size() && s[i + 1] < at) ++i;
  Vec2 d = pts[i + 1] - pts[i];
  double len = s[i + 1] - s[i];
  double t = len > 0 ? (at - s[i]) / len : 0.0;
  t = t < 0 ? 0 : (t > 1 ? 1 : t);
  Vec2 p = pts[i] + d * t;
  return {p.x, p.y, std::atan2(d.y, d.x)};
}

}  // namespace regen
