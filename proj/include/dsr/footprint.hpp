#pragma once

#include <array>
#include <optional>

#include <Eigen/Core>

namespace dsr {

using Vec2 = Eigen::Vector2d;

/// Horizontal cross-section of an upright object: an oriented rectangle or a
/// circle.
struct Footprint {
  enum class Kind { Rect, Circle };

  Kind kind = Kind::Circle;
  Vec2 center = Vec2::Zero();
  double radius = 0.0;
  Vec2 half_extents = Vec2::Zero();
  double yaw = 0.0;

  static Footprint circle(const Vec2& c, double r);
  static Footprint rect(const Vec2& c, const Vec2& half, double yaw);

  /// Counter-clockwise corners of a rectangle.
  std::array<Vec2, 4> corners() const;
  double circumradius() const;
  /// max over the footprint of (q - center) . dir, dir a unit vector.
  double support(const Vec2& dir) const;
  bool contains(const Vec2& q) const;
  /// Axis-aligned bounds {xmin, ymin, xmax, ymax}.
  std::array<double, 4> bounds() const;
};

/// Translating b by normal * depth separates it from a; point is where they
/// touch.
struct Contact {
  Vec2 normal;
  double depth;
  Vec2 point;
};

std::optional<Contact> penetration(const Footprint& a, const Footprint& b);

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

}  // namespace dsr
