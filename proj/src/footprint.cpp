#include "dsr/footprint.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dsr {
namespace {

Eigen::Matrix2d rot2(double yaw) {
  Eigen::Matrix2d r;
  r << std::cos(yaw), -std::sin(yaw), std::sin(yaw), std::cos(yaw);
  return r;
}

std::optional<Contact> circle_circle(const Footprint& a, const Footprint& b) {
  const Vec2 d = b.center - a.center;
  const double dist = d.norm();
  const double depth = a.radius + b.radius - dist;
  if (depth <= 0.0) return std::nullopt;
  const Vec2 n = dist > 0.0 ? Vec2(d / dist) : Vec2(1.0, 0.0);
  return Contact{n, depth, a.center + n * (a.radius - 0.5 * depth)};
}

// Circle a against rectangle b; the normal moves b away from a.
std::optional<Contact> circle_rect(const Footprint& a, const Footprint& b) {
  const Eigen::Matrix2d r = rot2(b.yaw);
  const Vec2 local = r.transpose() * (a.center - b.center);
  const Vec2 h = b.half_extents;
  const Vec2 clamped(std::clamp(local.x(), -h.x(), h.x()), std::clamp(local.y(), -h.y(), h.y()));
  if (std::abs(local.x()) <= h.x() && std::abs(local.y()) <= h.y()) {
    const double dx = h.x() - std::abs(local.x());
    const double dy = h.y() - std::abs(local.y());
    Vec2 face_normal, on_face = local;
    double to_face;
    if (dx <= dy) {
      face_normal = Vec2(local.x() >= 0.0 ? 1.0 : -1.0, 0.0);
      on_face.x() = face_normal.x() * h.x();
      to_face = dx;
    } else {
      face_normal = Vec2(0.0, local.y() >= 0.0 ? 1.0 : -1.0);
      on_face.y() = face_normal.y() * h.y();
      to_face = dy;
    }
    return Contact{-(r * face_normal), a.radius + to_face, b.center + r * on_face};
  }
  const Vec2 diff = local - clamped;
  const double dist = diff.norm();
  if (dist >= a.radius) return std::nullopt;
  return Contact{r * (-diff / dist), a.radius - dist, b.center + r * clamped};
}

std::optional<Contact> rect_rect(const Footprint& a, const Footprint& b) {
  const auto ca = a.corners();
  const auto cb = b.corners();
  const std::array<Vec2, 4> axes = {rot2(a.yaw).col(0), rot2(a.yaw).col(1), rot2(b.yaw).col(0),
                                    rot2(b.yaw).col(1)};
  double best = std::numeric_limits<double>::infinity();
  Vec2 normal = Vec2::UnitX();
  for (const Vec2& u : axes) {
    double min_a = std::numeric_limits<double>::infinity(), max_a = -min_a;
    double min_b = min_a, max_b = -min_a;
    for (const Vec2& p : ca) {
      min_a = std::min(min_a, p.dot(u));
      max_a = std::max(max_a, p.dot(u));
    }
    for (const Vec2& p : cb) {
      min_b = std::min(min_b, p.dot(u));
      max_b = std::max(max_b, p.dot(u));
    }
    const double forward = max_a - min_b;
    const double backward = max_b - min_a;
    if (forward <= 0.0 || backward <= 0.0) return std::nullopt;
    if (forward < best) {
      best = forward;
      normal = u;
    }
    if (backward < best) {
      best = backward;
      normal = -u;
    }
  }
  Vec2 point = 0.5 * (a.center + b.center);
  const auto deepest_b = std::min_element(cb.begin(), cb.end(), [&](const Vec2& p, const Vec2& q) {
    return p.dot(normal) < q.dot(normal);
  });
  const auto deepest_a = std::max_element(ca.begin(), ca.end(), [&](const Vec2& p, const Vec2& q) {
    return p.dot(normal) < q.dot(normal);
  });
  if (a.contains(*deepest_b)) {
    point = *deepest_b;
  } else if (b.contains(*deepest_a)) {
    point = *deepest_a;
  }
  return Contact{normal, best, point};
}

}  // namespace

Footprint Footprint::circle(const Vec2& c, double r) {
  Footprint f;
  f.kind = Kind::Circle;
  f.center = c;
  f.radius = r;
  return f;
}

Footprint Footprint::rect(const Vec2& c, const Vec2& half, double yaw) {
  Footprint f;
  f.kind = Kind::Rect;
  f.center = c;
  f.half_extents = half;
  f.yaw = yaw;
  return f;
}

std::array<Vec2, 4> Footprint::corners() const {
  const Eigen::Matrix2d r = rot2(yaw);
  const Vec2 h = half_extents;
  return {center + r * Vec2(-h.x(), -h.y()), center + r * Vec2(h.x(), -h.y()),
          center + r * Vec2(h.x(), h.y()), center + r * Vec2(-h.x(), h.y())};
}

double Footprint::circumradius() const {
  return kind == Kind::Circle ? radius : half_extents.norm();
}

double Footprint::support(const Vec2& dir) const {
  if (kind == Kind::Circle) return radius;
  double s = -std::numeric_limits<double>::infinity();
  for (const Vec2& c : corners()) s = std::max(s, (c - center).dot(dir));
  return s;
}

bool Footprint::contains(const Vec2& q) const {
  if (kind == Kind::Circle) return (q - center).squaredNorm() <= radius * radius;
  const Vec2 local = rot2(yaw).transpose() * (q - center);
  return std::abs(local.x()) <= half_extents.x() + 1e-12 &&
         std::abs(local.y()) <= half_extents.y() + 1e-12;
}

std::array<double, 4> Footprint::bounds() const {
  const double ex = support(Vec2::UnitX());
  const double ey = support(Vec2::UnitY());
  return {center.x() - ex, center.y() - ey, center.x() + ex, center.y() + ey};
}

std::optional<Contact> penetration(const Footprint& a, const Footprint& b) {
  using K = Footprint::Kind;
  if (a.kind == K::Circle && b.kind == K::Circle) return circle_circle(a, b);
  if (a.kind == K::Circle) return circle_rect(a, b);
  if (b.kind == K::Circle) {
    auto c = circle_rect(b, a);
    if (c) c->normal = -c->normal;
    return c;
  }
  return rect_rect(a, b);
}

}  // namespace dsr
