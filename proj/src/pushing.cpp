#include "dsr/pushing.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>

#include "dsr/error.hpp"

namespace dsr {

Vec2 push_direction(int d) {
  const double angle = d * std::numbers::pi / 4.0;
  return {std::cos(angle), std::sin(angle)};
}

namespace {

constexpr double kActionHalfExtent = 0.5 * kActionCells * kActionCellSize;

}  // namespace

Vec2 action_position(const PushAction& a) {
  return {-kActionHalfExtent + (a.px + 0.5) * kActionCellSize,
          -kActionHalfExtent + (a.py + 0.5) * kActionCellSize};
}

std::array<int, 2> action_cell(const Vec2& world) {
  const auto cell = [](double w) {
    const double c = std::floor((w + kActionHalfExtent) / kActionCellSize);
    return static_cast<int>(std::clamp(c, 0.0, kActionCells - 1.0));
  };
  return {cell(world.x()), cell(world.y())};
}

void validate_action(const PushAction& a) {
  if (a.px < 0 || a.py < 0 || a.px >= kActionCells || a.py >= kActionCells || a.d < 0 ||
      a.d >= kPushDirections) {
    throw Error(ErrorCode::ActionOutOfGrid,
                "push action (" + std::to_string(a.px) + ", " + std::to_string(a.py) + ", " +
                    std::to_string(a.d) + ") is outside the action grid");
  }
}

namespace {

struct Body {
  RigidObject obj;
  double yaw_total = 0.0;
  bool touched = false;
};

// Moves b by the contact separation and yaws it about its center.
void resolve(Body& b, const Contact& c, const SimConfig& cfg, double half_extent) {
  const Footprint fp = b.obj.footprint();
  const Vec2 sep = c.normal * c.depth;
  const double radius = fp.circumradius();
  const double wanted = cross2(c.point - fp.center, sep) / (radius * radius);
  const double next = std::clamp(b.yaw_total + wanted, -cfg.max_yaw, cfg.max_yaw);
  const double dyaw = next - b.yaw_total;
  b.yaw_total = next;
  b.obj.pose.translation.head<2>() += sep;
  if (dyaw != 0.0) {
    b.obj.pose.euler.z() = std::remainder(b.obj.pose.euler.z() + dyaw, 2.0 * std::numbers::pi);
  }
  clamp_to_workspace(b.obj, half_extent);
  b.touched = true;
}

}  // namespace

PushResult step_push(const SceneState& scene, const PushAction& a, int k, const SimConfig& cfg) {
  validate_action(a);
  if (static_cast<int>(scene.objects.size()) > k - 1) {
    throw Error(ErrorCode::TooManyObjects, "step_push: more objects than object channels");
  }
  std::vector<Body> bodies;
  for (const auto& obj : scene.objects) bodies.push_back({obj});

  const Vec2 start = action_position(a);
  const Vec2 dir = push_direction(a.d);
  for (int s = 1; s <= cfg.substeps; ++s) {
    const Footprint pusher =
        Footprint::circle(start + dir * (cfg.stroke * s / cfg.substeps), cfg.pusher_radius);
    std::deque<std::size_t> queue;
    for (std::size_t i = 0; i < bodies.size(); ++i) {
      if (auto c = penetration(pusher, bodies[i].obj.footprint())) {
        resolve(bodies[i], *c, cfg, scene.half_extent);
        queue.push_back(i);
      }
    }
    int ops = 0;
    while (!queue.empty() && ops < cfg.max_separation_ops) {
      const std::size_t i = queue.front();
      queue.pop_front();
      const Footprint fi = bodies[i].obj.footprint();
      for (std::size_t j = 0; j < bodies.size(); ++j) {
        if (j == i) continue;
        if (auto c = penetration(fi, bodies[j].obj.footprint())) {
          resolve(bodies[j], *c, cfg, scene.half_extent);
          queue.push_back(j);
          ++ops;
        }
      }
    }
  }

  PushResult out;
  out.scene.half_extent = scene.half_extent;
  std::vector<SE3Transform> transforms(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < bodies.size(); ++i) {
    const Body& b = bodies[i];
    out.scene.objects.push_back(b.obj);
    out.touched.push_back(b.touched);
    if (!b.touched) {
      out.scene.objects.back() = scene.objects[i];
      continue;
    }
    SE3Transform t;
    t.euler = Vec3(0.0, 0.0, b.yaw_total);
    t.translation = b.obj.pose.translation - t.rotation() * scene.objects[i].pose.translation;
    transforms[i] = t;
  }
  out.transforms = TransformSet(std::move(transforms));
  return out;
}

RawVolume action_map(const PushAction& a) {
  validate_action(a);
  RawVolume raw;
  raw.spec.dims = {kActionCells, kActionCells, 1};
  raw.spec.voxel_size = kActionCellSize;
  raw.spec.origin = Vec3(-kActionHalfExtent, -kActionHalfExtent, 0.0);
  raw.channels = kPushDirections;
  raw.dtype = VolumeDType::UInt8;
  raw.u8.assign(raw.spec.voxel_count() * kPushDirections, 0);
  raw.u8[raw.spec.index(a.px, a.py, 0) * kPushDirections + a.d] = 1;
  return raw;
}

void to_json(nlohmann::json& j, const PushAction& a) {
  j = nlohmann::json{{"px", a.px}, {"py", a.py}, {"d", a.d}};
}

void from_json(const nlohmann::json& j, PushAction& a) {
  a.px = j.at("px").get<int>();
  a.py = j.at("py").get<int>();
  a.d = j.at("d").get<int>();
}

void to_json(nlohmann::json& j, const SimConfig& c) {
  j = nlohmann::json{{"pusher_radius", c.pusher_radius},
                     {"stroke", c.stroke},
                     {"substeps", c.substeps},
                     {"max_yaw", c.max_yaw},
                     {"max_separation_ops", c.max_separation_ops}};
}

void from_json(const nlohmann::json& j, SimConfig& c) {
  c = SimConfig{};
  c.pusher_radius = j.value("pusher_radius", c.pusher_radius);
  c.stroke = j.value("stroke", c.stroke);
  c.substeps = j.value("substeps", c.substeps);
  c.max_yaw = j.value("max_yaw", c.max_yaw);
  c.max_separation_ops = j.value("max_separation_ops", c.max_separation_ops);
}

}  // namespace dsr
