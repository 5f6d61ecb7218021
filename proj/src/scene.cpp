#include "dsr/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dsr/error.hpp"
#include "dsr/rng.hpp"

namespace dsr {

Shape Shape::box(double ex, double ey, double ez) { return {ShapeKind::Box, Vec3(ex, ey, ez)}; }
Shape Shape::cylinder(double radius, double height) {
  return {ShapeKind::Cylinder, Vec3(2 * radius, 2 * radius, height)};
}
Shape Shape::sphere(double radius) { return {ShapeKind::Sphere, Vec3::Constant(2 * radius)}; }

double Shape::height() const { return extents.z(); }

bool Shape::contains_local(const Vec3& p) const {
  switch (kind) {
    case ShapeKind::Box:
      return std::abs(p.x()) <= 0.5 * extents.x() && std::abs(p.y()) <= 0.5 * extents.y() &&
             std::abs(p.z()) <= 0.5 * extents.z();
    case ShapeKind::Cylinder:
      return p.head<2>().squaredNorm() <= radius() * radius() && std::abs(p.z()) <= 0.5 * extents.z();
    case ShapeKind::Sphere:
      return p.squaredNorm() <= radius() * radius();
  }
  return false;
}

double Shape::volume() const {
  switch (kind) {
    case ShapeKind::Box: return extents.prod();
    case ShapeKind::Cylinder: return std::numbers::pi * radius() * radius() * extents.z();
    case ShapeKind::Sphere: return 4.0 / 3.0 * std::numbers::pi * std::pow(radius(), 3);
  }
  return 0.0;
}

Footprint RigidObject::footprint() const {
  if (shape.kind == ShapeKind::Box) {
    return Footprint::rect(position(), 0.5 * shape.extents.head<2>(), yaw());
  }
  return Footprint::circle(position(), shape.radius());
}

bool RigidObject::contains(const Vec3& world) const {
  const Vec3 local = pose.rotation().transpose() * (world - pose.translation);
  return shape.contains_local(local);
}

std::pair<Vec3, Vec3> RigidObject::bounds() const {
  const auto b = footprint().bounds();
  const double hz = 0.5 * shape.height();
  return {Vec3(b[0], b[1], pose.translation.z() - hz), Vec3(b[2], b[3], pose.translation.z() + hz)};
}

void clamp_to_workspace(RigidObject& obj, double half_extent) {
  const auto b = obj.footprint().bounds();
  Vec3& t = obj.pose.translation;
  if (b[0] < -half_extent) t.x() += -half_extent - b[0];
  if (b[2] > half_extent) t.x() -= b[2] - half_extent;
  if (b[1] < -half_extent) t.y() += -half_extent - b[1];
  if (b[3] > half_extent) t.y() -= b[3] - half_extent;
}

namespace {

Footprint inflated(const Footprint& f, double margin) {
  Footprint g = f;
  g.radius += margin;
  g.half_extents += Vec2::Constant(margin);
  return g;
}

Shape sample_shape(CounterRng& rng, const DropConfig& cfg) {
  if (cfg.cubes_only) {
    const double s = rng.uniform(cfg.cube_min, cfg.cube_max);
    return Shape::box(s, s, s);
  }
  const double total = cfg.box_weight + cfg.cylinder_weight + cfg.sphere_weight;
  const double u = rng.uniform() * total;
  const auto extent = [&] { return rng.uniform(cfg.min_extent, cfg.max_extent); };
  if (u < cfg.box_weight) {
    const double ex = extent(), ey = extent(), ez = extent();
    return Shape::box(ex, ey, ez);
  }
  if (u < cfg.box_weight + cfg.cylinder_weight) {
    const double d = extent(), h = extent();
    return Shape::cylinder(0.5 * d, h);
  }
  return Shape::sphere(0.5 * extent());
}

bool separate(SceneState& scene, const DropConfig& cfg) {
  auto& objs = scene.objects;
  for (int iter = 0; iter < 200; ++iter) {
    bool overlapping = false;
    for (std::size_t i = 0; i < objs.size(); ++i) {
      for (std::size_t j = i + 1; j < objs.size(); ++j) {
        const auto c = penetration(inflated(objs[i].footprint(), 0.5 * cfg.clearance),
                                   inflated(objs[j].footprint(), 0.5 * cfg.clearance));
        if (!c) continue;
        overlapping = true;
        const Vec2 shift = c->normal * (0.5 * c->depth + 1e-5);
        objs[i].pose.translation.head<2>() -= shift;
        objs[j].pose.translation.head<2>() += shift;
        clamp_to_workspace(objs[i], scene.half_extent);
        clamp_to_workspace(objs[j], scene.half_extent);
      }
    }
    if (!overlapping) return true;
  }
  return false;
}

}  // namespace

SceneState drop_objects(std::uint64_t seed, int n_objects, const DropConfig& cfg) {
  if (n_objects < 1) throw Error(ErrorCode::InvalidArgument, "drop_objects needs n >= 1");
  CounterRng rng(seed, 0);
  for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    SceneState scene;
    scene.half_extent = cfg.half_extent;
    for (int i = 0; i < n_objects; ++i) {
      RigidObject obj;
      obj.id = i;
      obj.shape = sample_shape(rng, cfg);
      const double r = cfg.placement_radius * std::sqrt(rng.uniform());
      const double theta = rng.uniform(-std::numbers::pi, std::numbers::pi);
      const double yaw = obj.shape.kind == ShapeKind::Box ? rng.uniform(-std::numbers::pi, std::numbers::pi) : 0.0;
      obj.pose.translation = Vec3(r * std::cos(theta), r * std::sin(theta), 0.5 * obj.shape.height());
      obj.pose.euler = Vec3(0.0, 0.0, yaw);
      clamp_to_workspace(obj, scene.half_extent);
      scene.objects.push_back(obj);
    }
    if (separate(scene, cfg) && max_interpenetration(scene) <= 0.0) return scene;
  }
  throw Error(ErrorCode::PlacementFailure,
              "drop_objects: no overlap-free placement after " + std::to_string(cfg.max_attempts) +
                  " attempts");
}

double max_interpenetration(const SceneState& scene) {
  double worst = 0.0;
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    for (std::size_t j = i + 1; j < scene.objects.size(); ++j) {
      if (auto c = penetration(scene.objects[i].footprint(), scene.objects[j].footprint())) {
        worst = std::max(worst, c->depth);
      }
    }
  }
  return worst;
}

std::vector<std::uint8_t> gt_labels(const SceneState& scene, const GridSpec& spec, int k) {
  if (static_cast<int>(scene.objects.size()) > k - 1) {
    throw Error(ErrorCode::TooManyObjects, "gt_labels: " + std::to_string(scene.objects.size()) +
                                               " objects for k = " + std::to_string(k));
  }
  const auto bg = static_cast<std::uint8_t>(k - 1);
  std::vector<std::uint8_t> labels(spec.voxel_count(), bg);
  for (std::size_t o = 0; o < scene.objects.size(); ++o) {
    const auto& obj = scene.objects[o];
    const auto [lo_w, hi_w] = obj.bounds();
    const Vec3 lo = world_to_voxel(spec, lo_w).array().ceil();
    const Vec3 hi = world_to_voxel(spec, hi_w).array().floor();
    const int x0 = std::max(0, static_cast<int>(lo.x())), x1 = std::min(spec.dims[0] - 1, static_cast<int>(hi.x()));
    const int y0 = std::max(0, static_cast<int>(lo.y())), y1 = std::min(spec.dims[1] - 1, static_cast<int>(hi.y()));
    const int z0 = std::max(0, static_cast<int>(lo.z())), z1 = std::min(spec.dims[2] - 1, static_cast<int>(hi.z()));
    const Mat3 rt = obj.pose.rotation().transpose();
    for (int x = x0; x <= x1; ++x) {
      for (int y = y0; y <= y1; ++y) {
        for (int z = z0; z <= z1; ++z) {
          const std::size_t idx = spec.index(x, y, z);
          if (labels[idx] != bg) continue;
          const Vec3 local = rt * (voxel_to_world(spec, Vec3(x, y, z)) - obj.pose.translation);
          if (obj.shape.contains_local(local)) {
            labels[idx] = static_cast<std::uint8_t>(o);
          }
        }
      }
    }
  }
  return labels;
}

InstanceMaskVolume gt_masks(const SceneState& scene, const GridSpec& spec, int k) {
  return InstanceMaskVolume::from_labels(spec, k, gt_labels(scene, spec, k));
}

namespace {
const char* shape_name(ShapeKind k) {
  switch (k) {
    case ShapeKind::Box: return "box";
    case ShapeKind::Cylinder: return "cylinder";
    case ShapeKind::Sphere: return "sphere";
  }
  return "box";
}
}  // namespace

void to_json(nlohmann::json& j, const Shape& s) {
  j = nlohmann::json{{"type", shape_name(s.kind)},
                     {"extents", {s.extents.x(), s.extents.y(), s.extents.z()}}};
}

void from_json(const nlohmann::json& j, Shape& s) {
  const auto type = j.at("type").get<std::string>();
  if (type == "box") {
    s.kind = ShapeKind::Box;
  } else if (type == "cylinder") {
    s.kind = ShapeKind::Cylinder;
  } else if (type == "sphere") {
    s.kind = ShapeKind::Sphere;
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown shape type " + type);
  }
  const auto e = j.at("extents").get<std::vector<double>>();
  if (e.size() != 3) throw Error(ErrorCode::InvalidArgument, "shape extents need 3 values");
  s.extents = Vec3(e[0], e[1], e[2]);
}

void to_json(nlohmann::json& j, const RigidObject& o) {
  j = nlohmann::json{{"id", o.id}, {"shape", o.shape}, {"pose", o.pose}};
}

void from_json(const nlohmann::json& j, RigidObject& o) {
  o.id = j.at("id").get<int>();
  o.shape = j.at("shape").get<Shape>();
  o.pose = j.at("pose").get<SE3Transform>();
}

void to_json(nlohmann::json& j, const DropConfig& c) {
  j = nlohmann::json{{"min_extent", c.min_extent},         {"max_extent", c.max_extent},
                     {"placement_radius", c.placement_radius}, {"box_weight", c.box_weight},
                     {"cylinder_weight", c.cylinder_weight}, {"sphere_weight", c.sphere_weight},
                     {"cubes_only", c.cubes_only},         {"cube_min", c.cube_min},
                     {"cube_max", c.cube_max},             {"clearance", c.clearance},
                     {"max_attempts", c.max_attempts},     {"half_extent", c.half_extent}};
}

void from_json(const nlohmann::json& j, DropConfig& c) {
  DropConfig d;
  c.min_extent = j.value("min_extent", d.min_extent);
  c.max_extent = j.value("max_extent", d.max_extent);
  c.placement_radius = j.value("placement_radius", d.placement_radius);
  c.box_weight = j.value("box_weight", d.box_weight);
  c.cylinder_weight = j.value("cylinder_weight", d.cylinder_weight);
  c.sphere_weight = j.value("sphere_weight", d.sphere_weight);
  c.cubes_only = j.value("cubes_only", d.cubes_only);
  c.cube_min = j.value("cube_min", d.cube_min);
  c.cube_max = j.value("cube_max", d.cube_max);
  c.clearance = j.value("clearance", d.clearance);
  c.max_attempts = j.value("max_attempts", d.max_attempts);
  c.half_extent = j.value("half_extent", d.half_extent);
}

}  // namespace dsr
