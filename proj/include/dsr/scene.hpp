#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "dsr/footprint.hpp"
#include "dsr/masks.hpp"
#include "dsr/rigid_motion.hpp"
#include "dsr/voxel_grid.hpp"

namespace dsr {

enum class ShapeKind { Box, Cylinder, Sphere };

/// Primitive solid centered on its body origin. Boxes use all three extents,
/// cylinders are vertical with diameter extents.x and height extents.z,
/// spheres have diameter extents.x.
struct Shape {
  ShapeKind kind = ShapeKind::Box;
  Vec3 extents = Vec3::Constant(0.03);

  static Shape box(double ex, double ey, double ez);
  static Shape cylinder(double radius, double height);
  static Shape sphere(double radius);

  double height() const;
  double radius() const { return 0.5 * extents.x(); }
  /// Point in body coordinates inside the closed solid.
  bool contains_local(const Vec3& p) const;
  /// Solid volume in m^3.
  double volume() const;
};

/// Upright object resting on the table; pose maps body to world and only ever
/// carries a yaw rotation.
struct RigidObject {
  int id = 0;
  Shape shape;
  SE3Transform pose;

  Vec2 position() const { return pose.translation.head<2>(); }
  double yaw() const { return pose.euler.z(); }
  Footprint footprint() const;
  bool contains(const Vec3& world) const;
  /// World-space axis aligned bounds {min, max}.
  std::pair<Vec3, Vec3> bounds() const;
};

struct SceneState {
  std::vector<RigidObject> objects;
  /// Objects stay within [-half_extent, half_extent]^2 around the origin.
  double half_extent = 0.256;
};

struct DropConfig {
  double min_extent = 0.025;
  double max_extent = 0.06;
  /// Object centers are first sampled within this distance of the center.
  double placement_radius = 0.15;
  /// Relative frequencies of box, cylinder and sphere.
  double box_weight = 0.5;
  double cylinder_weight = 0.3;
  double sphere_weight = 0.2;
  /// Identical-style cubes with edge in [cube_min, cube_max].
  bool cubes_only = false;
  double cube_min = 0.02;
  double cube_max = 0.04;
  double clearance = 0.015;
  int max_attempts = 1000;
  double half_extent = 0.256;
};

/// Samples shapes and poses, then separates overlapping footprints
/// horizontally. Deterministic in seed; throws PlacementFailure after
/// max_attempts resamples.
SceneState drop_objects(std::uint64_t seed, int n_objects, const DropConfig& cfg = {});

/// Largest footprint penetration depth between any two objects (0 if none).
double max_interpenetration(const SceneState& scene);

/// Shifts an object so its footprint lies inside the workspace.
void clamp_to_workspace(RigidObject& obj, double half_extent);

/// Object i of the scene is channel i; voxels whose center lies in no solid
/// are background (k-1). Throws TooManyObjects when objects exceed k-1.
std::vector<std::uint8_t> gt_labels(const SceneState& scene, const GridSpec& spec, int k);
InstanceMaskVolume gt_masks(const SceneState& scene, const GridSpec& spec, int k);

void to_json(nlohmann::json& j, const Shape& s);
void from_json(const nlohmann::json& j, Shape& s);
void to_json(nlohmann::json& j, const RigidObject& o);
void from_json(const nlohmann::json& j, RigidObject& o);
void to_json(nlohmann::json& j, const DropConfig& c);
void from_json(const nlohmann::json& j, DropConfig& c);

}  // namespace dsr
