#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "dsr/rigid_motion.hpp"
#include "dsr/scene.hpp"
#include "dsr/tsdf.hpp"

namespace dsr {

/// Pinhole camera, OpenCV axes (x right, y down, z forward). Pixel (u, v)
/// has its center at integer coordinates.
struct CameraModel {
  double fx = 600.0, fy = 600.0, cx = 319.5, cy = 239.5;
  int width = 640, height = 480;
  SE3Transform world_from_camera;

  /// Camera at eye looking at target with world +z up.
  static CameraModel look_at(const Vec3& eye, const Vec3& target, int width, int height,
                             double fx, double fy);
  /// Front-view camera 0.55 m in front of and above the workspace center,
  /// looking down at 45 degrees; sees the whole workspace.
  static CameraModel benchmark();

  void validate() const;
};

/// Depth along the optical axis in meters; 0 where a ray hits nothing.
struct DepthImage {
  int width = 0, height = 0;
  std::vector<float> depth;

  float at(int u, int v) const { return depth[static_cast<std::size_t>(v) * width + u]; }
};

/// Ray parameter along a ray whose direction has unit camera-z component, so
/// the parameter is the depth.
std::optional<double> intersect_ray(const RigidObject& obj, const Vec3& origin, const Vec3& dir);

/// Nearest analytic intersection with the objects or the table plane z = 0.
DepthImage render_depth(const SceneState& scene, const CameraModel& cam);

/// Projects each voxel center into the depth image: sd = depth - voxel depth,
/// value = clamp(sd / truncation, -1, 1). Voxels outside the image, without a
/// depth return, or more than truncation behind the surface are unknown; the
/// latter carry value -1.
TsdfVolume fuse_tsdf(const DepthImage& depth, const CameraModel& cam, const GridSpec& spec,
                     double truncation);

// Depth file: "DSRDEP", u16 version, u32 width, u32 height (little-endian),
// then width*height f32 depths row by row.
inline constexpr std::uint16_t kDepthFormatVersion = 1;
void write_depth(const std::filesystem::path& path, const DepthImage& d);
DepthImage read_depth(const std::filesystem::path& path);

void to_json(nlohmann::json& j, const CameraModel& c);
void from_json(const nlohmann::json& j, CameraModel& c);

}  // namespace dsr
