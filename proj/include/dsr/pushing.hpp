#pragma once

#include <vector>

#include <json.hpp>

#include "dsr/rigid_motion.hpp"
#include "dsr/scene.hpp"
#include "dsr/volume_io.hpp"

namespace dsr {

/// Horizontal action lattice: 128x128 cells of 4 mm covering the workspace.
inline constexpr int kActionCells = 128;
inline constexpr int kPushDirections = 8;
inline constexpr double kActionCellSize = 0.004;

/// Push starting at cell (px, py) along planar angle d * 45 degrees.
struct PushAction {
  int px = 0;
  int py = 0;
  int d = 0;

  bool operator==(const PushAction&) const = default;
};

Vec2 push_direction(int d);
/// World position of the center of the action cell.
Vec2 action_position(const PushAction& a);
/// Cell containing a world point, clamped to the lattice.
std::array<int, 2> action_cell(const Vec2& world);
/// Throws ActionOutOfGrid.
void validate_action(const PushAction& a);

struct SimConfig {
  double pusher_radius = 0.01;
  double stroke = 0.12;
  int substeps = 120;
  /// Bound on the accumulated yaw of one object during one push.
  double max_yaw = 0.3;
  /// Bound on object-object separation moves per substep.
  int max_separation_ops = 64;
};

struct PushResult {
  SceneState scene;
  /// Object i of the scene moves by transforms[i]; untouched objects and the
  /// background slot carry exact identities.
  TransformSet transforms;
  /// touched[i]: object i was moved by the pusher or by another object.
  std::vector<bool> touched;
};

/// Quasi-static sweep of a vertical cylindrical pusher. At each substep a
/// penetrated object moves by the minimal horizontal separation and yaws by
/// cross(lever arm, separation) / circumradius^2; moved objects push others
/// the same way. Objects are clamped to the workspace.
/// Throws ActionOutOfGrid, TooManyObjects (more than k-1 objects).
PushResult step_push(const SceneState& scene, const PushAction& a, int k,
                     const SimConfig& cfg = {});

/// One-hot 8-channel u8 action map on a 128x128x1 lattice.
RawVolume action_map(const PushAction& a);

void to_json(nlohmann::json& j, const PushAction& a);
void from_json(const nlohmann::json& j, PushAction& a);
void to_json(nlohmann::json& j, const SimConfig& c);
void from_json(const nlohmann::json& j, SimConfig& c);

}  // namespace dsr
