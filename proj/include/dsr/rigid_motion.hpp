#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "dsr/masks.hpp"
#include "dsr/voxel_grid.hpp"

namespace dsr {

using Mat3 = Eigen::Matrix3d;

/// Rigid transform x' = R x + t. R = Rx(euler.x) * Ry(euler.y) * Rz(euler.z)
/// (intrinsic X-Y-Z). Points are in the world frame whose origin is the
/// workspace center on the table plane.
struct SE3Transform {
  Vec3 euler = Vec3::Zero();
  Vec3 translation = Vec3::Zero();

  static SE3Transform identity() { return {}; }
  static SE3Transform from_matrix(const Mat3& r, const Vec3& t);

  Mat3 rotation() const;
  bool is_identity() const { return euler.isZero(0.0) && translation.isZero(0.0); }
  /// (a * b)(x) == a(b(x)).
  SE3Transform operator*(const SE3Transform& b) const;
  SE3Transform inverse() const;

  bool operator==(const SE3Transform& o) const {
    return euler == o.euler && translation == o.translation;
  }
};

Mat3 euler_xyz_rotation(const Vec3& euler);
/// d R / d euler[axis].
Mat3 euler_xyz_rotation_derivative(const Vec3& euler, int axis);

Vec3 apply_se3(const SE3Transform& t, const Vec3& x);

/// One transform per mask channel; the last (background) is exactly identity.
class TransformSet {
 public:
  TransformSet() = default;
  explicit TransformSet(std::vector<SE3Transform> transforms);
  static TransformSet identity(int k);

  int size() const { return static_cast<int>(transforms_.size()); }
  const SE3Transform& operator[](int i) const { return transforms_[static_cast<std::size_t>(i)]; }
  /// Throws InvalidArgument for the background slot.
  void set(int i, const SE3Transform& t);
  const std::vector<SE3Transform>& transforms() const { return transforms_; }

  bool operator==(const TransformSet&) const = default;

 private:
  std::vector<SE3Transform> transforms_;
};

/// Per-channel displacement maps x -> (R_i - I) x + t_i, precomputed once.
class BlendedFlowField {
 public:
  explicit BlendedFlowField(const TransformSet& transforms);
  /// sum_i w_i ((R_i - I) x + t_i), channels visited in ascending order.
  Vec3 at(std::span<const double> weights, const Vec3& x) const;
  int channels() const { return static_cast<int>(linear_.size()); }

 private:
  std::vector<Mat3> linear_;
  std::vector<Vec3> offset_;
};

/// Blended scene flow: F(j) = sum_i M_ij (R_i x_j + t_i - x_j), x_j the voxel
/// center in meters. Equal to sum_i M_ij (R_i x_j + t_i) - x_j on the simplex;
/// this form is exactly zero for identity transforms.
VectorVolume blended_flow(const InstanceMaskVolume& masks, const TransformSet& transforms);

/// Flow of a single point under per-channel weights.
Vec3 blended_point_flow(std::span<const double> weights, const TransformSet& transforms,
                        const Vec3& x);

/// 3 x 6k Jacobian of blended_point_flow. Columns 6i..6i+2 are d/d euler_i,
/// 6i+3..6i+5 are d/d translation_i.
Eigen::Matrix<double, 3, Eigen::Dynamic> flow_jacobian(std::span<const double> weights,
                                                       const TransformSet& transforms,
                                                       const Vec3& x);

/// Mean squared error over voxels and components, in m^2 (divides by 3N).
double motion_loss(const VectorVolume& predicted, const VectorVolume& truth);

void to_json(nlohmann::json& j, const SE3Transform& t);
void from_json(const nlohmann::json& j, SE3Transform& t);
void to_json(nlohmann::json& j, const TransformSet& t);
void from_json(const nlohmann::json& j, TransformSet& t);

}  // namespace dsr
