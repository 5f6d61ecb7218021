#include "dsr/rigid_motion.hpp"

#include <cmath>

#include <Eigen/Geometry>

#include "dsr/error.hpp"

namespace dsr {
namespace {

Mat3 rot_x(double a) {
  Mat3 r;
  r << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
  return r;
}
Mat3 rot_y(double a) {
  Mat3 r;
  r << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
  return r;
}
Mat3 rot_z(double a) {
  Mat3 r;
  r << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return r;
}
Mat3 drot_x(double a) {
  Mat3 r;
  r << 0, 0, 0, 0, -std::sin(a), -std::cos(a), 0, std::cos(a), -std::sin(a);
  return r;
}
Mat3 drot_y(double a) {
  Mat3 r;
  r << -std::sin(a), 0, std::cos(a), 0, 0, 0, -std::cos(a), 0, -std::sin(a);
  return r;
}
Mat3 drot_z(double a) {
  Mat3 r;
  r << -std::sin(a), -std::cos(a), 0, std::cos(a), -std::sin(a), 0, 0, 0, 0;
  return r;
}

}  // namespace

Mat3 euler_xyz_rotation(const Vec3& e) {
  if (e.isZero(0.0)) return Mat3::Identity();
  return rot_x(e.x()) * rot_y(e.y()) * rot_z(e.z());
}

Mat3 euler_xyz_rotation_derivative(const Vec3& e, int axis) {
  switch (axis) {
    case 0: return drot_x(e.x()) * rot_y(e.y()) * rot_z(e.z());
    case 1: return rot_x(e.x()) * drot_y(e.y()) * rot_z(e.z());
    case 2: return rot_x(e.x()) * rot_y(e.y()) * drot_z(e.z());
    default: throw Error(ErrorCode::InvalidArgument, "euler axis must be 0, 1 or 2");
  }
}

SE3Transform SE3Transform::from_matrix(const Mat3& r, const Vec3& t) {
  SE3Transform out;
  out.translation = t;
  if (!r.isIdentity(0.0)) out.euler = r.eulerAngles(0, 1, 2);
  return out;
}

Mat3 SE3Transform::rotation() const { return euler_xyz_rotation(euler); }

SE3Transform SE3Transform::operator*(const SE3Transform& b) const {
  const Mat3 ra = rotation();
  return from_matrix(ra * b.rotation(), ra * b.translation + translation);
}

SE3Transform SE3Transform::inverse() const {
  const Mat3 rt = rotation().transpose();
  return from_matrix(rt, -(rt * translation));
}

Vec3 apply_se3(const SE3Transform& t, const Vec3& x) { return t.rotation() * x + t.translation; }

TransformSet::TransformSet(std::vector<SE3Transform> transforms)
    : transforms_(std::move(transforms)) {
  if (transforms_.empty()) throw Error(ErrorCode::InvalidArgument, "transform set is empty");
  for (const auto& t : transforms_) {
    if (!t.euler.allFinite() || !t.translation.allFinite()) {
      throw Error(ErrorCode::InvalidArgument, "transform set: non-finite component");
    }
  }
  if (!transforms_.back().is_identity()) {
    throw Error(ErrorCode::InvalidArgument, "transform set: background transform must be identity");
  }
}

TransformSet TransformSet::identity(int k) {
  return TransformSet(std::vector<SE3Transform>(static_cast<std::size_t>(k)));
}

void TransformSet::set(int i, const SE3Transform& t) {
  if (i < 0 || i + 1 >= size()) {
    throw Error(ErrorCode::InvalidArgument, "transform set: slot is background or out of range");
  }
  transforms_[static_cast<std::size_t>(i)] = t;
}

BlendedFlowField::BlendedFlowField(const TransformSet& transforms) {
  for (const auto& t : transforms.transforms()) {
    linear_.push_back(t.euler.isZero(0.0) ? Mat3::Zero() : Mat3(t.rotation() - Mat3::Identity()));
    offset_.push_back(t.translation);
  }
}

Vec3 BlendedFlowField::at(std::span<const double> weights, const Vec3& x) const {
  Vec3 f = Vec3::Zero();
  for (std::size_t i = 0; i < linear_.size(); ++i) {
    const double w = weights[i];
    if (w == 0.0) continue;
    f += w * (linear_[i] * x + offset_[i]);
  }
  return f;
}

VectorVolume blended_flow(const InstanceMaskVolume& masks, const TransformSet& transforms) {
  require_same_channels(masks.k, transforms.size(), "blended_flow");
  const BlendedFlowField field(transforms);
  VectorVolume flow(masks.spec);
  for (std::size_t v = 0; v < masks.voxel_count(); ++v) {
    flow.values[v] = field.at(masks.at(v), voxel_center(masks.spec, v));
  }
  return flow;
}

Vec3 blended_point_flow(std::span<const double> weights, const TransformSet& transforms,
                        const Vec3& x) {
  require_same_channels(static_cast<int>(weights.size()), transforms.size(), "blended_point_flow");
  return BlendedFlowField(transforms).at(weights, x);
}

Eigen::Matrix<double, 3, Eigen::Dynamic> flow_jacobian(std::span<const double> weights,
                                                       const TransformSet& transforms,
                                                       const Vec3& x) {
  require_same_channels(static_cast<int>(weights.size()), transforms.size(), "flow_jacobian");
  const int k = transforms.size();
  Eigen::Matrix<double, 3, Eigen::Dynamic> jac = Eigen::Matrix<double, 3, Eigen::Dynamic>::Zero(3, 6 * k);
  for (int i = 0; i < k; ++i) {
    const double w = weights[static_cast<std::size_t>(i)];
    for (int axis = 0; axis < 3; ++axis) {
      jac.col(6 * i + axis) = w * (euler_xyz_rotation_derivative(transforms[i].euler, axis) * x);
    }
    jac.block<3, 3>(0, 6 * i + 3) = w * Mat3::Identity();
  }
  return jac;
}

double motion_loss(const VectorVolume& predicted, const VectorVolume& truth) {
  require_same_grid(predicted.spec, truth.spec, "motion_loss");
  double sum = 0.0;
  for (std::size_t v = 0; v < predicted.values.size(); ++v) {
    sum += (predicted.values[v] - truth.values[v]).squaredNorm();
  }
  return sum / (3.0 * static_cast<double>(predicted.values.size()));
}

void to_json(nlohmann::json& j, const SE3Transform& t) {
  j = nlohmann::json{{"euler", {t.euler.x(), t.euler.y(), t.euler.z()}},
                     {"translation", {t.translation.x(), t.translation.y(), t.translation.z()}}};
}

void from_json(const nlohmann::json& j, SE3Transform& t) {
  const auto e = j.at("euler").get<std::vector<double>>();
  const auto tr = j.at("translation").get<std::vector<double>>();
  if (e.size() != 3 || tr.size() != 3) {
    throw Error(ErrorCode::InvalidArgument, "transform json needs 3-element arrays");
  }
  t.euler = Vec3(e[0], e[1], e[2]);
  t.translation = Vec3(tr[0], tr[1], tr[2]);
}

void to_json(nlohmann::json& j, const TransformSet& t) { j = t.transforms(); }

void from_json(const nlohmann::json& j, TransformSet& t) {
  t = TransformSet(j.get<std::vector<SE3Transform>>());
}

}  // namespace dsr
