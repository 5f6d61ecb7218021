#include <doctest.h>

#include <Eigen/Geometry>

#include "dsr/error.hpp"
#include "dsr/rigid_motion.hpp"
#include "support.hpp"

using namespace dsr;

namespace {

Vec3 random_vec(CounterRng& rng, double scale) {
  return Vec3(rng.uniform(-scale, scale), rng.uniform(-scale, scale), rng.uniform(-scale, scale));
}

SE3Transform random_se3(CounterRng& rng) {
  return {random_vec(rng, 1.2), random_vec(rng, 0.1)};
}

}  // namespace

TEST_CASE("euler rotation is the intrinsic X-Y-Z product") {
  CounterRng rng(1);
  for (int i = 0; i < 50; ++i) {
    const Vec3 e = random_vec(rng, 3.0);
    const Mat3 want = (Eigen::AngleAxisd(e.x(), Vec3::UnitX()) *
                       Eigen::AngleAxisd(e.y(), Vec3::UnitY()) *
                       Eigen::AngleAxisd(e.z(), Vec3::UnitZ()))
                          .toRotationMatrix();
    CHECK((euler_xyz_rotation(e) - want).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("rotation derivative matches central differences") {
  CounterRng rng(2);
  const double h = 1e-6;
  for (int i = 0; i < 30; ++i) {
    const Vec3 e = random_vec(rng, 3.0);
    for (int axis = 0; axis < 3; ++axis) {
      Vec3 ep = e, em = e;
      ep[axis] += h;
      em[axis] -= h;
      const Mat3 fd = (euler_xyz_rotation(ep) - euler_xyz_rotation(em)) / (2 * h);
      CHECK((euler_xyz_rotation_derivative(e, axis) - fd).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
  CHECK(testing::error_code([] { euler_xyz_rotation_derivative(Vec3::Zero(), 3); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("composition and inverse act on points") {
  CounterRng rng(3);
  for (int i = 0; i < 50; ++i) {
    const SE3Transform a = random_se3(rng), b = random_se3(rng);
    const Vec3 x = random_vec(rng, 0.3);
    CHECK((apply_se3(a * b, x) - apply_se3(a, apply_se3(b, x))).norm() < 1e-12);
    CHECK((apply_se3(a.inverse(), apply_se3(a, x)) - x).norm() < 1e-12);
  }
  CHECK(SE3Transform::from_matrix(Mat3::Identity(), Vec3(1, 2, 3)).euler == Vec3::Zero());
}

TEST_CASE("transform sets pin the background to identity") {
  TransformSet s = TransformSet::identity(4);
  CHECK(s.size() == 4);
  s.set(1, {Vec3(0, 0, 0.2), Vec3(0.01, 0, 0)});
  CHECK_FALSE(s[1].is_identity());
  CHECK(testing::error_code([&] { s.set(3, {}); }) == ErrorCode::InvalidArgument);
  CHECK(testing::error_code([] {
          TransformSet({SE3Transform{}, SE3Transform{Vec3(0, 0, 1), Vec3::Zero()}});
        }) == ErrorCode::InvalidArgument);
}

TEST_CASE("blended flow is exactly zero for identity transforms") {
  CounterRng rng(4);
  const GridSpec g = testing::small_grid();
  const InstanceMaskVolume m = testing::random_masks(g, 5, rng);
  const VectorVolume f = blended_flow(m, TransformSet::identity(5));
  for (const auto& v : f.values) CHECK(v == Vec3::Zero());
}

TEST_CASE("blended flow on one-hot voxels is the channel's rigid displacement") {
  CounterRng rng(5);
  const GridSpec g = testing::small_grid();
  std::vector<std::uint8_t> labels(g.voxel_count());
  for (auto& l : labels) l = static_cast<std::uint8_t>(rng.uniform_int(4));
  const InstanceMaskVolume m = InstanceMaskVolume::from_labels(g, 4, labels);
  const TransformSet ts({random_se3(rng), random_se3(rng), random_se3(rng), SE3Transform{}});
  const VectorVolume f = blended_flow(m, ts);
  for (std::size_t i = 0; i < g.voxel_count(); ++i) {
    const Vec3 x = voxel_center(g, i);
    const SE3Transform& t = ts[labels[i]];
    const Vec3 want = t.rotation() * x + t.translation - x;
    CHECK((f.values[i] - want).norm() < 1e-14);
  }
}

TEST_CASE("blended flow mixes channel displacements by weight") {
  CounterRng rng(6);
  const TransformSet ts({random_se3(rng), random_se3(rng), SE3Transform{}});
  const std::vector<double> w{0.25, 0.5, 0.25};
  const Vec3 x(0.05, -0.02, 0.03);
  Vec3 want = Vec3::Zero();
  for (int i = 0; i < 3; ++i) want += w[i] * (apply_se3(ts[i], x) - x);
  CHECK((blended_point_flow(w, ts, x) - want).norm() < 1e-15);
  CHECK((BlendedFlowField(ts).at(w, x) - want).norm() < 1e-15);
}

TEST_CASE("flow jacobian matches central differences") {
  CounterRng rng(7);
  const double h = 1e-6;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 2 + trial % 4;
    std::vector<SE3Transform> t;
    for (int i = 0; i + 1 < k; ++i) t.push_back(random_se3(rng));
    t.emplace_back();
    std::vector<double> w(k);
    double s = 0.0;
    for (auto& v : w) s += (v = rng.uniform());
    for (auto& v : w) v /= s;
    const Vec3 x = random_vec(rng, 0.25);
    const auto jac = flow_jacobian(w, TransformSet(t), x);
    REQUIRE(jac.cols() == 6 * k);
    for (int i = 0; i + 1 < k; ++i) {
      for (int p = 0; p < 6; ++p) {
        auto tp = t, tm = t;
        (p < 3 ? tp[i].euler[p] : tp[i].translation[p - 3]) += h;
        (p < 3 ? tm[i].euler[p] : tm[i].translation[p - 3]) -= h;
        const Vec3 fd = (blended_point_flow(w, TransformSet(tp), x) -
                         blended_point_flow(w, TransformSet(tm), x)) /
                        (2 * h);
        const Vec3 an = jac.col(6 * i + p);
        worst = std::max(worst, (an - fd).norm() / std::max(1e-3, fd.norm()));
      }
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("motion loss is the per-component mean squared error") {
  const GridSpec g = testing::small_grid(2, 1, 1);
  VectorVolume a(g), b(g);
  a.values[0] = Vec3(1, 2, 3);
  b.values[1] = Vec3(0, 0, 2);
  CHECK(motion_loss(a, b) == doctest::Approx((1.0 + 4.0 + 9.0 + 4.0) / 6.0));
}

TEST_CASE("transforms round-trip through json") {
  CounterRng rng(8);
  const TransformSet ts({random_se3(rng), SE3Transform{}});
  const nlohmann::json j = ts;
  CHECK(j.get<TransformSet>() == ts);
}
