#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dsr/episode.hpp"
#include "dsr/error.hpp"
#include "dsr/json_io.hpp"
#include "dsr/policy.hpp"
#include "dsr/pushing.hpp"
#include "dsr/scene.hpp"
#include "support.hpp"

using namespace dsr;

namespace {

RigidObject box_at(int id, double x, double y, double edge) {
  RigidObject o;
  o.id = id;
  o.shape = Shape::box(edge, edge, edge);
  o.pose.translation = Vec3(x, y, 0.5 * edge);
  return o;
}

EpisodeConfig short_config(int steps) {
  EpisodeConfig cfg;
  cfg.n_steps = steps;
  return cfg;
}

}  // namespace

TEST_CASE("drops are deterministic, separated and inside the workspace") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const SceneState a = drop_objects(seed, 4);
    const SceneState b = drop_objects(seed, 4);
    REQUIRE(a.objects.size() == 4);
    CHECK(max_interpenetration(a) == 0.0);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(a.objects[i].pose == b.objects[i].pose);
      const auto bounds = a.objects[i].footprint().bounds();
      CHECK(bounds[0] >= -a.half_extent - 1e-12);
      CHECK(bounds[2] <= a.half_extent + 1e-12);
      CHECK(a.objects[i].pose.translation.z() == doctest::Approx(0.5 * a.objects[i].shape.height()));
    }
  }
  DropConfig crowded;
  crowded.min_extent = crowded.max_extent = 0.2;
  crowded.half_extent = 0.1;
  crowded.max_attempts = 3;
  CHECK(testing::error_code([&] { drop_objects(1, 4, crowded); }) == ErrorCode::PlacementFailure);
}

TEST_CASE("a grid-aligned cube covers exactly its voxel count") {
  const GridSpec g = GridSpec::benchmark();
  SceneState scene;
  scene.objects = {box_at(0, 0.0, 0.0, 0.04)};
  const auto labels = gt_labels(scene, g, 5);
  std::size_t count = 0;
  for (auto l : labels) count += l == 0;
  CHECK(count == 1000);
  const auto masks = gt_masks(scene, g, 5);
  CHECK(masks.channel_mass()[0] == 1000.0);
  scene.objects.resize(5, scene.objects[0]);
  CHECK(testing::error_code([&] { gt_labels(scene, g, 5); }) == ErrorCode::TooManyObjects);
}

TEST_CASE("action lattice geometry") {
  CHECK(action_position({0, 0, 0}).x() == doctest::Approx(-0.254));
  CHECK(action_position({127, 127, 0}).y() == doctest::Approx(0.254));
  for (int px : {0, 17, 64, 127}) {
    const auto c = action_cell(action_position({px, 3, 0}));
    CHECK(c[0] == px);
    CHECK(c[1] == 3);
  }
  CHECK(action_cell(Vec2(5.0, -5.0)) == std::array<int, 2>{127, 0});
  CHECK((push_direction(2) - Vec2(0, 1)).norm() < 1e-15);
  CHECK((push_direction(5) - Vec2(-1, -1).normalized()).norm() < 1e-15);
  CHECK(testing::error_code([] { validate_action({128, 0, 0}); }) == ErrorCode::ActionOutOfGrid);
  CHECK(testing::error_code([] { validate_action({0, 0, 8}); }) == ErrorCode::ActionOutOfGrid);
  const RawVolume map = action_map({5, 6, 3});
  std::size_t ones = 0;
  for (auto v : map.u8) ones += v;
  CHECK(ones == 1);
  CHECK(map.u8[map.spec.index(5, 6, 0) * 8 + 3] == 1);
}

TEST_CASE("a centered head-on push carries the box to the end of the stroke") {
  const PushAction a{action_cell(Vec2(-0.06, 0.0))[0], 64, 0};
  const Vec2 start = action_position(a);
  SceneState scene;
  scene.objects = {box_at(0, 0.0, start.y(), 0.04)};
  const SimConfig sim;
  const PushResult r = step_push(scene, a, 5, sim);
  const double want_x = start.x() + sim.stroke + sim.pusher_radius + 0.02;
  CHECK(r.scene.objects[0].pose.translation.x() == doctest::Approx(want_x).epsilon(1e-9));
  CHECK(r.scene.objects[0].pose.translation.y() == start.y());
  CHECK(r.scene.objects[0].yaw() == 0.0);
  CHECK(r.touched[0]);
  const Vec3 moved = apply_se3(r.transforms[0], scene.objects[0].pose.translation);
  CHECK((moved - r.scene.objects[0].pose.translation).norm() < 1e-12);
}

TEST_CASE("head-on and off-center pushes agree with a finer re-simulation") {
  SimConfig fine;
  fine.substeps = 1200;
  const PushAction a{action_cell(Vec2(-0.06, 0.0))[0], 64, 0};
  const Vec2 start = action_position(a);
  SceneState centered;
  centered.objects = {box_at(0, 0.0, start.y(), 0.04)};
  const PushResult coarse = step_push(centered, a, 5);
  const PushResult dense = step_push(centered, a, 5, fine);
  CHECK(std::abs(coarse.scene.objects[0].yaw()) < 1e-6);
  CHECK((coarse.scene.objects[0].position() - dense.scene.objects[0].position()).norm() < 1e-4);
  CHECK(coarse.scene.objects[0].position().y() == doctest::Approx(start.y()).epsilon(1e-12));

  for (double offset : {0.012, -0.012}) {
    SceneState off;
    off.objects = {box_at(0, 0.0, start.y() - offset, 0.04)};
    const PushResult c = step_push(off, a, 5);
    const PushResult f = step_push(off, a, 5, fine);
    // Contact sits at +offset from the centroid in y; a +x push then turns by -offset.
    const double lever_sign = offset > 0 ? -1.0 : 1.0;
    CHECK(c.scene.objects[0].yaw() * lever_sign > 0.0);
    CHECK(f.scene.objects[0].yaw() * lever_sign > 0.0);
  }
}

TEST_CASE("a push that misses leaves every object and transform exactly unchanged") {
  SceneState scene;
  scene.objects = {box_at(0, 0.1, 0.1, 0.03), box_at(1, -0.1, 0.1, 0.03)};
  const PushResult r = step_push(scene, {10, 10, 0}, 5);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK_FALSE(r.touched[i]);
    CHECK(r.scene.objects[i].pose == scene.objects[i].pose);
  }
  CHECK(r.transforms == TransformSet::identity(5));
}

TEST_CASE("pushes propagate through contacting objects") {
  const PushAction a{action_cell(Vec2(-0.1, 0.0))[0], 64, 0};
  const double y = action_position(a).y();
  SceneState scene;
  scene.objects = {box_at(0, -0.04, y, 0.03), box_at(1, 0.0, y, 0.03)};
  const PushResult r = step_push(scene, a, 5);
  CHECK(r.touched[0]);
  CHECK(r.touched[1]);
  CHECK(r.scene.objects[1].pose.translation.x() > 0.05);
  CHECK(max_interpenetration(r.scene) < 1e-3);
}

TEST_CASE("the simulation converges under ten times finer substeps") {
  SimConfig fine;
  fine.substeps = 1200;
  double worst_pos = 0.0, worst_yaw = 0.0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    SceneState scene = drop_objects(seed, 4);
    PolicyState ps = PolicyState::start(scene);
    CounterRng rng(seed, 1);
    const PushAction a = interaction_policy(scene, ps, rng);
    const PushResult coarse = step_push(scene, a, 5);
    const PushResult dense = step_push(scene, a, 5, fine);
    for (std::size_t i = 0; i < scene.objects.size(); ++i) {
      CHECK(coarse.touched[i] == dense.touched[i]);
      worst_pos = std::max(worst_pos, (coarse.scene.objects[i].position() -
                                       dense.scene.objects[i].position()).norm());
      worst_yaw = std::max(worst_yaw, std::abs(std::remainder(
                                          coarse.scene.objects[i].yaw() - dense.scene.objects[i].yaw(),
                                          2 * std::numbers::pi)));
    }
  }
  MESSAGE("max position gap " << worst_pos << " m, max yaw gap " << worst_yaw << " rad");
  CHECK(worst_pos < 0.005);
  CHECK(worst_yaw < 0.05);
}

TEST_CASE("object scores cycle through the policy's wrap") {
  CHECK(bump_score(0) == 1);
  CHECK(bump_score(1) == 2);
  CHECK(bump_score(2) == -2);
  CHECK(bump_score(-2) == -1);
  SceneState scene;
  scene.objects = {box_at(0, 0.0, 0.0, 0.03)};
  PolicyState ps = PolicyState::start(scene);
  CounterRng rng(4, 1);
  std::vector<int> trace{ps.scores[0]};
  for (int i = 0; i < 3; ++i) {
    interaction_policy(scene, ps, rng);
    trace.push_back(ps.scores[0]);
  }
  CHECK(trace == std::vector<int>{0, 1, 2, -2});
}

TEST_CASE("direction scores follow displacement from start and previous positions") {
  SceneState scene;
  scene.objects = {box_at(0, 0.05, 0.0, 0.03)};
  PolicyState ps = PolicyState::start(scene);
  ps.initial[0] = Vec2(0.0, 0.0);
  ps.previous[0] = Vec2(0.05, -0.05);
  const auto q = direction_scores(scene, ps, 0);
  for (int d = 0; d < 8; ++d) {
    const double a = d * std::numbers::pi / 4;
    CHECK(q[d] == doctest::Approx(1.5 * std::cos(a) + 2.0 * std::sin(a)));
  }
  scene.objects[0].pose.translation.x() = 0.21;
  const auto far = direction_scores(scene, ps, 0);
  const Vec2 p(0.21, 0.0);
  const Vec2 from_start = p.normalized();
  const Vec2 from_previous = (p - ps.previous[0]).normalized();
  for (int d = 0; d < 8; ++d) {
    const Vec2 v(std::cos(d * std::numbers::pi / 4), std::sin(d * std::numbers::pi / 4));
    const double want = 1.5 * v.dot(from_start) + 2.0 * v.dot(from_previous) + (v.dot(p) > 0 ? -10.0 : 0.0);
    CHECK(far[d] == doctest::Approx(want));
  }
}

TEST_CASE("policy pushes start behind the chosen object") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SceneState scene = drop_objects(seed, 4);
    PolicyState ps = PolicyState::start(scene);
    CounterRng rng(seed, 1);
    const PushAction a = interaction_policy(scene, ps, rng);
    const Vec2 p = action_position(a);
    const Vec2 v = push_direction(a.d);
    double best = 1e9;
    for (const auto& o : scene.objects) {
      const Vec2 rel = o.position() - p;
      const double lateral = std::abs(rel.x() * v.y() - rel.y() * v.x());
      if (rel.dot(v) > 0) best = std::min(best, lateral);
    }
    CHECK(best < 0.006);
  }
}

TEST_CASE("episodes are deterministic and their ground truth is self-consistent") {
  const EpisodeConfig cfg = short_config(3);
  const Episode a = generate_episode(9, cfg);
  const Episode b = generate_episode(9, cfg);
  REQUIRE(a.steps.size() == 3);
  for (std::size_t t = 0; t < 3; ++t) {
    CHECK(a.steps[t].action == b.steps[t].action);
    CHECK(a.steps[t].gt_labels == b.steps[t].gt_labels);
    CHECK(a.steps[t].tsdf.values == b.steps[t].tsdf.values);
    const VectorVolume flow = a.gt_flow(t);
    const VectorVolume want = blended_flow(a.gt_masks(t), a.steps[t].transforms);
    CHECK(flow.values == want.values);
    const SceneState& next = t + 1 < 3 ? a.steps[t + 1].scene : a.final_scene;
    for (std::size_t i = 0; i < next.objects.size(); ++i) {
      const SE3Transform moved = a.steps[t].transforms[static_cast<int>(i)] * a.steps[t].scene.objects[i].pose;
      CHECK((moved.translation - next.objects[i].pose.translation).norm() < 1e-6);
      CHECK((moved.rotation() - next.objects[i].pose.rotation()).norm() < 1e-6);
    }
  }
  CHECK(testing::error_code([] {
          EpisodeConfig bad;
          bad.n_objects = 5;
          generate_episode(1, bad);
        }) == ErrorCode::TooManyObjects);
}

TEST_CASE("episodes round-trip through their directory format") {
  testing::TempDir tmp("episode_io");
  const Episode ep = generate_episode(3, short_config(2));
  write_episode(tmp.path / "ep", ep);
  for (const char* f : {"meta.json", "depth_00.bin", "tsdf_01.vol", "action_00.json",
                        "gt_masks_01.vol", "gt_transforms_00.json", "gt_flow_01.vol",
                        "action_map_00.vol"}) {
    CHECK(std::filesystem::exists(tmp.path / "ep" / f));
  }
  const Episode back = read_episode(tmp.path / "ep");
  REQUIRE(back.steps.size() == 2);
  CHECK(back.seed == 3);
  CHECK(back.config.k == ep.config.k);
  for (std::size_t t = 0; t < 2; ++t) {
    CHECK(back.steps[t].action == ep.steps[t].action);
    CHECK(back.steps[t].gt_labels == ep.steps[t].gt_labels);
    CHECK(back.steps[t].tsdf.values == ep.steps[t].tsdf.values);
    CHECK(back.steps[t].transforms == ep.steps[t].transforms);
    CHECK(back.steps[t].touched == ep.steps[t].touched);
    const VectorVolume stored = read_gt_flow(tmp.path / "ep", t);
    const VectorVolume fresh = ep.gt_flow(t);
    for (std::size_t v = 0; v < fresh.values.size(); ++v) {
      CHECK((stored.values[v] - fresh.values[v]).norm() < 1e-6);
    }
  }
  for (std::size_t i = 0; i < ep.final_scene.objects.size(); ++i) {
    CHECK(back.final_scene.objects[i].pose == ep.final_scene.objects[i].pose);
  }

  nlohmann::json meta = read_json(tmp.path / "ep" / "meta.json");
  meta["schema_version"] = 2;
  write_json(tmp.path / "ep" / "meta.json", meta);
  CHECK(testing::error_code([&] { read_episode(tmp.path / "ep"); }) == ErrorCode::SchemaVersion);
}
