#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "dsr/error.hpp"
#include "dsr/planner.hpp"
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

SceneState two_cubes() {
  SceneState s;
  s.objects = {box_at(0, -0.06, 0.0, 0.04), box_at(1, 0.07, 0.03, 0.04)};
  return s;
}

struct BruteChannel {
  Vec3 centroid = Vec3::Zero();
  std::vector<std::size_t> voxels;
};

BruteChannel brute_channel(const std::vector<std::uint8_t>& labels, const GridSpec& g, int c) {
  BruteChannel b;
  for (std::size_t v = 0; v < labels.size(); ++v) {
    if (labels[v] != c) continue;
    b.voxels.push_back(v);
    b.centroid += voxel_center(g, v);
  }
  b.centroid /= static_cast<double>(b.voxels.size());
  return b;
}

}  // namespace

TEST_CASE("rollout cost matches brute-force centroids and overlaps") {
  const EpisodeConfig env;
  SceneState pred_scene = two_cubes();
  pred_scene.objects[0].pose.translation.x() += 0.013;
  pred_scene.objects[1].pose.euler.z() = 0.4;
  const auto pred = gt_labels(pred_scene, env.grid, 5);
  const auto target = gt_labels(two_cubes(), env.grid, 5);
  PlannerConfig cfg;
  cfg.lambda = {2.0, 0.5};
  double want = 0.0;
  for (int c = 0; c < 2; ++c) {
    const auto a = brute_channel(pred, env.grid, c);
    const auto b = brute_channel(target, env.grid, c);
    std::size_t inter = 0;
    for (auto v : a.voxels) inter += std::binary_search(b.voxels.begin(), b.voxels.end(), v);
    const double iou = static_cast<double>(inter) / static_cast<double>(a.voxels.size() + b.voxels.size() - inter);
    want += cfg.lambda_for(c) * (a.centroid - b.centroid).squaredNorm() - iou;
  }
  const double got = rollout_cost(InstanceMaskVolume::from_labels(env.grid, 5, pred),
                                  InstanceMaskVolume::from_labels(env.grid, 5, target), cfg);
  CHECK(got == doctest::Approx(want).epsilon(1e-12));
  const auto t = InstanceMaskVolume::from_labels(env.grid, 5, target);
  CHECK(rollout_cost(t, t, PlannerConfig{}) == doctest::Approx(-2.0));
  CHECK(testing::error_code([&] { rollout_cost(t, InstanceMaskVolume(env.grid, 4), PlannerConfig{}); }) ==
        ErrorCode::ChannelMismatch);
}

TEST_CASE("rollout cost falls as a mask slides toward its target") {
  const EpisodeConfig env;
  SceneState target;
  target.objects = {box_at(0, 0.048, 0.02, 0.04)};
  const auto goal = gt_masks(target, env.grid, 5);
  double previous = 1e9;
  for (int n = 15; n >= 0; --n) {
    SceneState s;
    s.objects = {box_at(0, 0.048 - 0.004 * n, 0.02 - 0.004 * n, 0.04)};
    const double c = rollout_cost(gt_masks(s, env.grid, 5), goal, PlannerConfig{});
    CHECK(c < previous);
    previous = c;
  }
  CHECK(previous == doctest::Approx(-1.0));
}

TEST_CASE("kinematic prediction of a head-on push matches the simulator") {
  const EpisodeConfig env;
  const PushAction a{action_cell(Vec2(-0.07, 0.0))[0], 64, 0};
  SceneState scene;
  scene.objects = {box_at(0, 0.0, action_position(a).y(), 0.04)};
  const auto masks = SparseMaskSet::from_dense(gt_masks(scene, env.grid, 5));
  KinematicPredictor kin(env.sim);
  const TransformSet t = kin.predict_transforms(masks, a);
  const PushResult sim = step_push(scene, a, 5, env.sim);
  CHECK(t[0].translation.x() == doctest::Approx(sim.transforms[0].translation.x()).epsilon(1e-9));
  CHECK(t[0].translation.y() == 0.0);
  CHECK(t[0].euler == Vec3::Zero());
  for (int c = 1; c < 5; ++c) CHECK(t[c].is_identity());
  const TransformSet away = kin.predict_transforms(masks, {a.px, a.py, 4});
  CHECK(away[0].is_identity());
}

TEST_CASE("oracle prediction follows channels to their objects") {
  const EpisodeConfig env;
  const SceneState scene = two_cubes();
  auto labels = gt_labels(scene, env.grid, 5);
  for (auto& l : labels) l = l == 0 ? 2 : l == 1 ? 0 : l;
  const auto masks = SparseMaskSet::from_dense(InstanceMaskVolume::from_labels(env.grid, 5, labels));
  const PushAction a{action_cell(Vec2(-0.12, 0.0))[0], 64, 0};
  OraclePredictor oracle(scene, env.sim);
  const TransformSet t = oracle.predict_transforms(masks, a);
  const PushResult sim = step_push(scene, a, 5, env.sim);
  CHECK(t[2] == sim.transforms[0]);
  CHECK(t[0] == sim.transforms[1]);
  CHECK(t[1].is_identity());
  CHECK(oracle.scene().objects[0].pose == sim.scene.objects[0].pose);
}

TEST_CASE("sampled actions start near object cells") {
  const EpisodeConfig env;
  const auto masks = SparseMaskSet::from_dense(gt_masks(two_cubes(), env.grid, 5));
  const auto cells = channel_cells(masks);
  CHECK(cells[0].size() == 100);
  CHECK(cells[2].empty());
  PlannerConfig cfg;
  cfg.n_samples = 300;
  CounterRng rng(5, 2);
  const auto actions = sample_actions(masks, cfg, rng);
  REQUIRE(actions.size() == 300);
  std::array<int, 8> dirs{};
  for (const auto& a : actions) {
    ++dirs[static_cast<std::size_t>(a.d)];
    int best = 1 << 30;
    for (const auto& ch : cells)
      for (const auto& c : ch) best = std::min(best, (a.px - c[0]) * (a.px - c[0]) + (a.py - c[1]) * (a.py - c[1]));
    CHECK(best <= cfg.sampling_radius * cfg.sampling_radius);
  }
  for (int n : dirs) CHECK(n > 0);
  CHECK(testing::error_code([&] {
          CounterRng r(1);
          sample_actions(SparseMaskSet::from_dense(InstanceMaskVolume(env.grid, 5)), cfg, r);
        }) == ErrorCode::NoObjects);
}

TEST_CASE("an occluded object still draws samples in aggregated modes only") {
  const EpisodeConfig env;
  FusionConfig fusion;
  SceneState before;
  before.objects = {box_at(0, 0.0, 0.0, 0.03)};
  SceneState after = before;
  RigidObject wall = box_at(1, 0.0, -0.06, 0.1);
  wall.shape = Shape::box(0.1, 0.03, 0.1);
  after.objects.push_back(wall);
  const auto obs0 = observe(before, env).tsdf;
  const auto obs1 = observe(after, env).tsdf;
  const DsrState s0 = aggregate(nullptr, nullptr, &obs0, AggregationMode::Dsr, fusion);
  const DsrState dsr = step(s0, s0.masks, TransformSet::identity(env.k), &obs1, AggregationMode::Dsr, fusion);
  const DsrState single = aggregate(nullptr, nullptr, &obs1, AggregationMode::SingleStep, fusion);
  PlannerConfig cfg;
  cfg.n_samples = 200;
  // Starts north of the cube are out of the wall's sampling reach.
  auto north = [&](const DsrState& s) {
    int n = 0;
    for (const auto& a : sample_actions(s, cfg)) n += action_position(a).y() > 0.02;
    return n;
  };
  CHECK(north(dsr) > 5);
  CHECK(north(single) == 0);
}

TEST_CASE("target alignment recovers a channel relabeling") {
  const EpisodeConfig env;
  SceneState three = two_cubes();
  three.objects.push_back(box_at(2, 0.0, -0.1, 0.03));
  const auto state = ChannelSet::from_dense(gt_masks(three, env.grid, 5));
  auto labels = gt_labels(three, env.grid, 5);
  for (auto& l : labels) l = l == 0 ? 3 : l == 1 ? 0 : l == 2 ? 1 : l;
  const auto target = ChannelSet::from_dense(InstanceMaskVolume::from_labels(env.grid, 5, labels));
  const ChannelPermutation p = align_target(state, target, PlannerConfig{});
  CHECK(p(0) == 3);
  CHECK(p(1) == 0);
  CHECK(p(2) == 1);
  CHECK(rollout_cost(state, target.reordered(p), PlannerConfig{}) == doctest::Approx(-3.0));

  SceneState far = three;
  far.objects.resize(1);
  SceneState moved = far;
  moved.objects[0].pose.translation.x() += 0.2;
  const ChannelPermutation q = align_target(ChannelSet::from_dense(gt_masks(far, env.grid, 5)),
                                            ChannelSet::from_dense(gt_masks(moved, env.grid, 5)),
                                            PlannerConfig{});
  CHECK(q(0) == 0);
}

TEST_CASE("plan returns the cheapest re-evaluable candidate") {
  const EpisodeConfig env;
  const SceneState scene = two_cubes();
  SceneState goal_scene = scene;
  goal_scene.objects[0].pose.translation.x() += 0.05;
  const auto target = gt_masks(goal_scene, env.grid, 5);
  DsrState state = DsrState::empty(env.grid, 5);
  state.masks = gt_masks(scene, env.grid, 5);
  PlannerConfig cfg;
  cfg.n_samples = 12;
  cfg.horizon = 2;
  cfg.seed = 3;
  for (auto kind : {PredictorKind::Kinematic, PredictorKind::Oracle}) {
    const auto model = make_predictor(kind, scene, env.sim);
    const PlanResult r = plan(state, target, *model, cfg);
    REQUIRE(r.candidate_costs.size() == 12);
    CHECK(r.cost == *std::min_element(r.candidate_costs.begin(), r.candidate_costs.end()));
    const auto first = std::find(r.candidate_costs.begin(), r.candidate_costs.end(), r.cost);
    CHECK(r.actions == r.candidates[static_cast<std::size_t>(first - r.candidate_costs.begin())]);
    for (std::size_t i = 0; i < r.candidates.size(); ++i) {
      CHECK(evaluate_sequence(state, target, *model, r.candidates[i], cfg) == r.candidate_costs[i]);
    }
    const PlanResult again = plan(state, target, *model, cfg);
    CHECK(again.actions == r.actions);
    CHECK(again.candidate_costs == r.candidate_costs);
  }
}

TEST_CASE("one-step planning toward an eastward target pushes east through the box") {
  const EpisodeConfig env;
  SceneState scene;
  scene.objects = {box_at(0, -0.06, 0.0, 0.04)};
  const PushAction east{action_cell(Vec2(-0.11, 0.0))[0], 64, 0};
  const auto target = gt_masks(step_push(scene, east, 5, env.sim).scene, env.grid, 5);
  DsrState state = DsrState::empty(env.grid, 5);
  state.masks = gt_masks(scene, env.grid, 5);
  PlannerConfig cfg;
  cfg.horizon = 1;
  OraclePredictor oracle(scene, env.sim);
  const PlanResult r = plan(state, target, oracle, cfg);
  REQUIRE(r.actions.size() == 1);
  const PushAction a = r.actions[0];
  CHECK(push_direction(a.d).x() > 0.9);
  const Vec2 p = action_position(a);
  CHECK(p.x() < -0.08);
  CHECK(std::abs(p.y()) < 0.02 + env.sim.pusher_radius);
  for (std::size_t i = 0; i < r.candidates.size(); ++i) {
    CHECK(r.cost <= evaluate_sequence(state, target, oracle, r.candidates[i], cfg));
  }
}

TEST_CASE("a target equal to the current scene is already achieved") {
  ExecutionConfig exec;
  const SceneState scene = two_cubes();
  const auto target = gt_masks(scene, exec.env.grid, exec.env.k);
  PlannerConfig cfg;
  cfg.n_samples = 10;
  for (bool replan : {false, true}) {
    exec.replan = replan;
    const ExecutionResult r = execute_plan(scene, target, cfg, exec);
    CHECK(r.initial_iou == 1.0);
    CHECK(r.final_iou == 1.0);
  }
  CHECK(achieved_iou(scene, target, exec.env) == 1.0);
  CHECK(execute_actions(scene, {}, exec.env).objects[1].pose == scene.objects[1].pose);
}

TEST_CASE("planner config validation and serialization") {
  PlannerConfig cfg;
  cfg.lambda = {1.0, 3.0};
  cfg.seed = 77;
  const nlohmann::json j = cfg;
  const auto back = j.get<PlannerConfig>();
  CHECK(back.lambda == cfg.lambda);
  CHECK(back.seed == 77);
  CHECK(back.lambda_for(1) == 3.0);
  CHECK(back.lambda_for(3) == 1.0);
  cfg.horizon = 0;
  CHECK(testing::error_code([&] { cfg.validate(); }) == ErrorCode::InvalidArgument);
  cfg.horizon = 1;
  cfg.lambda = {-1.0};
  CHECK(testing::error_code([&] { cfg.validate(); }) == ErrorCode::InvalidArgument);
  CHECK(testing::error_code([] { parse_predictor("learned"); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("random actions cover the whole lattice") {
  CounterRng rng(9, 4);
  const auto actions = random_actions(rng, 2000);
  int lo = 0, hi = 0;
  for (const auto& a : actions) {
    validate_action(a);
    lo += a.px < 32;
    hi += a.px >= 96;
  }
  CHECK(lo > 350);
  CHECK(hi > 350);
}
