#include "dsr/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "dsr/error.hpp"
#include "dsr/matching.hpp"
#include "dsr/metrics.hpp"

namespace dsr {

Prediction MotionPredictor::predict(const DsrState& state, const PushAction& a) {
  Prediction p;
  p.transforms = predict_transforms(SparseMaskSet::from_dense(state.masks), a);
  p.masks = forward_warp(state.masks, blended_flow(state.masks, p.transforms), state.masks);
  return p;
}

OraclePredictor::OraclePredictor(SceneState scene, const SimConfig& sim)
    : scene_(std::move(scene)), sim_(sim) {}

std::unique_ptr<MotionPredictor> OraclePredictor::clone() const {
  return std::make_unique<OraclePredictor>(*this);
}

TransformSet OraclePredictor::predict_transforms(const SparseMaskSet& masks, const PushAction& a) {
  const int k = masks.k;
  const auto n_obj = static_cast<int>(scene_.objects.size());
  if (n_obj > k - 1) throw Error(ErrorCode::TooManyObjects, "OraclePredictor: too many objects");
  CostMatrix overlap = CostMatrix::Zero(k, k);
  for (std::size_t i = 0; i < masks.size(); ++i) {
    const int c = masks.label(i);
    if (c == k - 1) continue;
    const Vec3 x = voxel_center(masks.spec, masks.voxels[i]);
    for (int o = 0; o < n_obj; ++o) {
      if (scene_.objects[static_cast<std::size_t>(o)].contains(x)) overlap(c, o) -= 1.0;
    }
  }
  const ChannelPermutation to_object = optimal_matching(overlap);
  PushResult pushed = step_push(scene_, a, k, sim_);
  std::vector<SE3Transform> out(static_cast<std::size_t>(k));
  for (int c = 0; c < k - 1; ++c) {
    const int o = to_object(c);
    if (o < n_obj && overlap(c, o) < 0.0) out[static_cast<std::size_t>(c)] = pushed.transforms[o];
  }
  scene_ = std::move(pushed.scene);
  return TransformSet(std::move(out));
}

KinematicPredictor::KinematicPredictor(const SimConfig& sim) : sim_(sim) {}

std::unique_ptr<MotionPredictor> KinematicPredictor::clone() const {
  return std::make_unique<KinematicPredictor>(*this);
}

TransformSet KinematicPredictor::predict_transforms(const SparseMaskSet& masks,
                                                    const PushAction& a) {
  validate_action(a);
  const int k = masks.k;
  const Vec2 start = action_position(a);
  const Vec2 dir = push_direction(a.d);
  const double reach = sim_.pusher_radius + 0.5 * masks.spec.voxel_size;
  std::vector<double> contact(static_cast<std::size_t>(k), std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < masks.size(); ++i) {
    const int c = masks.label(i);
    if (c == k - 1) continue;
    const Vec2 w = voxel_center(masks.spec, masks.voxels[i]).head<2>() - start;
    const double lateral = std::abs(cross2(dir, w));
    if (lateral >= reach) continue;
    const double t = w.dot(dir) - std::sqrt(reach * reach - lateral * lateral);
    if (w.dot(dir) > -reach && t < contact[static_cast<std::size_t>(c)]) {
      contact[static_cast<std::size_t>(c)] = t;
    }
  }
  std::vector<SE3Transform> out(static_cast<std::size_t>(k));
  for (int c = 0; c < k - 1; ++c) {
    const double t = contact[static_cast<std::size_t>(c)];
    if (t >= sim_.stroke) continue;
    const double shift = std::clamp(sim_.stroke - t, 0.0, sim_.stroke + reach);
    out[static_cast<std::size_t>(c)].translation = Vec3(dir.x() * shift, dir.y() * shift, 0.0);
  }
  return TransformSet(std::move(out));
}

PredictorKind parse_predictor(std::string_view name) {
  if (name == "oracle") return PredictorKind::Oracle;
  if (name == "kinematic") return PredictorKind::Kinematic;
  throw Error(ErrorCode::InvalidArgument, "unknown predictor '" + std::string(name) + "'");
}

std::string_view to_string(PredictorKind kind) {
  return kind == PredictorKind::Oracle ? "oracle" : "kinematic";
}

std::unique_ptr<MotionPredictor> make_predictor(PredictorKind kind, const SceneState& scene,
                                                const SimConfig& sim) {
  if (kind == PredictorKind::Oracle) return std::make_unique<OraclePredictor>(scene, sim);
  return std::make_unique<KinematicPredictor>(sim);
}

double PlannerConfig::lambda_for(int channel) const {
  const auto c = static_cast<std::size_t>(channel);
  return c < lambda.size() ? lambda[c] : 1.0;
}

void PlannerConfig::validate() const {
  if (horizon < 1 || n_samples < 1 || sampling_radius < 0) {
    throw Error(ErrorCode::InvalidArgument, "planner needs horizon, n_samples >= 1");
  }
  for (double l : lambda) {
    if (!(l >= 0.0)) throw Error(ErrorCode::InvalidArgument, "planner lambda must be >= 0");
  }
}

std::vector<std::vector<std::array<int, 2>>> channel_cells(const SparseMaskSet& masks) {
  std::vector<std::set<std::array<int, 2>>> cells(static_cast<std::size_t>(masks.k - 1));
  for (std::size_t i = 0; i < masks.size(); ++i) {
    const int c = masks.label(i);
    if (c == masks.k - 1) continue;
    const Vec3 x = voxel_center(masks.spec, masks.voxels[i]);
    cells[static_cast<std::size_t>(c)].insert(action_cell(x.head<2>()));
  }
  std::vector<std::vector<std::array<int, 2>>> out;
  for (const auto& s : cells) out.emplace_back(s.begin(), s.end());
  return out;
}

PushAction sample_action(const std::vector<std::vector<std::array<int, 2>>>& cells,
                         const PlannerConfig& cfg, CounterRng& rng) {
  std::vector<std::size_t> live;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (!cells[c].empty()) live.push_back(c);
  }
  if (live.empty()) throw Error(ErrorCode::NoObjects, "sample_action: no object channel");
  const auto& chosen = cells[live[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(live.size())))]];
  const auto base = chosen[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(chosen.size())))];
  const int r = cfg.sampling_radius;
  int dx = 0, dy = 0;
  do {
    dx = rng.uniform_int(2 * r + 1) - r;
    dy = rng.uniform_int(2 * r + 1) - r;
  } while (dx * dx + dy * dy > r * r);
  PushAction a;
  a.px = std::clamp(base[0] + dx, 0, kActionCells - 1);
  a.py = std::clamp(base[1] + dy, 0, kActionCells - 1);
  a.d = rng.uniform_int(kPushDirections);
  return a;
}

std::vector<PushAction> sample_actions(const SparseMaskSet& masks, const PlannerConfig& cfg,
                                       CounterRng& rng) {
  cfg.validate();
  const auto cells = channel_cells(masks);
  std::vector<PushAction> out;
  for (int i = 0; i < cfg.n_samples; ++i) out.push_back(sample_action(cells, cfg, rng));
  return out;
}

std::vector<PushAction> sample_actions(const DsrState& state, const PlannerConfig& cfg) {
  CounterRng rng(cfg.seed, 2);
  return sample_actions(SparseMaskSet::from_dense(state.masks), cfg, rng);
}

namespace {

void finish_centroids(ChannelSet& s, const GridSpec& spec) {
  s.centroids.assign(s.voxels.size(), Vec3::Zero());
  for (std::size_t c = 0; c < s.voxels.size(); ++c) {
    for (auto v : s.voxels[c]) s.centroids[c] += voxel_center(spec, v);
    if (!s.voxels[c].empty()) s.centroids[c] /= static_cast<double>(s.voxels[c].size());
  }
}

std::size_t intersection_size(const std::vector<std::uint32_t>& a,
                              const std::vector<std::uint32_t>& b) {
  std::size_t n = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

double channel_iou(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
  const auto inter = static_cast<double>(intersection_size(a, b));
  return inter / (static_cast<double>(a.size() + b.size()) - inter);
}

}  // namespace

ChannelSet ChannelSet::from_sparse(const SparseMaskSet& m) {
  ChannelSet s;
  s.k = m.k;
  s.voxels.resize(static_cast<std::size_t>(m.k - 1));
  for (std::size_t i = 0; i < m.size(); ++i) {
    const int c = m.label(i);
    if (c != m.k - 1) s.voxels[static_cast<std::size_t>(c)].push_back(m.voxels[i]);
  }
  finish_centroids(s, m.spec);
  return s;
}

ChannelSet ChannelSet::from_dense(const InstanceMaskVolume& m) {
  ChannelSet s;
  s.k = m.k;
  s.voxels.resize(static_cast<std::size_t>(m.k - 1));
  const auto labels = m.argmax_labels();
  for (std::size_t v = 0; v < labels.size(); ++v) {
    if (labels[v] != m.k - 1) s.voxels[labels[v]].push_back(static_cast<std::uint32_t>(v));
  }
  finish_centroids(s, m.spec);
  return s;
}

ChannelSet ChannelSet::reordered(const ChannelPermutation& order) const {
  ChannelSet s;
  s.k = k;
  for (int i = 0; i < k - 1; ++i) {
    s.voxels.push_back(voxels[static_cast<std::size_t>(order(i))]);
    s.centroids.push_back(centroids[static_cast<std::size_t>(order(i))]);
  }
  return s;
}

double rollout_cost(const ChannelSet& pred, const ChannelSet& target, const PlannerConfig& cfg) {
  require_same_channels(pred.k, target.k, "rollout_cost");
  double cost = 0.0;
  for (std::size_t i = 0; i < target.voxels.size(); ++i) {
    if (target.voxels[i].empty() || pred.voxels[i].empty()) continue;
    const double l_pos = (pred.centroids[i] - target.centroids[i]).squaredNorm();
    cost += cfg.lambda_for(static_cast<int>(i)) * l_pos - channel_iou(pred.voxels[i], target.voxels[i]);
  }
  return cost;
}

double rollout_cost(const InstanceMaskVolume& pred, const InstanceMaskVolume& target,
                    const PlannerConfig& cfg) {
  require_same_grid(pred.spec, target.spec, "rollout_cost");
  require_same_channels(pred.k, target.k, "rollout_cost");
  return rollout_cost(ChannelSet::from_dense(pred), ChannelSet::from_dense(target), cfg);
}

namespace {

constexpr double kUnpaired = 1e6;

}  // namespace

ChannelPermutation align_target(const ChannelSet& state, const ChannelSet& target,
                                const PlannerConfig& cfg) {
  require_same_channels(state.k, target.k, "align_target");
  CostMatrix w = CostMatrix::Zero(state.k, state.k);
  for (int i = 0; i < state.k - 1; ++i) {
    for (int j = 0; j < state.k - 1; ++j) {
      const auto& a = state.voxels[static_cast<std::size_t>(i)];
      const auto& b = target.voxels[static_cast<std::size_t>(j)];
      if (a.empty() != b.empty()) w(i, j) = kUnpaired;
      if (a.empty() || b.empty()) continue;
      const double l_pos = (state.centroids[static_cast<std::size_t>(i)] -
                            target.centroids[static_cast<std::size_t>(j)]).squaredNorm();
      w(i, j) = cfg.lambda_for(j) * l_pos - channel_iou(a, b);
    }
  }
  return optimal_matching(w);
}

namespace {

struct Rollout {
  std::vector<PushAction> actions;
  double cost = 0.0;
};

Rollout run_candidate(const SparseMaskSet& start, const ChannelSet& target,
                      const MotionPredictor& predictor, const PlannerConfig& cfg,
                      CounterRng* rng, const std::vector<PushAction>* fixed) {
  auto model = predictor.clone();
  SparseMaskSet s = start;
  Rollout r;
  const int steps = fixed ? static_cast<int>(fixed->size()) : cfg.horizon;
  for (int h = 0; h < steps; ++h) {
    const PushAction a = fixed ? (*fixed)[static_cast<std::size_t>(h)]
                               : sample_action(channel_cells(s), cfg, *rng);
    const TransformSet t = model->predict_transforms(s, a);
    const auto flow = blended_flow_sparse(s, t);
    s = forward_warp_sparse(s, s, flow);
    r.actions.push_back(a);
  }
  r.cost = rollout_cost(ChannelSet::from_sparse(s), target, cfg);
  return r;
}

ChannelSet aligned_target(const SparseMaskSet& start, const InstanceMaskVolume& target,
                          const PlannerConfig& cfg) {
  const ChannelSet t = ChannelSet::from_dense(target);
  return t.reordered(align_target(ChannelSet::from_sparse(start), t, cfg));
}

}  // namespace

PlanResult plan(const DsrState& state, const InstanceMaskVolume& target,
                const MotionPredictor& predictor, const PlannerConfig& cfg, std::uint64_t stream) {
  cfg.validate();
  require_same_grid(state.masks.spec, target.spec, "plan");
  require_same_channels(state.masks.k, target.k, "plan");
  const SparseMaskSet start = SparseMaskSet::from_dense(state.masks);
  const ChannelSet goal = aligned_target(start, target, cfg);
  CounterRng rng(cfg.seed, stream);
  PlanResult best;
  best.cost = std::numeric_limits<double>::infinity();
  for (int n = 0; n < cfg.n_samples; ++n) {
    Rollout r = run_candidate(start, goal, predictor, cfg, &rng, nullptr);
    best.candidate_costs.push_back(r.cost);
    best.candidates.push_back(r.actions);
    if (r.cost < best.cost) {
      best.cost = r.cost;
      best.actions = r.actions;
    }
  }
  return best;
}

double evaluate_sequence(const DsrState& state, const InstanceMaskVolume& target,
                         const MotionPredictor& predictor, const std::vector<PushAction>& actions,
                         const PlannerConfig& cfg) {
  const SparseMaskSet start = SparseMaskSet::from_dense(state.masks);
  return run_candidate(start, aligned_target(start, target, cfg), predictor, cfg, nullptr, &actions)
      .cost;
}

double achieved_iou(const SceneState& scene, const InstanceMaskVolume& target,
                    const EpisodeConfig& env) {
  const auto labels = gt_labels(scene, env.grid, env.k);
  return unordered_iou(iou_matrix(labels, target.argmax_labels(), env.k)).score;
}

SceneState execute_actions(const SceneState& scene, const std::vector<PushAction>& actions,
                           const EpisodeConfig& env) {
  SceneState s = scene;
  for (const auto& a : actions) s = step_push(s, a, env.k, env.sim).scene;
  return s;
}

ExecutionResult execute_plan(const SceneState& scene, const InstanceMaskVolume& target,
                             const PlannerConfig& cfg, const ExecutionConfig& exec) {
  cfg.validate();
  ExecutionResult out;
  out.initial_iou = achieved_iou(scene, target, exec.env);
  const auto obs = observe(scene, exec.env);
  DsrState state = aggregate(nullptr, nullptr, &obs.tsdf, AggregationMode::Dsr, exec.fusion);
  SceneState current = scene;

  if (!exec.replan) {
    const auto model = make_predictor(exec.predictor, current, exec.env.sim);
    const PlanResult p = plan(state, target, *model, cfg);
    const double hold = evaluate_sequence(state, target, *model, {}, cfg);
    out.predicted_cost = std::min(p.cost, hold);
    if (p.cost < hold) {
      out.actions = p.actions;
      current = execute_actions(current, p.actions, exec.env);
    }
  } else {
    PlannerConfig step_cfg = cfg;
    std::vector<PushAction> carried;
    for (int remaining = cfg.horizon, round = 0; remaining > 0; --remaining, ++round) {
      step_cfg.horizon = remaining;
      const auto model = make_predictor(exec.predictor, current, exec.env.sim);
      PlanResult p = plan(state, target, *model, step_cfg, 2 + static_cast<std::uint64_t>(round));
      if (!carried.empty()) {
        const double c = evaluate_sequence(state, target, *model, carried, step_cfg);
        if (c <= p.cost) {
          p.cost = c;
          p.actions = carried;
        }
      }
      const double hold = evaluate_sequence(state, target, *model, {}, step_cfg);
      if (round == 0) out.predicted_cost = std::min(p.cost, hold);
      if (p.cost >= hold) {
        carried.clear();
        continue;
      }
      const PushAction a = p.actions.front();
      const auto motion = make_predictor(exec.predictor, current, exec.env.sim);
      const TransformSet t = motion->predict_transforms(SparseMaskSet::from_dense(state.masks), a);
      current = step_push(current, a, exec.env.k, exec.env.sim).scene;
      const auto next = observe(current, exec.env);
      state = step(state, state.masks, t, &next.tsdf, AggregationMode::Dsr, exec.fusion);
      out.actions.push_back(a);
      carried.assign(p.actions.begin() + 1, p.actions.end());
    }
  }
  out.final_iou = achieved_iou(current, target, exec.env);
  out.final_scene = std::move(current);
  return out;
}

std::vector<PushAction> random_actions(CounterRng& rng, int n) {
  std::vector<PushAction> out;
  for (int i = 0; i < n; ++i) {
    PushAction a;
    a.px = rng.uniform_int(kActionCells);
    a.py = rng.uniform_int(kActionCells);
    a.d = rng.uniform_int(kPushDirections);
    out.push_back(a);
  }
  return out;
}

SceneState policy_target(std::uint64_t seed, const SceneState& scene, int n_pushes,
                         const EpisodeConfig& env) {
  CounterRng rng(seed, 3);
  PolicyState ps = PolicyState::start(scene);
  SceneState s = scene;
  for (int i = 0; i < n_pushes; ++i) {
    const PushAction a = interaction_policy(s, ps, rng, env.sim, env.policy);
    s = step_push(s, a, env.k, env.sim).scene;
  }
  return s;
}

void to_json(nlohmann::json& j, const PlannerConfig& c) {
  j = nlohmann::json{{"horizon", c.horizon},
                     {"n_samples", c.n_samples},
                     {"lambda", c.lambda},
                     {"sampling_radius", c.sampling_radius},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, PlannerConfig& c) {
  PlannerConfig d;
  c.horizon = j.value("horizon", d.horizon);
  c.n_samples = j.value("n_samples", d.n_samples);
  c.lambda = j.value("lambda", d.lambda);
  c.sampling_radius = j.value("sampling_radius", d.sampling_radius);
  c.seed = j.value("seed", d.seed);
}

}  // namespace dsr
