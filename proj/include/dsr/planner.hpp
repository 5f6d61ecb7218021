#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include <json.hpp>

#include "dsr/aggregate.hpp"
#include "dsr/episode.hpp"
#include "dsr/pushing.hpp"
#include "dsr/rng.hpp"
#include "dsr/warp.hpp"

namespace dsr {

struct Prediction {
  InstanceMaskVolume masks;
  TransformSet transforms;
};

/// Predicts per-channel rigid motion caused by a push.
class MotionPredictor {
 public:
  virtual ~MotionPredictor() = default;
  virtual std::unique_ptr<MotionPredictor> clone() const = 0;
  /// Transforms for each channel of masks; the background slot is identity.
  /// May advance internal state, so a rollout calls it once per action.
  virtual TransformSet predict_transforms(const SparseMaskSet& masks, const PushAction& a) = 0;

  /// Next-step masks: the state warped by its own blended flow.
  Prediction predict(const DsrState& state, const PushAction& a);
};

/// Simulates the push on a copy of the true scene. State channels are tied to
/// objects by voxel overlap.
class OraclePredictor final : public MotionPredictor {
 public:
  OraclePredictor(SceneState scene, const SimConfig& sim = {});
  std::unique_ptr<MotionPredictor> clone() const override;
  TransformSet predict_transforms(const SparseMaskSet& masks, const PushAction& a) override;
  const SceneState& scene() const { return scene_; }

 private:
  SceneState scene_;
  SimConfig sim_;
};

/// A channel whose horizontal footprint lies on the pusher's path translates
/// along the push by the stroke remaining after first contact; all other
/// channels stay put.
class KinematicPredictor final : public MotionPredictor {
 public:
  explicit KinematicPredictor(const SimConfig& sim = {});
  std::unique_ptr<MotionPredictor> clone() const override;
  TransformSet predict_transforms(const SparseMaskSet& masks, const PushAction& a) override;

 private:
  SimConfig sim_;
};

enum class PredictorKind { Oracle, Kinematic };
PredictorKind parse_predictor(std::string_view name);
std::string_view to_string(PredictorKind kind);
/// Oracle predictors start from the given true scene.
std::unique_ptr<MotionPredictor> make_predictor(PredictorKind kind, const SceneState& scene,
                                                const SimConfig& sim);

struct PlannerConfig {
  int horizon = 3;
  int n_samples = 100;
  /// Position-cost weight per object channel; missing entries are 1.
  std::vector<double> lambda;
  /// Start cells lie within this many cells of an object footprint.
  int sampling_radius = 8;
  std::uint64_t seed = 0;

  double lambda_for(int channel) const;
  void validate() const;
};

/// Action cells under each object channel of the hardened masks; empty
/// channels have no cells.
std::vector<std::vector<std::array<int, 2>>> channel_cells(const SparseMaskSet& masks);

/// Start cell within sampling_radius of a random cell of a random nonempty
/// channel, direction uniform. Throws NoObjects.
PushAction sample_action(const std::vector<std::vector<std::array<int, 2>>>& cells,
                         const PlannerConfig& cfg, CounterRng& rng);
std::vector<PushAction> sample_actions(const SparseMaskSet& masks, const PlannerConfig& cfg,
                                       CounterRng& rng);
std::vector<PushAction> sample_actions(const DsrState& state, const PlannerConfig& cfg);

/// Hardened channel summary used by the cost.
struct ChannelSet {
  int k = 0;
  std::vector<std::vector<std::uint32_t>> voxels;
  std::vector<Vec3> centroids;

  static ChannelSet from_sparse(const SparseMaskSet& m);
  static ChannelSet from_dense(const InstanceMaskVolume& m);
  /// Channel i of the result is channel order(i) of this set.
  ChannelSet reordered(const ChannelPermutation& order) const;
};

/// sum over nonempty target channels i of lambda_i * |c_pred - c_target|^2
/// - IoU_i; a channel missing from the prediction contributes 0.
/// Throws ChannelMismatch.
double rollout_cost(const ChannelSet& pred, const ChannelSet& target, const PlannerConfig& cfg);
double rollout_cost(const InstanceMaskVolume& pred, const InstanceMaskVolume& target,
                    const PlannerConfig& cfg);

/// State channel i is compared with target channel order(i): minimizes the
/// summed pairwise cost once, before planning. Occupied channels pair with
/// occupied ones whenever both sides have enough.
ChannelPermutation align_target(const ChannelSet& state, const ChannelSet& target,
                                const PlannerConfig& cfg);

struct PlanResult {
  std::vector<PushAction> actions;
  double cost = 0.0;
  /// Cost of every candidate in sampling order.
  std::vector<double> candidate_costs;
  std::vector<std::vector<PushAction>> candidates;
};

/// Shooting: n_samples independent sequences of length horizon, each action
/// sampled around the predicted masks reached so far; returns the cheapest
/// (first sampled on ties). stream selects the random stream under cfg.seed.
PlanResult plan(const DsrState& state, const InstanceMaskVolume& target,
                const MotionPredictor& predictor, const PlannerConfig& cfg,
                std::uint64_t stream = 2);

/// Cost of a fixed sequence under the predictor, as plan evaluates it.
double evaluate_sequence(const DsrState& state, const InstanceMaskVolume& target,
                         const MotionPredictor& predictor, const std::vector<PushAction>& actions,
                         const PlannerConfig& cfg);

struct ExecutionConfig {
  bool replan = true;
  PredictorKind predictor = PredictorKind::Oracle;
  EpisodeConfig env;
  FusionConfig fusion;
};

struct ExecutionResult {
  std::vector<PushAction> actions;
  /// Predicted cost of the first plan, or of holding if that is lower.
  double predicted_cost = 0.0;
  double initial_iou = 0.0;
  double final_iou = 0.0;
  SceneState final_scene;
};

/// Unordered IoU between the scene's ground-truth masks and the target.
double achieved_iou(const SceneState& scene, const InstanceMaskVolume& target,
                    const EpisodeConfig& env);

SceneState execute_actions(const SceneState& scene, const std::vector<PushAction>& actions,
                           const EpisodeConfig& env);

/// Observes the scene, plans, and executes in the simulator. Open loop runs
/// the first plan; replanning executes one action at a time, updates the
/// state from the new observation and plans the remaining horizon again.
/// A plan, or a replanning round, that is not predicted to beat leaving the
/// scene as it is executes nothing.
ExecutionResult execute_plan(const SceneState& scene, const InstanceMaskVolume& target,
                             const PlannerConfig& cfg, const ExecutionConfig& exec);

/// Uniform random actions over the whole action grid.
std::vector<PushAction> random_actions(CounterRng& rng, int n);

/// Target scene reached by n interaction-policy pushes (stream 3 of seed).
SceneState policy_target(std::uint64_t seed, const SceneState& scene, int n_pushes,
                         const EpisodeConfig& env);

void to_json(nlohmann::json& j, const PlannerConfig& c);
void from_json(const nlohmann::json& j, PlannerConfig& c);

}  // namespace dsr
