#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "dsr/aggregate.hpp"
#include "dsr/episode.hpp"
#include "dsr/metrics.hpp"
#include "dsr/planner.hpp"

namespace dsr {

struct BenchConfig {
  EpisodeConfig episode;
  FusionConfig fusion;
  PlannerConfig planner;
  /// Interaction-policy pushes that produce a planning target.
  int target_pushes = 3;
  /// Also run the uniform-random-action baseline in plan reports.
  bool baseline = true;
  int jobs = 1;
};

inline constexpr int kBenchSchemaVersion = 1;

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t h);
/// Hash of the canonical JSON text of the config.
std::string config_hash(const BenchConfig& cfg);

/// "A..B" (inclusive) or a single seed.
std::vector<std::uint64_t> parse_seed_range(std::string_view text);

/// Applies "a.b.c=value" overrides; value is parsed as JSON, else taken as a
/// string.
void apply_override(nlohmann::json& j, std::string_view assignment);

/// Runs fn(i) for i in [0, n) on up to jobs threads. Callers write results by
/// index, so output order never depends on scheduling. The first exception
/// (lowest index) is rethrown.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

struct RolloutOptions {
  AggregationMode mode = AggregationMode::Dsr;
  PredictorKind predictor = PredictorKind::Kinematic;
  FusionConfig fusion;
  /// When set, each step's state is written as state_XX.{vol,json}.
  std::optional<std::filesystem::path> dump_dir;
};

struct RolloutResult {
  MetricsRecord metrics;
  /// Per step (k-1)x(k-1) IoU between gt and hardened state channels.
  std::vector<Eigen::MatrixXd> iou;
  /// Per step channel mass of the state.
  std::vector<std::vector<double>> channel_mass;
};

/// Aggregates each step's observation in the requested mode and scores the
/// states S_0..S_{N-1} against ground truth. Dsr warps by the predictor's
/// transforms on the state, GtWarp by the ground-truth flow of the gt masks;
/// the other modes predict zero flow.
RolloutResult run_rollout(const Episode& ep, const RolloutOptions& opt);

struct ManifestEntry {
  std::uint64_t seed = 0;
  std::string dir;
  int n_steps = 0;
  std::string content_hash;
};

struct Manifest {
  std::string config_hash;
  nlohmann::json config;
  std::vector<ManifestEntry> episodes;
};

/// FNV-1a over the episode directory's files in name order.
std::string directory_hash(const std::filesystem::path& dir);

Manifest cmd_generate(const BenchConfig& cfg, const std::vector<std::uint64_t>& seeds,
                      const std::filesystem::path& out);
Manifest read_manifest(const std::filesystem::path& dataset);

/// Writes metrics.jsonl (one record per episode, manifest order) under out.
std::vector<MetricsRecord> cmd_rollout(const std::filesystem::path& dataset, AggregationMode mode,
                                       PredictorKind predictor, const BenchConfig& cfg,
                                       const std::filesystem::path& out, bool dump_states);

/// Rolls out every mode and writes eval.json with per-mode means.
nlohmann::json cmd_eval(const std::filesystem::path& dataset, PredictorKind predictor,
                        const BenchConfig& cfg, const std::filesystem::path& out);

struct PlanReport {
  std::uint64_t seed = 0;
  std::vector<PushAction> actions;
  double predicted_cost = 0.0;
  double initial_iou = 0.0;
  double achieved_iou = 0.0;
  std::optional<double> baseline_iou;
};

/// Plans from a dropped scene to a policy-generated target per seed with
/// replanning; writes plan_report.json.
std::vector<PlanReport> cmd_plan(const BenchConfig& cfg, const std::vector<std::uint64_t>& seeds,
                                 PredictorKind predictor, bool replan,
                                 const std::filesystem::path& out);
PlanReport plan_one(const BenchConfig& cfg, std::uint64_t seed, PredictorKind predictor,
                    bool replan);

void to_json(nlohmann::json& j, const BenchConfig& c);
void from_json(const nlohmann::json& j, BenchConfig& c);
void to_json(nlohmann::json& j, const FusionConfig& c);
void from_json(const nlohmann::json& j, FusionConfig& c);
void to_json(nlohmann::json& j, const PlanReport& r);

}  // namespace dsr
