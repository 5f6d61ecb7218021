#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "dsr/camera.hpp"
#include "dsr/policy.hpp"
#include "dsr/pushing.hpp"
#include "dsr/scene.hpp"
#include "dsr/tsdf.hpp"

namespace dsr {

struct EpisodeConfig {
  int n_objects = 4;
  int n_steps = 10;
  int k = 5;
  GridSpec grid = GridSpec::benchmark();
  CameraModel camera = CameraModel::benchmark();
  /// TSDF truncation in voxels.
  double truncation_voxels = 5.0;
  DropConfig drop;
  SimConfig sim;
  PolicyConfig policy;

  double truncation() const { return truncation_voxels * grid.voxel_size; }
};

/// Step t: the scene before action t, its observation and ground truth, and
/// the motion action t causes.
struct StepRecord {
  SceneState scene;
  TsdfVolume tsdf;
  /// Per-voxel object index; k-1 is background.
  std::vector<std::uint8_t> gt_labels;
  PushAction action;
  TransformSet transforms;
  std::vector<bool> touched;
};

struct Episode {
  std::uint64_t seed = 0;
  EpisodeConfig config;
  std::vector<StepRecord> steps;
  /// Scene after the last action.
  SceneState final_scene;

  InstanceMaskVolume gt_masks(std::size_t t) const;
  VectorVolume gt_flow(std::size_t t) const;
};

struct Observation {
  DepthImage depth;
  TsdfVolume tsdf;
};

Observation observe(const SceneState& scene, const EpisodeConfig& cfg);

/// Drops n_objects, then runs the interaction policy for n_steps pushes.
/// Objects come from stream 0 of the seed, the policy from stream 1.
Episode generate_episode(std::uint64_t seed, const EpisodeConfig& cfg);

/// Records a fixed action sequence from a given initial scene; one step per
/// action.
Episode record_episode(std::uint64_t seed, const SceneState& initial,
                       const std::vector<PushAction>& actions, const EpisodeConfig& cfg);

inline constexpr int kEpisodeSchemaVersion = 1;

/// Writes meta.json and per step depth_XX.bin, tsdf_XX.vol, action_XX.json,
/// gt_masks_XX.vol, gt_transforms_XX.json, gt_flow_XX.vol, action_map_XX.vol.
void write_episode(const std::filesystem::path& dir, const Episode& ep);
/// Loads everything except depth images and flow volumes.
Episode read_episode(const std::filesystem::path& dir);
VectorVolume read_gt_flow(const std::filesystem::path& dir, std::size_t t);

/// "<stem>_XX" and "<stem>_XX.<ext>" with a two-digit step.
std::string step_stem(const char* stem, std::size_t t);
std::string step_file(const char* stem, std::size_t t, const char* ext);

void to_json(nlohmann::json& j, const EpisodeConfig& c);
void from_json(const nlohmann::json& j, EpisodeConfig& c);
void to_json(nlohmann::json& j, const PolicyConfig& c);
void from_json(const nlohmann::json& j, PolicyConfig& c);

}  // namespace dsr
