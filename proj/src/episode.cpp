#include "dsr/episode.hpp"

#include <cstdio>

#include "dsr/error.hpp"
#include "dsr/json_io.hpp"
#include "dsr/masks.hpp"
#include "dsr/volume_io.hpp"

namespace dsr {

InstanceMaskVolume Episode::gt_masks(std::size_t t) const {
  return InstanceMaskVolume::from_labels(config.grid, config.k, steps.at(t).gt_labels);
}

VectorVolume Episode::gt_flow(std::size_t t) const {
  return blended_flow(gt_masks(t), steps.at(t).transforms);
}

Observation observe(const SceneState& scene, const EpisodeConfig& cfg) {
  Observation obs;
  obs.depth = render_depth(scene, cfg.camera);
  obs.tsdf = fuse_tsdf(obs.depth, cfg.camera, cfg.grid, cfg.truncation());
  return obs;
}

namespace {

StepRecord record_step(const SceneState& scene, const PushAction& a, const EpisodeConfig& cfg,
                       SceneState& next) {
  StepRecord rec;
  rec.scene = scene;
  rec.tsdf = observe(scene, cfg).tsdf;
  rec.gt_labels = gt_labels(scene, cfg.grid, cfg.k);
  rec.action = a;
  auto pushed = step_push(scene, a, cfg.k, cfg.sim);
  rec.transforms = std::move(pushed.transforms);
  rec.touched = std::move(pushed.touched);
  next = std::move(pushed.scene);
  return rec;
}

}  // namespace

Episode generate_episode(std::uint64_t seed, const EpisodeConfig& cfg) {
  if (cfg.n_objects < 1 || cfg.n_objects > cfg.k - 1) {
    throw Error(ErrorCode::TooManyObjects, "generate_episode: need 1 <= n_objects <= k-1");
  }
  Episode ep;
  ep.seed = seed;
  ep.config = cfg;
  SceneState scene = drop_objects(seed, cfg.n_objects, cfg.drop);
  CounterRng rng(seed, 1);
  PolicyState ps = PolicyState::start(scene);
  for (int t = 0; t < cfg.n_steps; ++t) {
    const PushAction a = interaction_policy(scene, ps, rng, cfg.sim, cfg.policy);
    SceneState next;
    ep.steps.push_back(record_step(scene, a, cfg, next));
    scene = std::move(next);
  }
  ep.final_scene = std::move(scene);
  return ep;
}

Episode record_episode(std::uint64_t seed, const SceneState& initial,
                       const std::vector<PushAction>& actions, const EpisodeConfig& cfg) {
  Episode ep;
  ep.seed = seed;
  ep.config = cfg;
  ep.config.n_objects = static_cast<int>(initial.objects.size());
  ep.config.n_steps = static_cast<int>(actions.size());
  SceneState scene = initial;
  for (const auto& a : actions) {
    SceneState next;
    ep.steps.push_back(record_step(scene, a, cfg, next));
    scene = std::move(next);
  }
  ep.final_scene = std::move(scene);
  return ep;
}

std::string step_stem(const char* stem, std::size_t t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%02zu", stem, t);
  return buf;
}

std::string step_file(const char* stem, std::size_t t, const char* ext) {
  return step_stem(stem, t) + "." + ext;
}

void write_episode(const std::filesystem::path& dir, const Episode& ep) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
  const auto& cfg = ep.config;
  nlohmann::json meta{{"schema_version", kEpisodeSchemaVersion},
                      {"seed", ep.seed},
                      {"k", cfg.k},
                      {"n_steps", ep.steps.size()},
                      {"grid", cfg.grid},
                      {"camera", cfg.camera},
                      {"config", cfg},
                      {"objects", ep.steps.empty() ? ep.final_scene.objects
                                                   : ep.steps.front().scene.objects},
                      {"final_objects", ep.final_scene.objects},
                      {"half_extent", ep.final_scene.half_extent}};
  write_json(dir / "meta.json", meta);
  for (std::size_t t = 0; t < ep.steps.size(); ++t) {
    const auto& s = ep.steps[t];
    write_depth(dir / step_file("depth", t, "bin"), observe(s.scene, cfg).depth);
    write_volume(dir / step_file("tsdf", t, "vol"), to_raw(s.tsdf));
    nlohmann::json action = s.action;
    action["schema_version"] = kEpisodeSchemaVersion;
    write_json(dir / step_file("action", t, "json"), action);
    write_volume(dir / step_file("gt_masks", t, "vol"), labels_to_raw(cfg.grid, s.gt_labels));
    write_json(dir / step_file("gt_transforms", t, "json"),
               nlohmann::json{{"schema_version", kEpisodeSchemaVersion},
                              {"transforms", s.transforms},
                              {"touched", s.touched},
                              {"objects", s.scene.objects}});
    write_volume(dir / step_file("gt_flow", t, "vol"), to_raw(ep.gt_flow(t)));
    write_volume(dir / step_file("action_map", t, "vol"), action_map(s.action));
  }
}

Episode read_episode(const std::filesystem::path& dir) {
  const auto meta = read_versioned_json(dir / "meta.json", kEpisodeSchemaVersion);
  Episode ep;
  ep.seed = meta.at("seed").get<std::uint64_t>();
  ep.config = meta.at("config").get<EpisodeConfig>();
  ep.final_scene.objects = meta.at("final_objects").get<std::vector<RigidObject>>();
  ep.final_scene.half_extent = meta.at("half_extent").get<double>();
  const auto n = meta.at("n_steps").get<std::size_t>();
  for (std::size_t t = 0; t < n; ++t) {
    StepRecord s;
    s.tsdf = tsdf_from_raw(read_volume(dir / step_file("tsdf", t, "vol")));
    require_same_grid(s.tsdf.spec, ep.config.grid, "episode tsdf");
    const auto action =
        read_versioned_json(dir / step_file("action", t, "json"), kEpisodeSchemaVersion);
    s.action = action.get<PushAction>();
    const auto gt = read_versioned_json(dir / step_file("gt_transforms", t, "json"),
                                        kEpisodeSchemaVersion);
    s.transforms = gt.at("transforms").get<TransformSet>();
    s.touched = gt.at("touched").get<std::vector<bool>>();
    s.scene.objects = gt.at("objects").get<std::vector<RigidObject>>();
    s.scene.half_extent = ep.final_scene.half_extent;
    const auto labels = read_volume(dir / step_file("gt_masks", t, "vol"));
    require_same_grid(labels.spec, ep.config.grid, "episode gt masks");
    s.gt_labels = labels_from_raw(labels);
    ep.steps.push_back(std::move(s));
  }
  return ep;
}

VectorVolume read_gt_flow(const std::filesystem::path& dir, std::size_t t) {
  return vector_from_raw(read_volume(dir / step_file("gt_flow", t, "vol")));
}

void to_json(nlohmann::json& j, const PolicyConfig& c) {
  j = nlohmann::json{{"origin_weight", c.origin_weight},
                     {"previous_weight", c.previous_weight},
                     {"far_distance", c.far_distance},
                     {"far_penalty", c.far_penalty},
                     {"clearance_cells", c.clearance_cells}};
}

void from_json(const nlohmann::json& j, PolicyConfig& c) {
  PolicyConfig d;
  c.origin_weight = j.value("origin_weight", d.origin_weight);
  c.previous_weight = j.value("previous_weight", d.previous_weight);
  c.far_distance = j.value("far_distance", d.far_distance);
  c.far_penalty = j.value("far_penalty", d.far_penalty);
  c.clearance_cells = j.value("clearance_cells", d.clearance_cells);
}

void to_json(nlohmann::json& j, const EpisodeConfig& c) {
  j = nlohmann::json{{"n_objects", c.n_objects},
                     {"n_steps", c.n_steps},
                     {"k", c.k},
                     {"grid", c.grid},
                     {"camera", c.camera},
                     {"truncation_voxels", c.truncation_voxels},
                     {"drop", c.drop},
                     {"sim", c.sim},
                     {"policy", c.policy}};
}

void from_json(const nlohmann::json& j, EpisodeConfig& c) {
  EpisodeConfig d;
  c.n_objects = j.value("n_objects", d.n_objects);
  c.n_steps = j.value("n_steps", d.n_steps);
  c.k = j.value("k", d.k);
  c.grid = j.contains("grid") ? j.at("grid").get<GridSpec>() : d.grid;
  c.camera = j.contains("camera") ? j.at("camera").get<CameraModel>() : d.camera;
  c.truncation_voxels = j.value("truncation_voxels", d.truncation_voxels);
  c.drop = j.contains("drop") ? j.at("drop").get<DropConfig>() : d.drop;
  c.sim = j.contains("sim") ? j.at("sim").get<SimConfig>() : d.sim;
  c.policy = j.contains("policy") ? j.at("policy").get<PolicyConfig>() : d.policy;
}

}  // namespace dsr
