#include "dsr/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <thread>

#include "dsr/error.hpp"
#include "dsr/json_io.hpp"

namespace dsr {

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_hash(const BenchConfig& cfg) {
  return hex64(fnv1a(nlohmann::json(cfg).dump()));
}

namespace {

std::uint64_t parse_u64(std::string_view s) {
  std::uint64_t v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw Error(ErrorCode::InvalidArgument, "bad seed '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

std::vector<std::uint64_t> parse_seed_range(std::string_view text) {
  const auto dots = text.find("..");
  const std::uint64_t lo = parse_u64(text.substr(0, dots));
  const std::uint64_t hi = dots == std::string_view::npos ? lo : parse_u64(text.substr(dots + 2));
  if (hi < lo) throw Error(ErrorCode::InvalidArgument, "empty seed range " + std::string(text));
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
  return seeds;
}

void apply_override(nlohmann::json& j, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw Error(ErrorCode::InvalidArgument, "override needs key=value: " + std::string(assignment));
  }
  std::string pointer = "/" + std::string(assignment.substr(0, eq));
  std::replace(pointer.begin(), pointer.end(), '.', '/');
  const std::string text(assignment.substr(eq + 1));
  nlohmann::json value = nlohmann::json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  j[nlohmann::json::json_pointer(pointer)] = value;
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto threads = static_cast<std::size_t>(std::max(1, jobs));
  if (threads == 1 || n <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < std::min(threads, n); ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

RolloutResult run_rollout(const Episode& ep, const RolloutOptions& opt) {
  const auto& cfg = ep.config;
  FusionConfig fusion = opt.fusion;
  fusion.k = cfg.k;
  const std::size_t n = ep.steps.size();
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "run_rollout: episode has no steps");
  if (opt.dump_dir) std::filesystem::create_directories(*opt.dump_dir);

  RolloutResult out;
  DsrState state = aggregate(nullptr, nullptr, &ep.steps[0].tsdf, opt.mode, fusion);
  const VectorVolume zero_flow(cfg.grid);
  double vis_sum = 0.0, vis_mse = 0.0, full_sum = 0.0, full_mse = 0.0;
  std::size_t vis_steps = 0;

  for (std::size_t t = 0; t < n; ++t) {
    const StepRecord& s = ep.steps[t];
    if (opt.dump_dir) write_state(*opt.dump_dir, step_stem("state", t), state);
    out.iou.push_back(iou_matrix(s.gt_labels, state.masks.argmax_labels(), cfg.k));
    out.channel_mass.push_back(state.masks.channel_mass());

    const InstanceMaskVolume gt_masks = ep.gt_masks(t);
    const VectorVolume gt_flow = blended_flow(gt_masks, s.transforms);
    std::optional<VectorVolume> pred_flow;
    if (opt.mode == AggregationMode::Dsr) {
      auto model = make_predictor(opt.predictor, s.scene, cfg.sim);
      pred_flow = blended_flow(
          state.masks, model->predict_transforms(SparseMaskSet::from_dense(state.masks), s.action));
    }
    const VectorVolume& flow = opt.mode == AggregationMode::Dsr      ? *pred_flow
                               : opt.mode == AggregationMode::GtWarp ? gt_flow
                                                                     : zero_flow;
    const FlowError full = flow_error(flow, gt_flow, FlowRegion::Full);
    full_sum += full.epe_cm;
    full_mse += full.mse_cm2;
    const auto visible = visible_surface_mask(s.tsdf, s.gt_labels, cfg.k - 1);
    if (std::find(visible.begin(), visible.end(), 1) != visible.end()) {
      const FlowError vis = flow_error(flow, gt_flow, FlowRegion::Visible, visible);
      vis_sum += vis.epe_cm;
      vis_mse += vis.mse_cm2;
      ++vis_steps;
    }

    if (t + 1 < n) {
      const TsdfVolume* next = &ep.steps[t + 1].tsdf;
      const InstanceMaskVolume& motion = opt.mode == AggregationMode::GtWarp ? gt_masks : state.masks;
      state = step_with_flow(state, motion, flow, next, opt.mode, fusion);
    }
  }

  MetricsRecord& m = out.metrics;
  m.seed = ep.seed;
  m.mode = std::string(to_string(opt.mode));
  m.flow_full_cm = full_sum / static_cast<double>(n);
  m.flow_full_mse_cm2 = full_mse / static_cast<double>(n);
  m.flow_visible_cm = vis_steps ? vis_sum / static_cast<double>(vis_steps) : std::nan("");
  m.flow_visible_mse_cm2 = vis_steps ? vis_mse / static_cast<double>(vis_steps) : std::nan("");
  m.iou_unordered = mean_unordered_iou(out.iou);
  m.iou_ordered = ordered_iou(out.iou).score;
  return out;
}

std::string directory_hash(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::uint64_t h = fnv1a("");
  for (const auto& f : files) {
    h = fnv1a(f.filename().string(), h);
    const auto bytes = read_file_bytes(f);
    h = fnv1a(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()), h);
  }
  return hex64(h);
}

namespace {

std::string episode_dir_name(std::uint64_t seed) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "episode_%06llu", static_cast<unsigned long long>(seed));
  return buf;
}

void write_manifest(const std::filesystem::path& out, const Manifest& m) {
  nlohmann::json eps = nlohmann::json::array();
  for (const auto& e : m.episodes) {
    eps.push_back({{"seed", e.seed},
                   {"dir", e.dir},
                   {"n_steps", e.n_steps},
                   {"content_hash", e.content_hash}});
  }
  write_json(out / "manifest.json", {{"schema_version", kBenchSchemaVersion},
                                     {"config_hash", m.config_hash},
                                     {"config", m.config},
                                     {"episodes", eps}});
}

}  // namespace

Manifest cmd_generate(const BenchConfig& cfg, const std::vector<std::uint64_t>& seeds,
                      const std::filesystem::path& out) {
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + out.string() + ": " + ec.message());
  Manifest m;
  m.config = cfg;
  m.config_hash = config_hash(cfg);
  m.episodes.resize(seeds.size());
  parallel_for(seeds.size(), cfg.jobs, [&](std::size_t i) {
    const auto name = episode_dir_name(seeds[i]);
    write_episode(out / name, generate_episode(seeds[i], cfg.episode));
    m.episodes[i] = {seeds[i], name, cfg.episode.n_steps, directory_hash(out / name)};
  });
  write_manifest(out, m);
  return m;
}

Manifest read_manifest(const std::filesystem::path& dataset) {
  const auto j = read_versioned_json(dataset / "manifest.json", kBenchSchemaVersion);
  Manifest m;
  m.config_hash = j.at("config_hash").get<std::string>();
  m.config = j.at("config");
  for (const auto& e : j.at("episodes")) {
    m.episodes.push_back({e.at("seed").get<std::uint64_t>(), e.at("dir").get<std::string>(),
                          e.at("n_steps").get<int>(), e.at("content_hash").get<std::string>()});
  }
  return m;
}

namespace {

std::vector<RolloutResult> rollout_dataset(const std::filesystem::path& dataset,
                                           const Manifest& m, AggregationMode mode,
                                           PredictorKind predictor, const BenchConfig& cfg,
                                           const std::filesystem::path* dump_root) {
  std::vector<RolloutResult> results(m.episodes.size());
  parallel_for(m.episodes.size(), cfg.jobs, [&](std::size_t i) {
    RolloutOptions opt;
    opt.mode = mode;
    opt.predictor = predictor;
    opt.fusion = cfg.fusion;
    if (dump_root) opt.dump_dir = *dump_root / m.episodes[i].dir;
    results[i] = run_rollout(read_episode(dataset / m.episodes[i].dir), opt);
  });
  return results;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<MetricsRecord>& records) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  for (const auto& r : records) out << nlohmann::json(r).dump() << "\n";
}

}  // namespace

std::vector<MetricsRecord> cmd_rollout(const std::filesystem::path& dataset, AggregationMode mode,
                                       PredictorKind predictor, const BenchConfig& cfg,
                                       const std::filesystem::path& out, bool dump_states) {
  const Manifest m = read_manifest(dataset);
  std::filesystem::create_directories(out);
  const auto dump_root = out / "states";
  const auto results =
      rollout_dataset(dataset, m, mode, predictor, cfg, dump_states ? &dump_root : nullptr);
  std::vector<MetricsRecord> records;
  for (const auto& r : results) records.push_back(r.metrics);
  write_jsonl(out / "metrics.jsonl", records);
  return records;
}

nlohmann::json cmd_eval(const std::filesystem::path& dataset, PredictorKind predictor,
                        const BenchConfig& cfg, const std::filesystem::path& out) {
  const Manifest m = read_manifest(dataset);
  std::filesystem::create_directories(out);
  nlohmann::json report{{"schema_version", kBenchSchemaVersion},
                        {"dataset_config_hash", m.config_hash},
                        {"predictor", to_string(predictor)},
                        {"episodes", m.episodes.size()}};
  for (auto mode : {AggregationMode::GtWarp, AggregationMode::Dsr, AggregationMode::NoWarp,
                    AggregationMode::SingleStep}) {
    const auto results = rollout_dataset(dataset, m, mode, predictor, cfg, nullptr);
    std::vector<MetricsRecord> records;
    double ordered = 0.0, unordered = 0.0, vis = 0.0, full = 0.0;
    std::size_t vis_n = 0;
    for (const auto& r : results) {
      records.push_back(r.metrics);
      ordered += r.metrics.iou_ordered;
      unordered += r.metrics.iou_unordered;
      full += r.metrics.flow_full_cm;
      if (std::isfinite(r.metrics.flow_visible_cm)) {
        vis += r.metrics.flow_visible_cm;
        ++vis_n;
      }
    }
    const auto n = static_cast<double>(std::max<std::size_t>(1, results.size()));
    const std::string name(to_string(mode));
    write_jsonl(out / ("metrics_" + name + ".jsonl"), records);
    report["modes"][name] = {{"iou_ordered", ordered / n},
                             {"iou_unordered", unordered / n},
                             {"flow_visible_cm", vis_n ? vis / static_cast<double>(vis_n) : 0.0},
                             {"flow_full_cm", full / n}};
  }
  write_json(out / "eval.json", report);
  return report;
}

PlanReport plan_one(const BenchConfig& cfg, std::uint64_t seed, PredictorKind predictor,
                    bool replan) {
  const EpisodeConfig& env = cfg.episode;
  const SceneState scene = drop_objects(seed, env.n_objects, env.drop);
  const SceneState target_scene = policy_target(seed, scene, cfg.target_pushes, env);
  const InstanceMaskVolume target = gt_masks(target_scene, env.grid, env.k);

  PlannerConfig pcfg = cfg.planner;
  pcfg.seed = CounterRng::mix(cfg.planner.seed ^ CounterRng::mix(seed));
  ExecutionConfig exec;
  exec.replan = replan;
  exec.predictor = predictor;
  exec.env = env;
  exec.fusion = cfg.fusion;
  exec.fusion.k = env.k;
  const ExecutionResult r = execute_plan(scene, target, pcfg, exec);

  PlanReport rep;
  rep.seed = seed;
  rep.actions = r.actions;
  rep.predicted_cost = r.predicted_cost;
  rep.initial_iou = r.initial_iou;
  rep.achieved_iou = r.final_iou;
  if (cfg.baseline) {
    CounterRng rng(seed, 4);
    const auto actions = random_actions(rng, cfg.planner.horizon);
    rep.baseline_iou = achieved_iou(execute_actions(scene, actions, env), target, env);
  }
  return rep;
}

std::vector<PlanReport> cmd_plan(const BenchConfig& cfg, const std::vector<std::uint64_t>& seeds,
                                 PredictorKind predictor, bool replan,
                                 const std::filesystem::path& out) {
  std::vector<PlanReport> reports(seeds.size());
  parallel_for(seeds.size(), cfg.jobs,
               [&](std::size_t i) { reports[i] = plan_one(cfg, seeds[i], predictor, replan); });
  double achieved = 0.0, baseline = 0.0;
  for (const auto& r : reports) {
    achieved += r.achieved_iou;
    baseline += r.baseline_iou.value_or(0.0);
  }
  const auto n = static_cast<double>(std::max<std::size_t>(1, reports.size()));
  nlohmann::json j{{"schema_version", kBenchSchemaVersion},
                   {"config_hash", config_hash(cfg)},
                   {"predictor", to_string(predictor)},
                   {"replan", replan},
                   {"mean_achieved_iou", achieved / n},
                   {"seeds", reports}};
  if (cfg.baseline) j["mean_baseline_iou"] = baseline / n;
  std::filesystem::create_directories(out);
  write_json(out / "plan_report.json", j);
  return reports;
}

void to_json(nlohmann::json& j, const FusionConfig& c) {
  j = nlohmann::json{{"k", c.k},
                     {"eta", c.eta},
                     {"empty_mass", c.empty_mass},
                     {"min_piece_fraction", c.min_piece_fraction},
                     {"reassociation_radius", c.reassociation_radius},
                     {"reassociation_min_free", c.reassociation_min_free},
                     {"surface_band", c.perception.surface_band},
                     {"shell_depth", c.perception.shell_depth},
                     {"table_layers", c.perception.table_layers},
                     {"min_segment_voxels", c.perception.min_segment_voxels}};
}

void from_json(const nlohmann::json& j, FusionConfig& c) {
  FusionConfig d;
  c.k = j.value("k", d.k);
  c.eta = j.value("eta", d.eta);
  c.empty_mass = j.value("empty_mass", d.empty_mass);
  c.min_piece_fraction = j.value("min_piece_fraction", d.min_piece_fraction);
  c.reassociation_radius = j.value("reassociation_radius", d.reassociation_radius);
  c.reassociation_min_free = j.value("reassociation_min_free", d.reassociation_min_free);
  c.perception.surface_band = j.value("surface_band", d.perception.surface_band);
  c.perception.shell_depth = j.value("shell_depth", d.perception.shell_depth);
  c.perception.table_layers = j.value("table_layers", d.perception.table_layers);
  c.perception.min_segment_voxels = j.value("min_segment_voxels", d.perception.min_segment_voxels);
}

void to_json(nlohmann::json& j, const BenchConfig& c) {
  j = nlohmann::json{{"schema_version", kBenchSchemaVersion},
                     {"episode", c.episode},
                     {"fusion", c.fusion},
                     {"planner", c.planner},
                     {"target_pushes", c.target_pushes},
                     {"baseline", c.baseline}};
}

void from_json(const nlohmann::json& j, BenchConfig& c) {
  if (j.contains("schema_version") && j.at("schema_version") != kBenchSchemaVersion) {
    throw Error(ErrorCode::SchemaVersion, "config: unsupported schema version");
  }
  BenchConfig d;
  c.episode = j.contains("episode") ? j.at("episode").get<EpisodeConfig>() : d.episode;
  c.fusion = j.contains("fusion") ? j.at("fusion").get<FusionConfig>() : d.fusion;
  c.planner = j.contains("planner") ? j.at("planner").get<PlannerConfig>() : d.planner;
  c.target_pushes = j.value("target_pushes", d.target_pushes);
  c.baseline = j.value("baseline", d.baseline);
  c.jobs = j.value("jobs", d.jobs);
}

void to_json(nlohmann::json& j, const PlanReport& r) {
  j = nlohmann::json{{"seed", r.seed},
                     {"actions", r.actions},
                     {"predicted_cost", r.predicted_cost},
                     {"initial_iou", r.initial_iou},
                     {"achieved_iou", r.achieved_iou}};
  if (r.baseline_iou) j["baseline_iou"] = *r.baseline_iou;
}

}  // namespace dsr
