#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dsr/bench.hpp"
#include "dsr/error.hpp"
#include "dsr/json_io.hpp"

namespace {

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::optional<int> jobs;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--set", c.overrides, "Override a config key, e.g. episode.n_steps=5");
  cmd->add_option("--jobs", c.jobs, "Worker threads")->check(CLI::PositiveNumber);
}

dsr::BenchConfig load_config(const Common& c) {
  nlohmann::json j = dsr::BenchConfig{};
  if (!c.config.empty()) j.merge_patch(dsr::read_json(c.config));
  for (const auto& o : c.overrides) dsr::apply_override(j, o);
  auto cfg = j.get<dsr::BenchConfig>();
  if (c.jobs) cfg.jobs = *c.jobs;
  return cfg;
}

void print_error(std::string_view code, std::string_view message) {
  std::cerr << nlohmann::json{{"error", {{"code", code}, {"message", message}}}}.dump() << "\n";
}

double mean_of(const std::vector<dsr::MetricsRecord>& rs, double dsr::MetricsRecord::*field) {
  double s = 0.0;
  for (const auto& r : rs) s += r.*field;
  return rs.empty() ? 0.0 : s / static_cast<double>(rs.size());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Benchmark harness for amodal scene-representation rollouts and push planning"};
  app.require_subcommand(1);

  Common common;
  std::string seed_range;
  std::string out = ".";
  std::string dataset;
  std::string mode = "dsr";
  std::string predictor;
  bool dump_states = false;
  bool open_loop = false;

  auto* gen = app.add_subcommand("generate", "Generate a deterministic episode dataset");
  add_common(gen, common);
  gen->add_option("--seed-range", seed_range, "Seeds, A..B inclusive or a single seed")
      ->default_val("0..99");
  gen->add_option("--out", out, "Dataset directory")->required();

  auto* roll = app.add_subcommand("rollout", "Roll one aggregation mode over a dataset");
  add_common(roll, common);
  roll->add_option("--dataset", dataset, "Dataset directory")->required();
  roll->add_option("--mode", mode, "Aggregation mode")
      ->check(CLI::IsMember({"dsr", "nowarp", "singlestep", "gtwarp"}));
  roll->add_option("--predictor", predictor, "Motion predictor for dsr mode")
      ->check(CLI::IsMember({"oracle", "kinematic"}))
      ->default_val("kinematic");
  roll->add_option("--out", out, "Output directory")->required();
  roll->add_flag("--dump-states", dump_states, "Write every step's state volume");

  auto* eval = app.add_subcommand("eval", "Roll every aggregation mode and summarize");
  add_common(eval, common);
  eval->add_option("--dataset", dataset, "Dataset directory")->required();
  eval->add_option("--predictor", predictor, "Motion predictor for dsr mode")
      ->check(CLI::IsMember({"oracle", "kinematic"}))
      ->default_val("kinematic");
  eval->add_option("--out", out, "Output directory")->required();

  auto* plan = app.add_subcommand("plan", "Plan pushes toward policy-generated targets");
  add_common(plan, common);
  plan->add_option("--seed-range", seed_range, "Scene seeds")->default_val("0..19");
  plan->add_option("--predictor", predictor, "Motion predictor")
      ->check(CLI::IsMember({"oracle", "kinematic"}))
      ->default_val("oracle");
  plan->add_flag("--open-loop", open_loop, "Execute the first plan without replanning");
  plan->add_option("--out", out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("Usage", e.what());
    return 2;
  }

  try {
    const dsr::BenchConfig cfg = load_config(common);
    nlohmann::json summary;
    if (*gen) {
      const auto m = dsr::cmd_generate(cfg, dsr::parse_seed_range(seed_range), out);
      summary = {{"command", "generate"},
                 {"episodes", m.episodes.size()},
                 {"config_hash", m.config_hash},
                 {"out", out}};
    } else if (*roll) {
      const auto records = dsr::cmd_rollout(dataset, dsr::parse_mode(mode),
                                            dsr::parse_predictor(predictor), cfg, out, dump_states);
      summary = {{"command", "rollout"},
                 {"mode", mode},
                 {"episodes", records.size()},
                 {"iou_ordered", mean_of(records, &dsr::MetricsRecord::iou_ordered)},
                 {"iou_unordered", mean_of(records, &dsr::MetricsRecord::iou_unordered)}};
    } else if (*eval) {
      summary = dsr::cmd_eval(dataset, dsr::parse_predictor(predictor), cfg, out);
      summary["command"] = "eval";
    } else if (*plan) {
      const auto reports = dsr::cmd_plan(cfg, dsr::parse_seed_range(seed_range),
                                         dsr::parse_predictor(predictor), !open_loop, out);
      double achieved = 0.0;
      for (const auto& r : reports) achieved += r.achieved_iou;
      summary = {{"command", "plan"},
                 {"seeds", reports.size()},
                 {"mean_achieved_iou", reports.empty() ? 0.0 : achieved / reports.size()}};
    }
    std::cout << summary.dump() << "\n";
    return 0;
  } catch (const dsr::Error& e) {
    print_error(dsr::to_string(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    print_error("InvalidConfig", e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    print_error("Io", e.what());
  } catch (const std::exception& e) {
    print_error("Internal", e.what());
  }
  return 1;
}
