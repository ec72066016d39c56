#include "stopt/log.hpp"
#include "stopt/scenario_io.hpp"
#include "stopt/seed_planner.hpp"
#include "stopt/sto.hpp"
#include "stopt/svg.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace stopt;

namespace {

enum ExitCode : int {
  kOk = 0,
  kScenarioFailure = 2,
  kPlannerFailure = 3,
  kOptimizerFailure = 4,
  kOutputFailure = 5,
};

struct RunConfig {
  std::string scenario;
  std::string mode = "sto";
  std::string out = "out";
  bool plot = false;
  bool no_seed_planner = false;
  bool dump_corridor = false;
  bool dump_qp = false;
  double timestep = 0.0;
  std::uint64_t seed = 0;
};

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << content;
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

int run(const RunConfig& cfg) {
  Scenario scenario;
  try {
    scenario = load_scenario_source(cfg.scenario);
    if (cfg.timestep != 0.0) {
      scenario.params.timestep = cfg.timestep;
      scenario.params.validate();
    }
  } catch (const std::exception& e) {
    std::cerr << "stopt: " << cfg.scenario << ": " << e.what() << '\n';
    return kScenarioFailure;
  }

  std::vector<Mode> modes;
  if (cfg.mode == "both") {
    modes = {Mode::Sto, Mode::Baseline};
  } else if (auto m = parse_mode(cfg.mode)) {
    modes = {*m};
  } else {
    std::cerr << "stopt: unknown mode '" << cfg.mode << "'\n";
    return kScenarioFailure;
  }

  const auto obstacles = scenario.buffered_obstacles();
  LabeledPath seed;
  std::string seed_source;
  double planner_seconds = 0.0;
  if (cfg.no_seed_planner) {
    if (!scenario.seed_path) {
      std::cerr << "stopt: --no-seed-planner needs a seed_path in the scenario\n";
      return kScenarioFailure;
    }
    seed = *scenario.seed_path;
    seed_source = "scenario";
  } else {
    SeedPlannerOptions opts;
    opts.kappa_max = scenario.params.kappa_max;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      seed = plan_seed_path(scenario.start, scenario.goal, obstacles, scenario.vehicle, opts);
    } catch (const PlannerFailure& e) {
      std::cerr << "stopt: seed planner failed: " << e.what()
                << " (supply seed_path in the scenario and pass --no-seed-planner)\n";
      return kPlannerFailure;
    }
    planner_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    seed_source = "planner";
  }
  log::info("seed path: ", seed.segments.size(), " segments");

  std::vector<ModeRun> runs;
  bool all_converged = true;
  for (Mode mode : modes) {
    OptimizeOptions opts;
    if (cfg.dump_qp) opts.dump_qp_dir = fs::path(cfg.out) / ("qp_" + std::string(to_string(mode)));
    opts.keep_corridors = cfg.dump_corridor || cfg.plot;
    ModeRun run{mode, {}};
    try {
      run.result = optimize(seed, obstacles, scenario.vehicle, scenario.params, mode, opts);
    } catch (const std::exception& e) {
      std::cerr << "stopt: optimizer error (" << to_string(mode) << "): " << e.what() << '\n';
      return kOptimizerFailure;
    }
    all_converged = all_converged && run.result.status == StoStatus::Converged;
    std::printf("%-8s status=%s iterations=%d length=%.4f m time=%.3f s\n",
                std::string(to_string(mode)).c_str(),
                std::string(to_string(run.result.status)).c_str(), run.result.iterations,
                path_length(run.result.trajectory), run.result.total_seconds);
    runs.push_back(std::move(run));
  }

  try {
    const fs::path out(cfg.out);
    fs::create_directories(out);
    RunReportInput report{scenario.name, seed_source, cfg.seed, &seed, planner_seconds, runs};
    write_file(out / "report.json", run_report_json(report));
    for (const auto& run : runs) {
      const std::string tag(to_string(run.mode));
      write_file(out / ("trajectory_" + tag + ".csv"), trajectory_csv(run.result.trajectory));
      if (cfg.dump_corridor) {
        write_file(out / ("corridor_" + tag + ".json"), corridor_json(run.result));
      }
      if (cfg.plot) {
        const Corridor* corridor =
            run.result.corridors.empty() ? nullptr : &run.result.corridors.front();
        write_file(out / ("trajectory_" + tag + ".svg"),
                   trajectory_svg(scenario, run.result.trajectory, &seed, corridor,
                                  scenario.name + " (" + tag + ")"));
        write_file(out / ("profile_" + tag + ".svg"),
                   profile_svg(run.result.trajectory, scenario.params,
                               scenario.name + " (" + tag + ")"));
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "stopt: " << e.what() << '\n';
    return kOutputFailure;
  }

  if (runs.size() == 2) {
    const double ls = path_length(runs[0].result.trajectory);
    const double lb = path_length(runs[1].result.trajectory);
    std::printf("sto %.4f m vs baseline %.4f m (%.2f%% shorter)\n", ls, lb,
                lb > 0 ? 100.0 * (lb - ls) / lb : 0.0);
  }
  return all_converged ? kOk : kOptimizerFailure;
}

int embed_seed(const std::string& source) {
  Scenario scenario;
  try {
    scenario = load_scenario_source(source);
  } catch (const std::exception& e) {
    std::cerr << "stopt: " << source << ": " << e.what() << '\n';
    return kScenarioFailure;
  }
  SeedPlannerOptions opts;
  opts.kappa_max = scenario.params.kappa_max;
  try {
    scenario.seed_path = plan_seed_path(scenario.start, scenario.goal,
                                        scenario.buffered_obstacles(), scenario.vehicle, opts);
  } catch (const PlannerFailure& e) {
    std::cerr << "stopt: seed planner failed: " << e.what() << '\n';
    return kPlannerFailure;
  }
  std::cout << save_scenario(scenario);
  return kOk;
}

void add_run_options(CLI::App& cmd, RunConfig& cfg, bool with_mode) {
  cmd.add_option("--scenario", cfg.scenario, "scenario file or built-in name")->required();
  if (with_mode) {
    cmd.add_option("--mode", cfg.mode, "sto, baseline or both")
        ->check(CLI::IsMember({"sto", "baseline", "both"}));
  }
  cmd.add_option("--out", cfg.out, "output directory");
  cmd.add_flag("--plot", cfg.plot, "write SVG plots");
  cmd.add_flag("--no-seed-planner", cfg.no_seed_planner, "use the scenario's seed_path");
  cmd.add_flag("--dump-corridor", cfg.dump_corridor, "write corridor regions as JSON");
  cmd.add_flag("--dump-qp", cfg.dump_qp, "write every QP subproblem in MatrixMarket form");
  cmd.add_option("--timestep", cfg.timestep, "override the scenario timestep [s]")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--seed", cfg.seed, "recorded in the report; the pipeline is deterministic");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Segmented trajectory optimization for parking maneuvers"};
  app.require_subcommand(1);

  RunConfig run_cfg;
  auto* run_cmd = app.add_subcommand("run", "optimize a scenario");
  add_run_options(*run_cmd, run_cfg, true);

  RunConfig cmp_cfg;
  cmp_cfg.mode = "both";
  auto* cmp_cmd = app.add_subcommand("compare", "run sto and baseline on the same seed path");
  add_run_options(*cmp_cmd, cmp_cfg, false);

  std::string export_name;
  auto* export_cmd = app.add_subcommand("export-scenario", "print a built-in scenario");
  export_cmd->add_option("name", export_name)->required();

  std::string seed_scenario;
  auto* seed_cmd =
      app.add_subcommand("seed", "print the scenario with the planned seed path embedded");
  seed_cmd->add_option("--scenario", seed_scenario, "scenario file or built-in name")->required();

  app.add_subcommand("list", "list built-in scenarios");

  CLI11_PARSE(app, argc, argv);

  if (run_cmd->parsed()) return run(run_cfg);
  if (cmp_cmd->parsed()) return run(cmp_cfg);
  if (seed_cmd->parsed()) return embed_seed(seed_scenario);
  if (export_cmd->parsed()) {
    const auto text = builtin_scenario_text(export_name);
    if (!text) {
      std::cerr << "stopt: no built-in scenario named '" << export_name << "'\n";
      return kScenarioFailure;
    }
    std::cout << *text;
    return kOk;
  }
  for (auto name : builtin_scenario_names()) std::cout << name << '\n';
  return kOk;
}
