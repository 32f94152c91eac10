// Command-line front end: brake tables, chain configuration runs, and the
// brakes-on / brakes-off hand study.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ebrake/experiment.hpp"
#include "ebrake/trajectory_io.hpp"

namespace fs = std::filesystem;
using namespace ebrake;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kValidation = 2, kSimulation = 3 };

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  std::string out;
  int threads = 1;
  std::optional<double> timeout;
  bool quiet = false;
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error(path.string() + ": cannot open for writing");
  f << text;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

std::vector<std::uint64_t> seed_list(std::uint64_t first, int count) {
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < count; ++i) seeds.push_back(first + static_cast<std::uint64_t>(i));
  return seeds;
}

void log_trial(const GlobalOptions& g, Arm arm, const TrialRecord& r) {
  if (g.quiet) return;
  std::cerr << arm_name(arm) << " seed " << r.seed << ": "
            << (r.success ? "success" : "failure") << " t=" << format_real(r.time_to_goal)
            << " s err=" << format_real(r.final_error_mm) << " mm";
  if (!r.failure.empty()) std::cerr << " (" << r.failure << ")";
  std::cerr << '\n';
}

bool any_fault(const ExperimentResult& result) {
  for (const auto& arm : result.arms) {
    for (const auto& r : arm.records) {
      if (r.failure.rfind("simulation fault", 0) == 0) return true;
    }
  }
  return false;
}

int cmd_brake_metrics(const GlobalOptions& g, const std::string& scenario_path,
                      int max_stacks) {
  BrakeSpec spec;
  if (!scenario_path.empty()) spec = load_scenario(scenario_path).brake_defaults;
  validate(spec);
  const std::string csv = brake_table_csv(spec, max_stacks);
  if (g.out.empty()) {
    std::cout << csv;
  } else {
    write_text(g.out, csv);
  }
  return kOk;
}

int cmd_run_chain(const GlobalOptions& g, const std::string& scenario_path,
                  const std::string& targets_path, int random_targets) {
  Scenario sc = load_scenario(scenario_path);
  std::vector<std::vector<double>> targets;
  if (!targets_path.empty()) targets = load_targets_deg(targets_path);
  if (random_targets > 0) {
    std::mt19937_64 rng(g.seed.value_or(sc.seed));
    const Mechanism mech(sc.mechanism);
    for (int i = 0; i < random_targets; ++i) {
      std::vector<double> t;
      for (int j = 0; j < mech.num_joints(); ++j) {
        const auto& lim = mech.joint(j).limits;
        t.push_back(std::uniform_real_distribution<double>(lim.lower, lim.upper)(rng));
      }
      targets.push_back(std::move(t));
    }
  }
  if (targets.empty()) throw std::invalid_argument("run-chain: no targets given");
  for (const auto& t : targets) {
    validate_target(Mechanism(sc.mechanism), TargetConfig{t, sc.voting.tolerance});
  }

  const ChainRunResult result = run_chain(sc, targets);
  const nlohmann::json metrics = chain_metrics_json(result);
  if (g.out.empty()) {
    std::cout << metrics.dump(2) << '\n';
  } else {
    const fs::path dir(g.out);
    fs::create_directories(dir);
    for (std::size_t i = 0; i < result.trajectories.size(); ++i) {
      write_trajectory_csv(dir / ("target" + std::to_string(i) + ".csv"),
                           result.trajectories[i]);
    }
    write_json(dir / "metrics.json", metrics);
  }
  if (!g.quiet) {
    const auto& s = metrics["summary"];
    std::cerr << "run-chain: " << s["converged"].get<int>() << "/" << s["count"].get<int>()
              << " targets converged, max error "
              << format_real(s["max_error_deg"].get<double>()) << " deg\n";
  }
  return kOk;
}

int cmd_hand(const GlobalOptions& g, const std::string& scenario_path,
             std::optional<double> goal_x, std::vector<Arm> arms, int seeds) {
  Scenario sc = load_scenario(scenario_path);
  if (sc.controller != ControllerKind::kMppi) {
    throw std::invalid_argument(scenario_path + ": the hand study needs an mppi controller");
  }
  if (goal_x) sc.mppi.goal_x = *goal_x;
  if (seeds < 1) throw std::invalid_argument("--seeds must be >= 1");

  ExperimentOptions opts;
  opts.arms = std::move(arms);
  opts.seeds = seed_list(g.seed.value_or(sc.seed), seeds);
  opts.timeout = g.timeout;
  if (!g.out.empty()) opts.trajectory_dir = fs::path(g.out);
  opts.on_trial = [&](Arm arm, const TrialRecord& r) { log_trial(g, arm, r); };

  ThreadPool pool(g.threads);
  const ExperimentResult result = run_experiment(sc, opts, pool);
  const nlohmann::json metrics = metrics_json(result);
  if (g.out.empty()) {
    std::cout << metrics.dump(2) << '\n';
  } else {
    write_json(fs::path(g.out) / "metrics.json", metrics);
  }
  return any_fault(result) ? kSimulation : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Electrostatic brake mechanism simulator"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--seed", g.seed, "Master seed (defaults to the scenario seed)");
  app.add_option("--out", g.out, "Output directory (file for brake-metrics)");
  app.add_option("--threads", g.threads, "Worker threads for rollouts")
      ->check(CLI::PositiveNumber);
  app.add_option("--timeout", g.timeout, "Per-trial timeout override, s of sim time")
      ->check(CLI::PositiveNumber);
  app.add_flag("--quiet", g.quiet, "Suppress progress output");

  std::string scenario;
  int max_stacks = 8;
  auto* brake = app.add_subcommand("brake-metrics", "Force, torque and power per stack count");
  brake->add_option("--scenario", scenario, "Take the brake parameters from a scenario");
  brake->add_option("--stacks", max_stacks, "Largest stack count")->check(CLI::PositiveNumber);

  std::string targets;
  int random_targets = 0;
  auto* chain = app.add_subcommand("run-chain", "Drive a chain through target configurations");
  chain->add_option("--scenario", scenario)->required();
  chain->add_option("--targets", targets, "Target file, one configuration per line, degrees");
  chain->add_option("--random", random_targets, "Append this many uniform random targets");

  std::optional<double> goal_x;
  std::string brakes = "on";
  int seeds = 10;
  auto* hand = app.add_subcommand("run-hand", "Run the hand study for one arm");
  hand->add_option("--scenario", scenario)->required();
  hand->add_option("--goal-x", goal_x, "Goal x of the object, m");
  hand->add_option("--brakes", brakes, "Arm to run")->check(CLI::IsMember({"on", "off"}));
  hand->add_option("--seeds", seeds, "Number of consecutive seeds");

  auto* compare = app.add_subcommand("compare", "Run both arms and the Mann-Whitney U tests");
  compare->add_option("--scenario", scenario)->required();
  compare->add_option("--goal-x", goal_x, "Goal x of the object, m");
  compare->add_option("--seeds", seeds, "Number of consecutive seeds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*brake) return cmd_brake_metrics(g, scenario, max_stacks);
    if (*chain) return cmd_run_chain(g, scenario, targets, random_targets);
    if (*hand) {
      return cmd_hand(g, scenario, goal_x, {brakes == "on" ? Arm::kBrakesOn : Arm::kBrakesOff},
                      seeds);
    }
    if (*compare) return cmd_hand(g, scenario, goal_x, {Arm::kBrakesOn, Arm::kBrakesOff}, seeds);
  } catch (const IntegrationFault& e) {
    std::cerr << "simulation fault: " << e.what() << '\n';
    return kSimulation;
  } catch (const ScenarioError& e) {
    std::cerr << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  }
  return kUsage;
}
