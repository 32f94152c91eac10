#pragma once

// Experiment orchestration: chain configuration runs, the brakes-on versus
// brakes-off in-hand manipulation study, aggregate statistics and the
// machine-readable outputs written by the CLI.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ebrake/control_voting.hpp"
#include "ebrake/mann_whitney.hpp"
#include "ebrake/scenario.hpp"
#include "ebrake/thread_pool.hpp"

namespace ebrake {

// ---- brake table ----------------------------------------------------------

// Header plus one row per stack count 1..max_stacks:
// stacks,force_N,torque_mNm,power_W. Throws std::domain_error when
// max_stacks < 1.
std::string brake_table_csv(const BrakeSpec& base, int max_stacks);

// ---- chain runs -----------------------------------------------------------

struct ChainTargetRecord {
  std::vector<double> target;  // rad
  bool converged = false;
  double max_error = 0.0;  // rad
  int direction_changes = 0;
  double time = 0.0;  // s of simulated time
};

struct ChainRunResult {
  std::vector<ChainTargetRecord> records;
  std::vector<Trajectory> trajectories;
};

// Drives the chain through the targets in order, each from the state the
// previous one ended in.
ChainRunResult run_chain(const Scenario& scenario,
                         const std::vector<std::vector<double>>& targets);

// One target per line, whitespace or comma separated, in degrees. Lines
// starting with '#' are ignored. Throws std::runtime_error on malformed input.
std::vector<std::vector<double>> load_targets_deg(const std::filesystem::path& path);

nlohmann::json chain_metrics_json(const ChainRunResult& result);

// ---- hand study -----------------------------------------------------------

enum class Arm { kBrakesOn, kBrakesOff };

const char* arm_name(Arm arm);

struct TrialRecord {
  std::uint64_t seed = 0;
  bool success = false;
  double time_to_goal = 0.0;  // s; time of termination for failures
  double final_error_mm = 0.0;
  int config_switches = 0;
  int control_steps = 0;
  std::string failure;  // empty on success
  std::string trajectory_file;
};

struct TrialResult {
  TrialRecord record;
  Trajectory trajectory;  // one state per control tick
};

struct TrialOptions {
  std::optional<double> timeout;  // overrides the scenario timeout
  // Called once per control tick with the current sim time and error (m).
  std::function<void(double, double)> progress;
};

// A single closed-loop trial. brakes-off forces every brake off and runs
// with a single configuration; brakes-on uses every one-unbraked-joint-per-
// finger configuration. Never throws on simulation faults; they end the
// trial as a failure.
TrialResult run_hand_trial(const Scenario& scenario, Arm arm, std::uint64_t seed,
                           ThreadPool& pool, const TrialOptions& options = {});

struct ArmSummary {
  Arm arm = Arm::kBrakesOn;
  int trials = 0;
  int successes = 0;
  // Over successful trials only; NaN when there are none.
  double mean_time = 0.0;
  double std_time = 0.0;
  double median_time = 0.0;
  // Over all trials, failures counted as infinitely slow.
  double median_time_all = 0.0;
  double mean_error_mm = 0.0;
  double std_error_mm = 0.0;
  double median_error_mm = 0.0;  // all trials
};

ArmSummary summarize(Arm arm, const std::vector<TrialRecord>& records);

struct ArmResult {
  ArmSummary summary;
  std::vector<TrialRecord> records;
};

struct ExperimentResult {
  std::string scenario;
  double goal_x = 0.0;
  std::vector<ArmResult> arms;
  // Present when both arms ran: time-to-goal over successful trials, and
  // final error over all trials.
  std::optional<MannWhitneyResult> time_test;
  std::optional<MannWhitneyResult> error_test;
};

struct ExperimentOptions {
  std::vector<Arm> arms{Arm::kBrakesOn, Arm::kBrakesOff};
  std::vector<std::uint64_t> seeds;
  std::optional<double> timeout;
  // When set, each trial's trajectory CSV is written here.
  std::optional<std::filesystem::path> trajectory_dir;
  std::function<void(Arm, const TrialRecord&)> on_trial;
};

ExperimentResult run_experiment(const Scenario& scenario, const ExperimentOptions& options,
                                ThreadPool& pool);

// Deterministic: depends only on the scenario, seeds and arms.
nlohmann::json metrics_json(const ExperimentResult& result);

// Sample statistics helpers, exposed for the tests.
double median(std::vector<double> values);
double mean(const std::vector<double>& values);
double sample_std(const std::vector<double>& values);

}  // namespace ebrake
