#include "ebrake/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "ebrake/trajectory_io.hpp"

namespace ebrake {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// JSON has no infinities or NaNs; they are written as null.
nlohmann::json real_or_null(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

nlohmann::json mw_json(const MannWhitneyResult& r) {
  return {{"u", r.u}, {"p_value", r.p_value}, {"exact", r.exact}};
}

}  // namespace

std::string brake_table_csv(const BrakeSpec& base, int max_stacks) {
  if (max_stacks < 1) throw std::domain_error("brake_table_csv: max_stacks must be >= 1");
  std::ostringstream out;
  out << "stacks,force_N,torque_mNm,power_W\n";
  for (int n = 1; n <= max_stacks; ++n) {
    BrakeSpec spec = base;
    spec.num_stacks = n;
    out << n << ',' << format_real(max_brake_force(spec)) << ','
        << format_real(max_brake_torque(spec) * 1e3) << ',' << format_real(power_draw(spec))
        << '\n';
  }
  return out.str();
}

// ---- chain ----------------------------------------------------------------

ChainRunResult run_chain(const Scenario& scenario,
                         const std::vector<std::vector<double>>& targets) {
  const SimModel model = make_model(scenario);
  WorldState state = initial_state(scenario, model);
  VotingParams params;
  params.motor_speed = scenario.voting.motor_speed;
  params.control_period = scenario.voting.control_period;

  ChainRunResult result;
  for (const auto& t : targets) {
    TargetConfig target{t, scenario.voting.tolerance};
    const double start = state.sim_time;
    VotingRun run = run_to_config(model, state, target, scenario.voting.timeout, params);
    ChainTargetRecord rec;
    rec.target = t;
    rec.converged = run.converged;
    rec.direction_changes = run.direction_changes;
    rec.time = run.final_state.sim_time - start;
    for (std::size_t j = 0; j < t.size(); ++j) {
      rec.max_error = std::max(rec.max_error, std::abs(t[j] - run.final_state.joint_angles[j]));
    }
    state = run.final_state;
    result.records.push_back(std::move(rec));
    result.trajectories.push_back(std::move(run.trajectory));
  }
  return result;
}

std::vector<std::vector<double>> load_targets_deg(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path.string() + ": cannot open targets file");
  std::vector<std::vector<double>> targets;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    std::vector<double> row;
    std::string tok;
    while (fields >> tok) {
      try {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        row.push_back(deg2rad(v));
      } catch (const std::exception&) {
        throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                 ": not a number: '" + tok + "'");
      }
    }
    targets.push_back(std::move(row));
  }
  return targets;
}

nlohmann::json chain_metrics_json(const ChainRunResult& result) {
  nlohmann::json targets = nlohmann::json::array();
  int converged = 0;
  double worst = 0.0;
  int max_changes = 0;
  for (const auto& r : result.records) {
    std::vector<double> deg;
    for (double a : r.target) deg.push_back(rad2deg(a));
    targets.push_back({{"target_deg", deg},
                       {"converged", r.converged},
                       {"max_error_deg", rad2deg(r.max_error)},
                       {"direction_changes", r.direction_changes},
                       {"time_s", r.time}});
    converged += r.converged ? 1 : 0;
    worst = std::max(worst, r.max_error);
    max_changes = std::max(max_changes, r.direction_changes);
  }
  return {{"targets", targets},
          {"summary",
           {{"count", result.records.size()},
            {"converged", converged},
            {"max_error_deg", rad2deg(worst)},
            {"max_direction_changes", max_changes}}}};
}

// ---- hand study -----------------------------------------------------------

const char* arm_name(Arm arm) {
  return arm == Arm::kBrakesOn ? "brakes_on" : "brakes_off";
}

TrialResult run_hand_trial(const Scenario& scenario, Arm arm, std::uint64_t seed,
                           ThreadPool& pool, const TrialOptions& options) {
  const SimModel model = make_model(scenario);
  const MppiSettings& settings = scenario.mppi;
  MppiParams params = settings.params;
  params.seed = seed;
  const GoalSpec goal{settings.goal_x, settings.success_tolerance};
  const double timeout = options.timeout.value_or(settings.timeout);
  const int joints = model.mechanism.num_joints();

  std::vector<std::vector<bool>> configs;
  if (arm == Arm::kBrakesOn) {
    configs = enumerate_brake_configs(finger_groups(model.mechanism.spec()), joints);
  } else {
    configs = {std::vector<bool>(joints, false)};
  }
  // Keep the per-configuration sample count, and so the total, divisible.
  params.num_rollouts -= params.num_rollouts % static_cast<int>(configs.size());
  if (params.num_rollouts == 0) params.num_rollouts = static_cast<int>(configs.size());

  const double dt = model.settings.dt;
  const int substeps = model.settings.control_substeps;
  const double tick = dt * substeps;

  TrialResult out;
  TrialRecord& rec = out.record;
  rec.seed = seed;
  out.trajectory.dt = tick;

  WorldState world = initial_state(scenario, model);
  out.trajectory.states.push_back(world);
  MppiPlan plan;
  std::optional<int> last_config;

  // Best error seen at each control tick, for the no-progress rule.
  std::deque<std::pair<double, double>> history;
  double best = kInf;
  const double start = world.sim_time;

  auto error_of = [&](const WorldState& s) { return std::abs(goal.goal_x - s.object_position.x); };

  try {
    while (true) {
      const double err = error_of(world);
      const double elapsed = world.sim_time - start;
      best = std::min(best, err);
      if (options.progress) options.progress(elapsed, err);
      if (err < goal.success_tolerance) {
        rec.success = true;
        break;
      }
      history.emplace_back(elapsed, best);
      while (history.size() > 1 && elapsed - history[1].first >= settings.stall_window) {
        history.pop_front();
      }
      if (elapsed - history.front().first >= settings.stall_window - 1e-9 &&
          history.front().second - best < settings.stall_progress) {
        rec.failure = "no progress";
        break;
      }
      if (elapsed >= timeout - 1e-9) {
        rec.failure = "timeout";
        break;
      }

      MppiStepResult step = mppi_step(model, world, goal, params, configs, plan, pool);
      plan = std::move(step.plan);
      const int chosen = step.action.brake_config;
      if (last_config && *last_config != chosen) ++rec.config_switches;
      last_config = chosen;

      Command cmd;
      cmd.motor_commands = step.action.motor_targets;
      cmd.brake_engaged = configs[chosen];
      for (int k = 0; k < substeps; ++k) step_in_place(model, world, cmd, dt);
      ++rec.control_steps;
      out.trajectory.commands.push_back(std::move(cmd));
      out.trajectory.states.push_back(world);
    }
  } catch (const IntegrationFault& e) {
    rec.success = false;
    rec.failure = std::string("simulation fault: ") + e.what();
  }

  rec.time_to_goal = rec.control_steps * tick;
  rec.final_error_mm = error_of(world) * 1e3;
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  const double lo = values[n / 2 - 1];
  const double hi = values[n / 2];
  if (std::isinf(hi)) return hi;
  return 0.5 * (lo + hi);
}

double mean(const std::vector<double>& values) {
  if (values.empty()) return kNaN;
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double sample_std(const std::vector<double>& values) {
  if (values.size() < 2) return values.empty() ? kNaN : 0.0;
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

ArmSummary summarize(Arm arm, const std::vector<TrialRecord>& records) {
  ArmSummary s;
  s.arm = arm;
  s.trials = static_cast<int>(records.size());
  std::vector<double> times, times_all, errors;
  for (const auto& r : records) {
    if (r.success) {
      ++s.successes;
      times.push_back(r.time_to_goal);
    }
    times_all.push_back(r.success ? r.time_to_goal : kInf);
    errors.push_back(r.final_error_mm);
  }
  s.mean_time = mean(times);
  s.std_time = sample_std(times);
  s.median_time = median(times);
  s.median_time_all = median(times_all);
  s.mean_error_mm = mean(errors);
  s.std_error_mm = sample_std(errors);
  s.median_error_mm = median(errors);
  return s;
}

ExperimentResult run_experiment(const Scenario& scenario, const ExperimentOptions& options,
                                ThreadPool& pool) {
  if (options.seeds.empty()) throw std::invalid_argument("run_experiment: no seeds");
  if (options.arms.empty()) throw std::invalid_argument("run_experiment: no arms");
  ExperimentResult result;
  result.scenario = scenario.name;
  result.goal_x = scenario.mppi.goal_x;
  if (options.trajectory_dir) std::filesystem::create_directories(*options.trajectory_dir);

  TrialOptions trial_options;
  trial_options.timeout = options.timeout;
  for (Arm arm : options.arms) {
    ArmResult ar;
    for (std::uint64_t seed : options.seeds) {
      TrialResult t = run_hand_trial(scenario, arm, seed, pool, trial_options);
      if (options.trajectory_dir) {
        const std::string name =
            std::string(arm_name(arm)) + "_seed" + std::to_string(seed) + ".csv";
        write_trajectory_csv(*options.trajectory_dir / name, t.trajectory);
        t.record.trajectory_file = name;
      }
      if (options.on_trial) options.on_trial(arm, t.record);
      ar.records.push_back(std::move(t.record));
    }
    ar.summary = summarize(arm, ar.records);
    result.arms.push_back(std::move(ar));
  }

  if (result.arms.size() == 2) {
    auto times = [](const ArmResult& a) {
      std::vector<double> v;
      for (const auto& r : a.records) {
        if (r.success) v.push_back(r.time_to_goal);
      }
      return v;
    };
    auto errors = [](const ArmResult& a) {
      std::vector<double> v;
      for (const auto& r : a.records) v.push_back(r.final_error_mm);
      return v;
    };
    const auto ta = times(result.arms[0]);
    const auto tb = times(result.arms[1]);
    if (!ta.empty() && !tb.empty()) result.time_test = mann_whitney_u(ta, tb);
    result.error_test = mann_whitney_u(errors(result.arms[0]), errors(result.arms[1]));
  }
  return result;
}

nlohmann::json metrics_json(const ExperimentResult& result) {
  nlohmann::json arms = nlohmann::json::object();
  for (const ArmResult& a : result.arms) {
    nlohmann::json trials = nlohmann::json::array();
    for (const TrialRecord& r : a.records) {
      nlohmann::json t = {{"seed", r.seed},
                          {"success", r.success},
                          {"time_to_goal_s", r.time_to_goal},
                          {"final_error_mm", r.final_error_mm},
                          {"config_switches", r.config_switches},
                          {"control_steps", r.control_steps}};
      if (!r.failure.empty()) t["failure"] = r.failure;
      if (!r.trajectory_file.empty()) t["trajectory"] = r.trajectory_file;
      trials.push_back(std::move(t));
    }
    const ArmSummary& s = a.summary;
    arms[arm_name(s.arm)] = {
        {"trials", trials},
        {"summary",
         {{"trials", s.trials},
          {"successes", s.successes},
          {"mean_time_s", real_or_null(s.mean_time)},
          {"std_time_s", real_or_null(s.std_time)},
          {"median_time_s", real_or_null(s.median_time)},
          {"median_time_all_s", real_or_null(s.median_time_all)},
          {"mean_error_mm", real_or_null(s.mean_error_mm)},
          {"std_error_mm", real_or_null(s.std_error_mm)},
          {"median_error_mm", real_or_null(s.median_error_mm)}}}};
  }
  nlohmann::json j = {{"scenario", result.scenario}, {"goal_x", result.goal_x}, {"arms", arms}};
  if (result.time_test || result.error_test) {
    nlohmann::json cmp = nlohmann::json::object();
    if (result.time_test) cmp["time_to_goal"] = mw_json(*result.time_test);
    if (result.error_test) cmp["final_error"] = mw_json(*result.error_test);
    j["mann_whitney"] = cmp;
  }
  return j;
}

}  // namespace ebrake
