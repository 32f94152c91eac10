// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any fails. Pass criterion numbers as arguments to run a
// subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ebrake/experiment.hpp"
#include "ebrake/trajectory_io.hpp"
#include "u_oracle.hpp"

using namespace ebrake;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

fs::path scenario(const std::string& name) {
  return fs::path(EBRAKE_SOURCE_DIR) / "scenarios" / (name + ".yaml");
}

// ---- 1: brake model --------------------------------------------------------

Outcome brake_values() {
  // Hand evaluation of the parallel-plate, friction and lever chain.
  const double attraction = 8.854e-12 * 3.35 * 0.8e-4 * 1000.0 * 1000.0 /
                            (2.0 * 12.7e-6 * 12.7e-6);
  const double hand = 0.71 * attraction * 2.0 * 0.006;
  BrakeSpec one;
  const double t1 = max_brake_torque(one);
  const double rel_hand = std::abs(t1 - hand) / hand;
  const double rel_paper = std::abs(t1 - 62.7e-3) / 62.7e-3;
  double worst_linear = 0.0;
  for (int n = 1; n <= 8; ++n) {
    BrakeSpec s;
    s.num_stacks = n;
    worst_linear = std::max(worst_linear, std::abs(max_brake_torque(s) - n * t1) / (n * t1));
  }
  Outcome o;
  o.pass = rel_hand < 0.005 && rel_paper < 0.005 && worst_linear < 1e-9;
  o.detail = "torque " + fmt("%.4f", t1 * 1e3) + " mN*m (hand " + fmt("%.4f", hand * 1e3) +
             "), linearity deviation " + fmt("%.2e", worst_linear);
  return o;
}

// ---- 2: stick-slip threshold -----------------------------------------------

double breakaway(const SimModel& model, double angle) {
  auto slips = [&](double load) {
    WorldState s = model.mechanism.make_state(std::vector<double>{angle});
    Command cmd{{0.0}, {true}};
    cmd.external_torques = {load};
    for (int i = 0; i < 200; ++i) step_in_place(model, s, cmd, model.settings.dt);
    return std::abs(s.joint_angles[0] - angle) > 1e-6;
  };
  double lo = 0.0;
  double hi = 0.5;
  for (int i = 0; i < 40; ++i) {
    const double mid = 0.5 * (lo + hi);
    (slips(mid) ? hi : lo) = mid;
  }
  return hi;
}

Outcome stick_slip() {
  // A single braked joint as on the weighted lever rig: no tendon load.
  MechanismSpec spec;
  JointSpec j;
  j.brake.num_stacks = 2;
  spec.joints = {j};
  spec.motors = {MotorSpec{}};
  TendonRoute r;
  r.joints = {0};
  r.routing_signs = {1};
  r.rest_offset = -1.0;
  spec.tendons = {r};
  const SimModel model{Mechanism(spec), std::nullopt, SimSettings{}};

  double lo = 1e9;
  double hi = 0.0;
  for (int deg = -60; deg <= 60; deg += 10) {
    const double t = breakaway(model, deg2rad(deg));
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  const double target = 125.4e-3;
  const bool within = std::abs(lo - target) <= 0.05 * target && std::abs(hi - target) <= 0.05 * target;
  const bool flat = (hi - lo) <= 0.01 * lo;
  return {within && flat, "breakaway " + fmt("%.3f", lo * 1e3) + ".." + fmt("%.3f", hi * 1e3) +
                              " mN*m over -60..60 deg"};
}

// ---- 3: voting controller --------------------------------------------------

// Largest movement of any joint while its brake stays engaged.
double braked_drift(const Trajectory& t) {
  double worst = 0.0;
  if (t.commands.empty()) return worst;
  const std::size_t n = t.states.front().joint_angles.size();
  for (std::size_t j = 0; j < n; ++j) {
    std::optional<double> anchor;
    for (std::size_t k = 0; k < t.commands.size(); ++k) {
      if (!t.commands[k].brake_engaged[j]) {
        anchor.reset();
        continue;
      }
      if (!anchor) anchor = t.states[k].joint_angles[j];
      worst = std::max(worst, std::abs(t.states[k + 1].joint_angles[j] - *anchor));
    }
  }
  return worst;
}

Outcome voting() {
  const Scenario sc = load_scenario(scenario("chain10"));
  std::mt19937_64 rng(sc.seed);
  std::uniform_real_distribution<double> angle(-deg2rad(60.0), deg2rad(60.0));
  std::vector<std::vector<double>> targets(100, std::vector<double>(10));
  for (auto& t : targets) {
    for (double& a : t) a = angle(rng);
  }
  const ChainRunResult run = run_chain(sc, targets);
  int reached = 0;
  int worst_changes = 0;
  double worst_error = 0.0;
  double worst_drift = 0.0;
  for (std::size_t i = 0; i < run.records.size(); ++i) {
    const auto& r = run.records[i];
    reached += r.converged && r.max_error <= deg2rad(1.0) ? 1 : 0;
    worst_changes = std::max(worst_changes, r.direction_changes);
    worst_error = std::max(worst_error, r.max_error);
    worst_drift = std::max(worst_drift, braked_drift(run.trajectories[i]));
  }
  Outcome o;
  o.pass = reached == 100 && worst_changes <= 1 && worst_drift < deg2rad(0.1);
  o.detail = std::to_string(reached) + "/100 reached, max error " +
             fmt("%.3f", rad2deg(worst_error)) + " deg, max direction changes " +
             std::to_string(worst_changes) + ", max braked drift " +
             fmt("%.2e", rad2deg(worst_drift)) + " deg";
  return o;
}

// ---- 4: underactuation contrast -------------------------------------------

// Max-norm distance from the one-parameter family of equal joint angles.
double family_distance(const std::vector<double>& q) {
  const auto [lo, hi] = std::minmax_element(q.begin(), q.end());
  return 0.5 * (*hi - *lo);
}

WorldState drive_unbraked(const SimModel& model, const std::vector<std::pair<double, double>>& legs) {
  WorldState s = model.mechanism.make_state();
  const std::vector<bool> off(model.mechanism.num_joints(), false);
  for (const auto& [speed, seconds] : legs) {
    const Command cmd{{speed}, off};
    const int steps = static_cast<int>(std::lround(seconds / model.settings.dt));
    for (int i = 0; i < steps; ++i) step_in_place(model, s, cmd, model.settings.dt);
  }
  // Settle with the motor still.
  const Command hold{{0.0}, off};
  for (int i = 0; i < 2000; ++i) step_in_place(model, s, hold, model.settings.dt);
  return s;
}

Outcome underactuation() {
  const Scenario sc = load_scenario(scenario("chain10"));
  const SimModel model = make_model(sc);

  // Equal net motor displacement of 0.6 rad, reached two different ways.
  const WorldState a = drive_unbraked(model, {{0.3, 2.0}});
  const WorldState b = drive_unbraked(model, {{0.5, 1.0}, {-0.4, 0.5}, {0.5, 0.6}});
  double gap = 0.0;
  for (int j = 0; j < model.mechanism.num_joints(); ++j) {
    gap = std::max(gap, std::abs(a.joint_angles[j] - b.joint_angles[j]));
  }
  const double moved = std::abs(a.joint_angles[0]);

  std::vector<double> target;
  for (int j = 0; j < 10; ++j) target.push_back(deg2rad(j % 2 == 0 ? 30.0 : -30.0));
  const ChainRunResult braked = run_chain(sc, {target});
  const auto& final_q = braked.trajectories[0].states.back().joint_angles;
  const double off_family = family_distance(final_q);

  Outcome o;
  o.pass = gap <= deg2rad(0.5) && moved > deg2rad(1.0) && braked.records[0].converged &&
           off_family >= deg2rad(10.0);
  o.detail = "unbraked endpoints differ by " + fmt("%.2e", rad2deg(gap)) +
             " deg/joint; braked target reached " + fmt("%.1f", rad2deg(off_family)) +
             " deg from the unbraked family";
  return o;
}

// ---- 5: in-hand manipulation study ----------------------------------------

Outcome hand_study() {
  const Scenario sc = load_scenario(scenario("hand2x3"));
  ExperimentOptions opts;
  for (std::uint64_t s = 1; s <= 10; ++s) opts.seeds.push_back(s);
  opts.on_trial = [](Arm arm, const TrialRecord& r) {
    std::cout << "  " << arm_name(arm) << " seed " << r.seed << ": "
              << (r.success ? "success" : "failure") << " t=" << format_real(r.time_to_goal)
              << " s, error " << format_real(r.final_error_mm) << " mm\n"
              << std::flush;
  };
  ThreadPool pool(static_cast<int>(std::max(1u, std::thread::hardware_concurrency())));
  const ExperimentResult r = run_experiment(sc, opts, pool);
  const ArmSummary& on = r.arms[0].summary;
  const ArmSummary& off = r.arms[1].summary;

  Outcome o;
  o.pass = on.successes >= 9 && on.median_time_all < off.median_time_all &&
           on.median_error_mm <= off.median_error_mm && r.error_test.has_value();
  std::ostringstream d;
  d << "brakes_on " << on.successes << "/10, median time " << format_real(on.median_time_all)
    << " s, median error " << format_real(on.median_error_mm) << " mm; brakes_off "
    << off.successes << "/10, median time " << format_real(off.median_time_all)
    << " s, median error " << format_real(off.median_error_mm) << " mm; U test p(time)="
    << (r.time_test ? format_real(r.time_test->p_value) : std::string("n/a"))
    << " p(error)=" << (r.error_test ? format_real(r.error_test->p_value) : std::string("n/a"));
  o.detail = d.str();
  return o;
}

// ---- 6: MPPI unit properties ----------------------------------------------

Outcome mppi_properties() {
  std::vector<std::string> failed;
  auto expect = [&](bool ok, const char* what) {
    if (!ok) failed.push_back(what);
  };

  const std::vector<MotorPlan> seqs{MotorPlan{{0.1, -0.3}, {0.2, 0.4}},
                                    MotorPlan{{1.1, 0.3}, {-0.2, 0.9}},
                                    MotorPlan{{0.5, 0.5}, {0.7, -0.1}}};
  const std::vector<double> costs{0.42, 0.37, 0.55};
  const std::vector<double> shifted{57.42, 57.37, 57.55};
  const MotorPlan a = weighted_average(seqs, costs, 0.1);
  const MotorPlan b = weighted_average(seqs, shifted, 0.1);
  double shift_gap = 0.0;
  for (std::size_t h = 0; h < 2; ++h)
    for (std::size_t m = 0; m < 2; ++m) shift_gap = std::max(shift_gap, std::abs(a[h][m] - b[h][m]));
  expect(shift_gap <= 1e-9, "shift invariance");

  const std::vector<MotorPlan> one{seqs[1]};
  const std::vector<double> one_cost{3.0};
  expect(weighted_average(one, one_cost, 0.1) == seqs[1], "K=1 identity");

  expect(select_config(std::vector<double>{10.0, 7.4}, 0, 0.25) == 1, "26% lower switches");
  expect(select_config(std::vector<double>{10.0, 8.0}, 0, 0.25) == 0, "20% lower holds");

  const std::vector<int> out(11, 2);
  expect(std::abs(contact_distance_cost(out, -0.005, GoalSpec{0.045, 0.001}, MppiParams{}) - 12.2) <=
             1e-9,
         "J = 12.2 example");

  // One configuration: mppi_step must equal a plain MPPI update evaluated
  // here from the same sample streams.
  Scenario sc = load_scenario(scenario("hand2x3"));
  sc.integration.control_substeps = 20;
  const SimModel model = make_model(sc);
  const WorldState world = initial_state(sc, model);
  const GoalSpec goal{sc.mppi.goal_x, sc.mppi.success_tolerance};
  MppiParams p = sc.mppi.params;
  p.horizon = 4;
  p.num_rollouts = 16;
  p.seed = 5;
  p.parameterization = CommandParameterization::kAbsolute;
  const std::vector<std::vector<bool>> configs{std::vector<bool>(6, false)};
  ThreadPool pool(1);
  const MppiStepResult step = mppi_step(model, world, goal, p, configs, {}, pool);

  const auto& motors = model.mechanism.spec().motors;
  std::vector<double> sample_costs;
  std::vector<std::vector<double>> first_ticks;
  for (int k = 0; k < p.num_rollouts; ++k) {
    std::mt19937_64 rng(rollout_seed(p.seed, 0, 0, k));
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<Command> cmds;
    for (int h = 0; h < p.horizon; ++h) {
      std::vector<double> tick = world.motor_positions;
      for (std::size_t m = 0; m < tick.size(); ++m) {
        tick[m] = std::clamp(tick[m] + p.sigma * noise(rng), motors[m].min_position,
                             motors[m].max_position);
      }
      cmds.push_back(Command{tick, configs[0]});
    }
    sample_costs.push_back(trajectory_cost(model, rollout(model, world, cmds), goal, p));
    first_ticks.push_back(cmds[0].motor_commands);
  }
  const double best = *std::min_element(sample_costs.begin(), sample_costs.end());
  double total = 0.0;
  for (double c : sample_costs) total += std::exp(-(c - best) / p.lambda);
  double plain_gap = 0.0;
  for (std::size_t m = 0; m < motors.size(); ++m) {
    double want = 0.0;
    for (int k = 0; k < p.num_rollouts; ++k) {
      want += std::exp(-(sample_costs[k] - best) / p.lambda) / total * first_ticks[k][m];
    }
    plain_gap = std::max(plain_gap, std::abs(step.action.motor_targets[m] - want));
  }
  expect(plain_gap <= 1e-9 && step.action.brake_config == 0, "single-config reduction");

  Outcome o;
  o.pass = failed.empty();
  if (o.pass) {
    o.detail = "shift invariance, K=1, single-config reduction (gap " + fmt("%.1e", plain_gap) +
               "), 26%/20% hysteresis, J=12.2";
  } else {
    for (const auto& f : failed) o.detail += (o.detail.empty() ? "" : ", ") + f;
    o.detail = "failed: " + o.detail;
  }
  return o;
}

// ---- 7: determinism across thread counts ----------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "ebrake_acceptance_determinism";
  fs::remove_all(root);
  auto run = [&](int threads) {
    const fs::path out = root / ("threads" + std::to_string(threads));
    const std::string cmd = std::string("\"") + EBRAKE_CLI + "\" --quiet --seed 1 --threads " +
                            std::to_string(threads) + " --out \"" + out.string() +
                            "\" compare --scenario \"" + scenario("hand2x3").string() +
                            "\" --seeds 2";
    const int rc = std::system(cmd.c_str());
    return std::make_pair(rc, slurp(out / "metrics.json"));
  };
  const auto [rc1, json1] = run(1);
  const auto [rc3, json3] = run(3);
  Outcome o;
  o.pass = rc1 == 0 && rc3 == 0 && !json1.empty() && json1 == json3;
  o.detail = "metrics.json with --threads 1 and --threads 3: " +
             std::string(json1 == json3 ? "byte-identical" : "different") + " (" +
             std::to_string(json1.size()) + " bytes)";
  return o;
}

// ---- 8: exact U test --------------------------------------------------------

Outcome u_exact() {
  std::mt19937_64 rng(8);
  int cases = 0;
  double worst = 0.0;
  for (int n = 2; n <= 12; ++n) {
    for (int na = 1; na < n; ++na) {
      for (int trial = 0; trial < 4; ++trial) {
        std::uniform_int_distribution<int> values(0, trial < 2 ? 4 : 100000);
        std::vector<double> a, b;
        for (int i = 0; i < na; ++i) a.push_back(values(rng));
        for (int i = na; i < n; ++i) b.push_back(values(rng));
        const MannWhitneyResult r = mann_whitney_u(a, b);
        worst = std::max(worst, std::abs(r.p_value - ebrake::test::brute_force_p(a, b)));
        worst = std::max(worst, std::abs(r.u - ebrake::test::pairwise_u(a, b)));
        if (!r.exact) worst = 1.0;
        ++cases;
      }
    }
  }
  return {worst < 1e-12, std::to_string(cases) + " sample pairs with n <= 12, max deviation " +
                             fmt("%.1e", worst)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"brake model values", brake_values},
      {"stick-slip threshold", stick_slip},
      {"voting controller", voting},
      {"underactuation contrast", underactuation},
      {"in-hand manipulation study", hand_study},
      {"MPPI unit properties", mppi_properties},
      {"determinism", determinism},
      {"exact U test", u_exact},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << criteria[i].first
              << "): " << o.detail << " [" << fmt("%.1f", secs) << " s]\n"
              << std::flush;
  }
  return failures == 0 ? 0 : 1;
}
