#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "ebrake/experiment.hpp"
#include "test_support.hpp"

using namespace ebrake;
namespace fs = std::filesystem;

namespace {

TrialRecord trial(bool success, double time, double error_mm) {
  TrialRecord r;
  r.success = success;
  r.time_to_goal = time;
  r.final_error_mm = error_mm;
  return r;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ebrake_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("sample statistics") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK(std::isnan(median({})));
  CHECK(mean({1.0, 2.0, 6.0}) == 3.0);
  CHECK(sample_std({2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0}) ==
        doctest::Approx(std::sqrt(32.0 / 7.0)));
  CHECK(sample_std({5.0}) == 0.0);
}

TEST_CASE("arm summary") {
  const std::vector<TrialRecord> records{trial(true, 10.0, 0.5), trial(true, 20.0, 0.7),
                                         trial(false, 180.0, 9.0), trial(true, 30.0, 0.2)};
  const ArmSummary s = summarize(Arm::kBrakesOn, records);
  CHECK(s.trials == 4);
  CHECK(s.successes == 3);
  CHECK(s.mean_time == 20.0);
  CHECK(s.std_time == doctest::Approx(10.0));
  CHECK(s.median_time == 20.0);
  CHECK(s.median_time_all == 25.0);  // failure ranks as the slowest
  CHECK(s.mean_error_mm == doctest::Approx(2.6));
  CHECK(s.median_error_mm == doctest::Approx(0.6));

  const ArmSummary none = summarize(Arm::kBrakesOff, {trial(false, 180.0, 5.0)});
  CHECK(std::isnan(none.mean_time));
  CHECK(std::isinf(none.median_time_all));
}

TEST_CASE("metrics JSON writes non-finite values as null") {
  ExperimentResult r;
  r.scenario = "x";
  ArmResult a;
  a.records = {trial(false, 180.0, 5.0)};
  a.summary = summarize(Arm::kBrakesOff, a.records);
  r.arms.push_back(a);
  const nlohmann::json j = metrics_json(r);
  const auto& s = j["arms"]["brakes_off"]["summary"];
  CHECK(s["mean_time_s"].is_null());
  CHECK(s["median_time_all_s"].is_null());
  CHECK(s["median_error_mm"] == 5.0);
  CHECK_FALSE(j.contains("mann_whitney"));
}

TEST_CASE("targets file") {
  const fs::path dir = fresh_dir("targets");
  fs::create_directories(dir);
  const fs::path file = dir / "t.txt";
  {
    std::ofstream out(file);
    out << "# comment\n10, -20 30\n\n  0 0 0\n";
  }
  const auto t = load_targets_deg(file);
  REQUIRE(t.size() == 2);
  CHECK(t[0][1] == doctest::Approx(deg2rad(-20.0)));
  CHECK(t[1] == std::vector<double>(3, 0.0));

  {
    std::ofstream out(file);
    out << "1 2\n3 x\n";
  }
  CHECK_THROWS_WITH_AS(load_targets_deg(file), doctest::Contains(":2:"), std::runtime_error);
  CHECK_THROWS_AS(load_targets_deg(dir / "missing.txt"), std::runtime_error);
}

TEST_CASE("chain runs continue from the previous target") {
  const Scenario sc = load_scenario(ebrake::test::scenario_path("chain10"));
  std::vector<std::vector<double>> targets(2, std::vector<double>(10, 0.0));
  targets[0][3] = deg2rad(15.0);
  targets[1][3] = deg2rad(-5.0);
  targets[1][7] = deg2rad(8.0);
  const ChainRunResult run = run_chain(sc, targets);
  REQUIRE(run.records.size() == 2);
  CHECK(run.records[0].converged);
  CHECK(run.records[1].converged);
  CHECK(run.trajectories[1].states.front() == run.trajectories[0].states.back());
  const nlohmann::json j = chain_metrics_json(run);
  CHECK(j["summary"]["converged"] == 2);
  CHECK(j["summary"]["max_error_deg"].get<double>() <= 0.5);
}

TEST_CASE("experiment bookkeeping") {
  Scenario sc = load_scenario(ebrake::test::scenario_path("hand2x3"));
  sc.mppi.params.num_rollouts = 9;
  ExperimentOptions opts;
  for (std::uint64_t s = 1; s <= 10; ++s) opts.seeds.push_back(s);
  opts.timeout = 0.4;
  opts.trajectory_dir = fresh_dir("bookkeeping");
  ThreadPool pool(1);
  const ExperimentResult r = run_experiment(sc, opts, pool);

  REQUIRE(r.arms.size() == 2);
  int files = 0;
  for (const auto& entry : fs::directory_iterator(*opts.trajectory_dir)) {
    files += entry.path().extension() == ".csv" ? 1 : 0;
  }
  CHECK(files == 20);
  for (const auto& arm : r.arms) {
    CHECK(arm.records.size() == 10);
    for (const auto& rec : arm.records) {
      CHECK_FALSE(rec.success);
      CHECK(rec.failure == "timeout");
      CHECK(rec.control_steps == 2);
    }
  }
  CHECK(r.error_test.has_value());
  CHECK_FALSE(r.time_test.has_value());

  const nlohmann::json j = metrics_json(r);
  CHECK(j["arms"]["brakes_on"]["trials"].size() == 10);
  CHECK(j["arms"]["brakes_on"]["trials"][0]["trajectory"] == "brakes_on_seed1.csv");
  CHECK(j["mann_whitney"].contains("final_error"));
}

TEST_CASE("a trial reaching the goal at the start succeeds immediately") {
  Scenario sc = load_scenario(ebrake::test::scenario_path("hand2x3"));
  sc.mppi.goal_x = sc.object_initial_position.x;
  ThreadPool pool(1);
  const TrialResult t = run_hand_trial(sc, Arm::kBrakesOn, 1, pool);
  CHECK(t.record.success);
  CHECK(t.record.control_steps == 0);
  CHECK(t.record.time_to_goal == 0.0);
  CHECK(t.trajectory.states.size() == 1);
}
