#pragma once

// Hybrid-action MPPI. Each sampled motor-command sequence keeps a single
// brake configuration for the whole horizon; sequences are cost-weighted
// and averaged separately per configuration, and the executed configuration
// only changes when another one is cheaper by more than a fixed fraction.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ebrake/sim_engine.hpp"
#include "ebrake/thread_pool.hpp"

namespace ebrake {

enum class CommandParameterization {
  kAbsolute,  // plan entries are motor target positions
  kDelta,     // plan entries are per-tick target increments
};

struct MppiParams {
  int num_rollouts = 297;
  int horizon = 10;
  double lambda = 0.1;
  double a1 = 0.1;   // per fingertip out of contact, per state
  double a2 = 200.0;  // per meter of terminal horizontal error
  double phi = 0.25;  // switching threshold
  double sigma = 0.05;  // rad, per motor per tick
  double control_rate = 5.0;  // Hz
  double contact_threshold = 0.002;  // m
  std::uint64_t seed = 0;
  CommandParameterization parameterization = CommandParameterization::kAbsolute;

  bool operator==(const MppiParams&) const = default;
};

void validate(const MppiParams& params, std::size_t num_configs);

struct GoalSpec {
  double goal_x = 0.0;
  double success_tolerance = 0.001;
};

// [tick][motor]
using MotorPlan = std::vector<std::vector<double>>;

struct HybridAction {
  std::vector<double> motor_targets;
  int brake_config = 0;
};

// Cartesian product over fingers of "leave exactly one joint unbraked",
// ordered with the first finger most significant. Each entry has one flag
// per joint (true = engaged). Throws std::domain_error on an empty finger.
std::vector<std::vector<bool>> enumerate_brake_configs(
    const std::vector<std::vector<int>>& fingers, int num_joints);

// a1 * sum(not_in_contact) + a2 * |goal_x - final_x|
double contact_distance_cost(std::span<const int> not_in_contact, double final_x,
                             const GoalSpec& goal, const MppiParams& params);

// Cost of a trajectory of horizon + 1 states, counting the fingertips out of
// contact in every state including the first.
double trajectory_cost(const SimModel& model, const Trajectory& traj,
                       const GoalSpec& goal, const MppiParams& params);

// Normalized exp(-(J - min J) / lambda); infinite costs get zero weight.
std::vector<double> softmax_weights(std::span<const double> costs, double lambda);

MotorPlan weighted_average(std::span<const MotorPlan> sequences,
                           std::span<const double> costs, double lambda);

int select_config(std::span<const double> costs, std::optional<int> previous,
                  double phi);

struct MppiPlan {
  std::vector<MotorPlan> per_config;  // empty before the first step
  std::optional<int> previous_config;
  std::uint64_t step_index = 0;
};

struct MppiDiagnostics {
  std::vector<double> config_costs;  // cost of each averaged sequence
  std::vector<double> best_sample_costs;
  int chosen = 0;
  int faulted_samples = 0;
};

struct MppiStepResult {
  HybridAction action;
  MppiDiagnostics diagnostics;
  MppiPlan plan;
};

std::uint64_t rollout_seed(std::uint64_t master, std::uint64_t step, int config,
                           int sample);

// One control step. configs lists the allowed brake configurations; the
// rollout count is split evenly between them.
MppiStepResult mppi_step(const SimModel& model, const WorldState& world,
                         const GoalSpec& goal, const MppiParams& params,
                         const std::vector<std::vector<bool>>& configs,
                         const MppiPlan& previous, ThreadPool& pool);

// Converts a plan into position targets starting from the given motor
// positions (identity for absolute plans).
MotorPlan plan_targets(const MotorPlan& plan, std::span<const double> motor_positions,
                       CommandParameterization parameterization);

}  // namespace ebrake
