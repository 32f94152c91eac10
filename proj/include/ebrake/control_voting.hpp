#pragma once

// Single-motor configuration reaching by joint voting. Every unconverged
// joint votes for the motor direction that moves it toward its target; the
// majority moves while everyone else is braked, then the minority moves
// with the motor reversed. Joints brake as soon as they reach tolerance.

#include <vector>

#include "ebrake/sim_engine.hpp"

namespace ebrake {

struct TargetConfig {
  std::vector<double> target_angles;  // rad
  double tolerance = deg2rad(1.0);
};

enum class VotingStage { kMajority, kMinority, kDone };

struct VotingPhase {
  VotingStage stage = VotingStage::kMajority;
  int majority_sign = 0;  // 0 until the first vote has been taken
  std::vector<bool> reached;
  int direction_changes = 0;

  bool operator==(const VotingPhase&) const = default;
};

struct VotingParams {
  double motor_speed = 0.2;     // rad/s
  int motor = 0;
  double control_period = 0.01;  // s
};

// -1, 0 or +1: the motor direction this joint wants, 0 when within tolerance.
int vote(int joint_index, double current_angle, double target_angle,
         int routing_sign, double tolerance);

// Throws std::invalid_argument when the target has the wrong size, a
// non-positive tolerance, or lies outside a joint's limits.
void validate_target(const Mechanism& mech, const TargetConfig& target);

struct VotingDecision {
  Command command;
  VotingPhase phase;
};

VotingDecision plan_step(const Mechanism& mech, const WorldState& state,
                         const TargetConfig& target, const VotingPhase& phase,
                         const VotingParams& params = {});

struct VotingRun {
  WorldState final_state;
  Trajectory trajectory;  // one state per control tick
  bool converged = false;
  int direction_changes = 0;
  int phases_used = 0;
};

VotingRun run_to_config(const SimModel& model, const WorldState& state,
                        const TargetConfig& target, double timeout,
                        const VotingParams& params = {});

}  // namespace ebrake
