#include "ebrake/control_voting.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ebrake {

int vote(int /*joint_index*/, double current_angle, double target_angle,
         int routing_sign, double tolerance) {
  const double error = target_angle - current_angle;
  if (std::abs(error) <= tolerance) return 0;
  return routing_sign * (error > 0.0 ? 1 : -1);
}

void validate_target(const Mechanism& mech, const TargetConfig& target) {
  if (target.target_angles.size() != static_cast<std::size_t>(mech.num_joints())) {
    throw std::invalid_argument("TargetConfig: one angle per joint required");
  }
  if (!(target.tolerance > 0.0)) {
    throw std::invalid_argument("TargetConfig: tolerance must be > 0");
  }
  for (int j = 0; j < mech.num_joints(); ++j) {
    const double a = target.target_angles[j];
    const JointLimits& lim = mech.joint(j).limits;
    if (!(a >= lim.lower && a <= lim.upper)) {
      throw std::invalid_argument("TargetConfig: joint " + std::to_string(j) +
                                  " target outside joint limits");
    }
  }
}

VotingDecision plan_step(const Mechanism& mech, const WorldState& state,
                         const TargetConfig& target, const VotingPhase& phase,
                         const VotingParams& params) {
  const int n = mech.num_joints();
  VotingDecision out;
  VotingPhase& p = out.phase;
  p = phase;
  if (p.reached.empty()) p.reached.assign(n, false);

  std::vector<int> votes(n, 0);
  for (int j = 0; j < n; ++j) {
    if (p.reached[j]) continue;
    votes[j] = vote(j, state.joint_angles[j], target.target_angles[j],
                    mech.motor_direction(j, params.motor), target.tolerance);
    if (votes[j] == 0) p.reached[j] = true;
  }

  Command& cmd = out.command;
  cmd.motor_commands.assign(mech.num_motors(), 0.0);
  cmd.brake_engaged.assign(n, true);
  if (p.stage == VotingStage::kDone) return out;

  if (p.majority_sign == 0) {
    int plus = 0;
    int minus = 0;
    int worst = -1;
    for (int j = 0; j < n; ++j) {
      plus += votes[j] > 0;
      minus += votes[j] < 0;
      if (votes[j] != 0 &&
          (worst < 0 || std::abs(target.target_angles[j] - state.joint_angles[j]) >
                            std::abs(target.target_angles[worst] -
                                     state.joint_angles[worst]))) {
        worst = j;
      }
    }
    if (worst < 0) {
      p.stage = VotingStage::kDone;
      return out;
    }
    // Ties go to the side of the joint furthest from its target.
    p.majority_sign = plus > minus ? 1 : minus > plus ? -1 : votes[worst];
    p.stage = VotingStage::kMajority;
  }

  auto active_sign = [&p] {
    return p.stage == VotingStage::kMajority ? p.majority_sign : -p.majority_sign;
  };
  auto has_movers = [&](int sign) {
    for (int j = 0; j < n; ++j) {
      if (!p.reached[j] && votes[j] == sign) return true;
    }
    return false;
  };

  if (!has_movers(active_sign())) {
    bool all_reached = true;
    for (int j = 0; j < n; ++j) all_reached = all_reached && p.reached[j];
    if (all_reached) {
      p.stage = VotingStage::kDone;
      return out;
    }
    // Swap roles. A joint that overshot during the minority pass sends the
    // controller back to another majority pass.
    p.stage = p.stage == VotingStage::kMajority ? VotingStage::kMinority
                                                : VotingStage::kMajority;
    ++p.direction_changes;
  }

  const int sign = active_sign();
  for (int j = 0; j < n; ++j) {
    if (!p.reached[j] && votes[j] == sign) cmd.brake_engaged[j] = false;
  }
  cmd.motor_commands[params.motor] = sign * params.motor_speed;
  return out;
}

VotingRun run_to_config(const SimModel& model, const WorldState& state,
                        const TargetConfig& target, double timeout,
                        const VotingParams& params) {
  if (!(timeout > 0.0)) throw std::invalid_argument("run_to_config: timeout must be > 0");
  if (!(params.control_period > 0.0)) {
    throw std::invalid_argument("run_to_config: control_period must be > 0");
  }
  validate_target(model.mechanism, target);

  const double dt = model.settings.dt;
  const int substeps =
      std::max(1, static_cast<int>(std::lround(params.control_period / dt)));

  VotingRun run;
  run.trajectory.dt = dt * substeps;
  run.trajectory.states.push_back(state);
  WorldState s = state;
  VotingPhase phase;
  const double start = s.sim_time;
  int last_sign = 0;
  while (s.sim_time - start < timeout) {
    VotingDecision d = plan_step(model.mechanism, s, target, phase, params);
    phase = std::move(d.phase);
    const double velocity = d.command.motor_commands[params.motor];
    if (velocity != 0.0) {
      const int sign = velocity > 0.0 ? 1 : -1;
      if (sign != last_sign) ++run.phases_used;
      last_sign = sign;
    }
    for (int k = 0; k < substeps; ++k) step_in_place(model, s, d.command, dt);
    run.trajectory.commands.push_back(std::move(d.command));
    run.trajectory.states.push_back(s);
    if (phase.stage == VotingStage::kDone) break;
  }

  run.direction_changes = phase.direction_changes;
  run.converged = true;
  for (int j = 0; j < model.mechanism.num_joints(); ++j) {
    if (std::abs(target.target_angles[j] - s.joint_angles[j]) > target.tolerance) {
      run.converged = false;
    }
  }
  run.final_state = std::move(s);
  return run;
}

}  // namespace ebrake
