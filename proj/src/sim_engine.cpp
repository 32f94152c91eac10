#include "ebrake/sim_engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ebrake {

namespace {

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

void check_command(const SimModel& model, const WorldState& state,
                   const Command& cmd) {
  const Mechanism& mech = model.mechanism;
  if (cmd.motor_commands.size() != static_cast<std::size_t>(mech.num_motors())) {
    throw std::invalid_argument("Command: one motor command per motor");
  }
  if (cmd.brake_engaged.size() != static_cast<std::size_t>(mech.num_joints())) {
    throw std::invalid_argument("Command: one brake flag per joint");
  }
  if (!cmd.external_torques.empty() &&
      cmd.external_torques.size() != static_cast<std::size_t>(mech.num_joints())) {
    throw std::invalid_argument("Command: external_torques must be empty or per joint");
  }
  if (state.joint_angles.size() != static_cast<std::size_t>(mech.num_joints()) ||
      state.motor_positions.size() != static_cast<std::size_t>(mech.num_motors())) {
    throw std::invalid_argument("WorldState does not match mechanism");
  }
}

[[noreturn]] void fault(const WorldState& s, const std::string& what) {
  std::ostringstream msg;
  msg << "integration fault at t=" << s.sim_time << ": " << what;
  throw IntegrationFault(msg.str());
}

double motor_rate(const MotorSpec& motor, double position, double command) {
  double rate = 0.0;
  if (motor.control_mode == ControlMode::kVelocity) {
    rate = command;
  } else {
    const double target = std::clamp(command, motor.min_position, motor.max_position);
    rate = motor.position_gain * (target - position);
  }
  return std::clamp(rate, -motor.max_speed, motor.max_speed);
}

}  // namespace

bool brake_effective(const SimModel& model, const WorldState& state, int joint) {
  return state.brake_engaged[joint] &&
         state.sim_time - state.brake_changed_at[joint] >=
             model.settings.brake_latency;
}

void step_in_place(const SimModel& model, WorldState& state, const Command& cmd,
                   double dt) {
  if (!(dt > 0.0 && dt <= kMaxPhysicsStep)) {
    throw std::invalid_argument("step: dt must lie in (0, 5 ms]");
  }
  check_command(model, state, cmd);
  const Mechanism& mech = model.mechanism;
  const auto& spec = mech.spec();
  const int n = mech.num_joints();

  thread_local detail::TorqueScratch scratch;

  for (int j = 0; j < n; ++j) {
    if (state.brake_engaged[j] != cmd.brake_engaged[j]) {
      state.brake_engaged[j] = cmd.brake_engaged[j];
      state.brake_changed_at[j] = state.sim_time;
    }
  }

  // Motors first; a motor stalls against any tendon over its tension limit.
  detail::compute_tensions(mech, state, scratch.tensions);
  for (int m = 0; m < mech.num_motors(); ++m) {
    const MotorSpec& motor = spec.motors[m];
    double rate = motor_rate(motor, state.motor_positions[m], cmd.motor_commands[m]);
    for (std::size_t t = 0; t < spec.tendons.size(); ++t) {
      const TendonRoute& r = spec.tendons[t];
      if (r.motor_id == m && scratch.tensions[t] > motor.tension_limit &&
          rate * r.spool_direction > 0.0) {
        rate = 0.0;
      }
    }
    state.motor_positions[m] = std::clamp(state.motor_positions[m] + rate * dt,
                                          motor.min_position, motor.max_position);
  }

  detail::compute_tensions(mech, state, scratch.tensions);
  detail::compute_kinematics(mech, state.joint_angles, scratch.links, scratch.tips);
  const ObjectSpec* object = model.object_ptr();
  const Vec2 object_force =
      detail::accumulate_torques(mech, state, object, scratch);

  for (int j = 0; j < n; ++j) {
    const JointSpec& js = mech.joint(j);
    const double v = state.joint_velocities[j];
    double tau = scratch.torques[j];
    if (!cmd.external_torques.empty()) tau += cmd.external_torques[j];
    // Damping is integrated implicitly; tau_free excludes it.
    const double tau_free = tau + js.viscous_damping * v;
    const double inv_inertia = 1.0 / js.rotational_inertia;
    const double damp = 1.0 + dt * js.viscous_damping * inv_inertia;

    double v_new = 0.0;
    if (brake_effective(model, state, j)) {
      const double holding = mech.holding_torque(j);
      const bool at_rest = std::abs(v) <= model.settings.rest_velocity;
      if (at_rest && std::abs(tau) <= holding) {
        v_new = 0.0;  // stick
      } else {
        const int dir = at_rest ? sign_of(tau) : sign_of(v);
        v_new = (v + dt * (tau_free - holding * dir) * inv_inertia) / damp;
        if (v_new * dir < 0.0) v_new = 0.0;
      }
    } else {
      v_new = (v + dt * tau_free * inv_inertia) / damp;
    }
    state.joint_velocities[j] = v_new;
    state.joint_angles[j] += dt * v_new;
    if (!std::isfinite(state.joint_angles[j]) || !std::isfinite(v_new)) {
      fault(state, "joint " + std::to_string(j) + " diverged");
    }
  }

  if (object != nullptr) {
    const double m = object->mass;
    const double coulomb = object->table_friction_coulomb;
    const Vec2 v = state.object_velocity;
    const double speed = norm(v);
    const double force_mag = norm(object_force);
    Vec2 v_new;
    if (speed <= model.settings.object_rest_speed && force_mag <= coulomb) {
      v_new = {};
    } else {
      Vec2 dir;
      if (speed > model.settings.object_rest_speed) {
        dir = (1.0 / speed) * v;
      } else if (force_mag > 0.0) {
        dir = (1.0 / force_mag) * object_force;
      }
      const double damp = 1.0 + dt * object->table_friction_viscous / m;
      v_new = (1.0 / damp) * (v + (dt / m) * (object_force - coulomb * dir));
      if (dot(v_new, dir) < 0.0) v_new = {};
    }
    state.object_velocity = v_new;
    state.object_position += dt * v_new;
    if (!std::isfinite(state.object_position.x) ||
        !std::isfinite(state.object_position.y)) {
      fault(state, "object diverged");
    }
  }

  state.sim_time += dt;
}

WorldState step(const SimModel& model, const WorldState& state,
                const Command& cmd, double dt) {
  WorldState next = state;
  step_in_place(model, next, cmd, dt);
  return next;
}

Trajectory rollout(const SimModel& model, const WorldState& state,
                   std::span<const Command> commands, double dt,
                   int control_substeps) {
  if (commands.empty()) throw std::invalid_argument("rollout: no commands");
  if (control_substeps < 1) {
    throw std::invalid_argument("rollout: control_substeps must be >= 1");
  }
  Trajectory traj;
  traj.dt = dt * control_substeps;
  traj.states.reserve(commands.size() + 1);
  traj.commands.assign(commands.begin(), commands.end());
  traj.states.push_back(state);
  WorldState s = state;
  for (const Command& cmd : commands) {
    for (int k = 0; k < control_substeps; ++k) step_in_place(model, s, cmd, dt);
    traj.states.push_back(s);
  }
  return traj;
}

Trajectory rollout(const SimModel& model, const WorldState& state,
                   std::span<const Command> commands) {
  return rollout(model, state, commands, model.settings.dt,
                 model.settings.control_substeps);
}

Command hold_command(const SimModel& model, const WorldState& state,
                     std::vector<bool> brakes) {
  const Mechanism& mech = model.mechanism;
  Command cmd;
  cmd.motor_commands.resize(mech.num_motors(), 0.0);
  for (int m = 0; m < mech.num_motors(); ++m) {
    if (mech.spec().motors[m].control_mode == ControlMode::kPosition) {
      cmd.motor_commands[m] = state.motor_positions[m];
    }
  }
  if (brakes.empty()) brakes.assign(mech.num_joints(), false);
  cmd.brake_engaged = std::move(brakes);
  return cmd;
}

}  // namespace ebrake
