#pragma once

// Fixed-step semi-implicit Euler integration of a braked tendon mechanism
// and an optional object sliding on the table.
//
// Braked joints follow a stick-slip law: a joint at rest (|velocity| below
// the rest threshold) whose net torque is within the brake's holding torque
// has its velocity clamped to zero; otherwise the brake applies a Coulomb
// torque of the holding magnitude opposing the motion, and never reverses it.

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ebrake/mechanism.hpp"

namespace ebrake {

struct SimSettings {
  double dt = 1.0e-3;         // s
  int control_substeps = 200;  // physics steps per control tick
  double brake_latency = 0.0;  // s from command to engagement
  double rest_velocity = 1.0e-4;  // rad/s deadband defining "at rest"
  double object_rest_speed = 1.0e-4;  // m/s

  bool operator==(const SimSettings&) const = default;
};

inline constexpr double kMaxPhysicsStep = 5.0e-3;

struct SimModel {
  Mechanism mechanism;
  std::optional<ObjectSpec> object;
  SimSettings settings;

  const ObjectSpec* object_ptr() const { return object ? &*object : nullptr; }
};

struct Command {
  // Velocity (rad/s) or target position (rad) per motor, by control mode.
  std::vector<double> motor_commands;
  std::vector<bool> brake_engaged;
  double driver_frequency = 15.0;  // Hz, logged only
  // Optional per-joint load torque, e.g. a weighted lever arm. Empty = none.
  std::vector<double> external_torques;

  bool operator==(const Command&) const = default;
};

struct Trajectory {
  std::vector<WorldState> states;
  std::vector<Command> commands;
  double dt = 0.0;  // time between consecutive states

  bool operator==(const Trajectory&) const = default;
};

class IntegrationFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Advances state in place by one physics step. Throws std::invalid_argument
// on malformed commands or dt outside (0, kMaxPhysicsStep], and
// IntegrationFault when the state stops being finite.
void step_in_place(const SimModel& model, WorldState& state, const Command& cmd,
                   double dt);

WorldState step(const SimModel& model, const WorldState& state,
                const Command& cmd, double dt);

// Holds each command for control_substeps physics steps and records the
// state after every command.
Trajectory rollout(const SimModel& model, const WorldState& state,
                   std::span<const Command> commands, double dt,
                   int control_substeps);

Trajectory rollout(const SimModel& model, const WorldState& state,
                   std::span<const Command> commands);

// Command that keeps all motors still (velocity 0 / hold current position)
// with the given brake configuration.
Command hold_command(const SimModel& model, const WorldState& state,
                     std::vector<bool> brakes = {});

// True when the joint's brake is commanded on and past the latency.
bool brake_effective(const SimModel& model, const WorldState& state, int joint);

}  // namespace ebrake
