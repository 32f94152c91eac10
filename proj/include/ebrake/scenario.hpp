#pragma once

// Scenario files: YAML documents describing a mechanism, an optional
// object, integration settings and a controller block. See
// docs/scenario_schema.md for the full schema.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ebrake/control_mppi.hpp"
#include "ebrake/sim_engine.hpp"

namespace ebrake {

// Parse or validation failure. line is 1-based, 0 when unknown.
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(const std::string& source, int line, const std::string& what);
  int line() const { return line_; }

 private:
  int line_;
};

enum class MechanismKind { kChain, kHand };
enum class ControllerKind { kVoting, kMppi };

struct VotingSettings {
  double motor_speed = 0.2;      // rad/s
  double tolerance = deg2rad(1.0);
  double control_period = 0.01;  // s
  double timeout = 600.0;        // s, per waypoint
  bool operator==(const VotingSettings&) const = default;
};

struct MppiSettings {
  MppiParams params;
  double goal_x = 0.0;             // m
  double success_tolerance = 0.001;  // m
  double timeout = 180.0;          // s of simulated time
  double stall_window = 60.0;      // s
  double stall_progress = 0.001;   // m
  bool operator==(const MppiSettings&) const = default;
};

struct Scenario {
  std::string name;
  MechanismKind kind = MechanismKind::kChain;
  bool allow_wide_limits = false;
  BrakeSpec brake_defaults;
  MechanismSpec mechanism;
  std::optional<ObjectSpec> object;
  Vec2 object_initial_position;
  std::vector<double> initial_joint_angles;  // rad, empty = zeros
  std::vector<double> initial_motor_positions;
  SimSettings integration;
  ControllerKind controller = ControllerKind::kVoting;
  VotingSettings voting;
  MppiSettings mppi;
  std::uint64_t seed = 0;

  bool operator==(const Scenario&) const = default;
};

Scenario load_scenario(const std::filesystem::path& path);
Scenario parse_scenario(const std::string& text,
                        const std::string& source = "<string>");
std::string serialize_scenario(const Scenario& scenario);

// Cross-field checks shared by the loader and programmatic construction.
void validate_scenario(const Scenario& scenario, const std::string& source = "<scenario>");

SimModel make_model(const Scenario& scenario);
WorldState initial_state(const Scenario& scenario, const SimModel& model);

// Finger joint groups, or a single group over all joints for a chain.
std::vector<std::vector<int>> finger_groups(const MechanismSpec& spec);

}  // namespace ebrake
