#pragma once

// Planar tendon-coupled serial chains: specs, validated mechanism, world
// state, kinematics, tendon coupling, joint torques and penalty contact
// against a single circular object.
//
// Sign conventions: joint angles are counter-clockwise positive. A tendon
// with routing sign +1 on a joint produces a counter-clockwise torque on it
// when under tension.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ebrake/brake_model.hpp"
#include "ebrake/geometry.hpp"

namespace ebrake {

struct JointLimits {
  double lower = -deg2rad(60.0);
  double upper = deg2rad(60.0);
  bool operator==(const JointLimits&) const = default;
};

struct ExtensionSpring {
  double stiffness = 0.0;   // N*m/rad
  double rest_angle = 0.0;  // rad
  bool operator==(const ExtensionSpring&) const = default;
};

struct JointSpec {
  JointLimits limits;
  double moment_arm = 0.010;           // m
  double rotational_inertia = 2.0e-4;  // kg*m^2, lumped
  double viscous_damping = 0.05;       // N*m*s/rad
  std::optional<ExtensionSpring> extension_spring;
  BrakeSpec brake;
  double link_length = 0.03;  // m
  double link_radius = 0.008;  // m, capsule half-width

  bool operator==(const JointSpec&) const = default;
};

// A tendon wound on a motor spool and routed over a subset of joints.
// Take-up length is spool_direction * spool_radius * motor_position +
// rest_offset; tension is stiffness * max(0, take_up - excursion).
struct TendonRoute {
  int motor_id = 0;
  std::vector<int> joints;
  std::vector<int> routing_signs;  // one of {-1, +1} per entry in joints
  int spool_direction = 1;         // -1 pays out on positive motor rotation
  double stiffness = 1.0e5;        // N/m
  double rest_offset = 0.0;        // m
  bool slack_allowed = true;

  bool operator==(const TendonRoute&) const = default;
};

enum class ControlMode { kVelocity, kPosition };

// Motors are kinematic servos: velocity mode tracks the commanded speed,
// position mode moves toward the target at position_gain * error, both
// saturated at max_speed. A motor stalls (stops taking up) once any tendon
// it winds exceeds tension_limit.
struct MotorSpec {
  ControlMode control_mode = ControlMode::kVelocity;
  double spool_radius = 0.010;  // m
  double max_speed = 0.2;       // rad/s
  double position_gain = 20.0;  // 1/s
  double min_position = -1.0e3;  // rad
  double max_position = 1.0e3;   // rad
  double tension_limit = 50.0;   // N

  bool operator==(const MotorSpec&) const = default;
};

struct FingerSpec {
  Pose2 base;  // relative to the mechanism base pose
  std::vector<int> joints;

  bool operator==(const FingerSpec&) const = default;
};

struct MechanismSpec {
  std::string name;
  Pose2 base_pose;
  std::vector<JointSpec> joints;
  std::vector<TendonRoute> tendons;
  std::vector<MotorSpec> motors;
  // Empty means one serial chain over all joints starting at base_pose.
  std::vector<FingerSpec> fingers;
  double limit_stiffness = 50.0;  // N*m/rad beyond a joint limit
  // Optional frictionless palm: the object may not sink below this world y
  // (penalty contact using the object's stiffness and damping).
  std::optional<double> palm_height;

  bool operator==(const MechanismSpec&) const = default;
};

struct ObjectSpec {
  double radius = 0.04;                 // m
  double mass = 0.1;                    // kg
  double table_friction_viscous = 0.5;  // N*s/m
  double table_friction_coulomb = 0.2;  // N
  double contact_stiffness = 5000.0;    // N/m
  double contact_damping = 5.0;         // N*s/m
  double surface_friction = 0.5;

  bool operator==(const ObjectSpec&) const = default;
};

void validate(const ObjectSpec& object);

struct WorldState {
  std::vector<double> joint_angles;
  std::vector<double> joint_velocities;
  std::vector<bool> brake_engaged;  // last commanded configuration
  std::vector<double> brake_changed_at;  // sim time of last command change
  std::vector<double> motor_positions;
  Vec2 object_position;
  Vec2 object_velocity;
  double sim_time = 0.0;

  bool operator==(const WorldState&) const = default;
};

struct SerialChain {
  Pose2 base;  // absolute
  std::vector<int> joints;
};

// A validated, immutable mechanism with precomputed derived data.
class Mechanism {
 public:
  // Throws std::invalid_argument describing the first violated invariant.
  explicit Mechanism(MechanismSpec spec);

  const MechanismSpec& spec() const { return spec_; }
  int num_joints() const { return static_cast<int>(spec_.joints.size()); }
  int num_motors() const { return static_cast<int>(spec_.motors.size()); }
  int num_tendons() const { return static_cast<int>(spec_.tendons.size()); }
  const std::vector<SerialChain>& chains() const { return chains_; }
  const JointSpec& joint(int i) const { return spec_.joints[i]; }

  double holding_torque(int joint) const { return holding_torque_[joint]; }

  // Sign of joint motion produced by positive rotation of the motor, 0 when
  // the joint is not coupled to that motor.
  int motor_direction(int joint, int motor) const;

  // Rest state: all angles at the given values (or zero), brakes off.
  WorldState make_state(std::span<const double> joint_angles = {},
                        std::span<const double> motor_positions = {}) const;

 private:
  MechanismSpec spec_;
  std::vector<SerialChain> chains_;
  std::vector<double> holding_torque_;
};

struct LinkSegment {
  Vec2 start;  // joint axis
  Vec2 end;
  double heading = 0.0;
};

struct Kinematics {
  std::vector<LinkSegment> links;  // indexed by joint
  std::vector<Vec2> fingertips;    // one per serial chain
};

// Throws std::domain_error on an angle-count mismatch.
Kinematics forward_kinematics(const Mechanism& mech,
                              std::span<const double> joint_angles);

double tendon_excursion(const Mechanism& mech,
                        std::span<const double> joint_angles,
                        const TendonRoute& route);

std::vector<double> tendon_tensions(const Mechanism& mech,
                                    const WorldState& state);

struct LinkContact {
  int joint = 0;  // link index (the link distal to this joint)
  Vec2 point;     // closest point on the link axis
  Vec2 normal;    // unit, from link toward object center
  double penetration = 0.0;
  Vec2 force_on_link;
};

struct ContactWrench {
  Vec2 force_on_object;
  std::vector<LinkContact> contacts;
};

ContactWrench contact_wrench(const Mechanism& mech, const WorldState& state,
                             const ObjectSpec& object);

// Tendon, spring, damping, limit and contact torques per joint. Brake
// torques are not included. Throws std::domain_error on negative tension.
std::vector<double> net_joint_torques(const Mechanism& mech,
                                      const WorldState& state,
                                      std::span<const double> tensions,
                                      const ObjectSpec* object = nullptr);

// Surface gap at or below threshold counts as contact.
std::vector<bool> fingertip_contacts(const Mechanism& mech,
                                     const WorldState& state,
                                     const ObjectSpec& object,
                                     double threshold);

int count_fingertips_not_in_contact(const Mechanism& mech,
                                    const WorldState& state,
                                    const ObjectSpec& object,
                                    double threshold);

namespace detail {

// Allocation-free torque evaluation used by the integrator.
struct TorqueScratch {
  std::vector<LinkSegment> links;
  std::vector<Vec2> tips;
  std::vector<double> tensions;
  std::vector<double> torques;
};

void compute_kinematics(const Mechanism& mech,
                        std::span<const double> joint_angles,
                        std::vector<LinkSegment>& links,
                        std::vector<Vec2>& tips);

void compute_tensions(const Mechanism& mech, const WorldState& state,
                      std::vector<double>& tensions);

// Fills scratch.torques using scratch.tensions and scratch.links, both of
// which must already be current. Returns the contact force on the object.
Vec2 accumulate_torques(const Mechanism& mech, const WorldState& state,
                        const ObjectSpec* object, TorqueScratch& scratch,
                        std::vector<LinkContact>* contacts = nullptr);

}  // namespace detail

}  // namespace ebrake
