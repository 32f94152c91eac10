#pragma once

// Electrostatic brake strength model: parallel-plate attraction, friction-
// limited holding force, rack-and-pinion holding torque, and reporting
// metrics (specific tension, power draw).

namespace ebrake {

inline constexpr double kVacuumPermittivity = 8.854e-12;  // F/m

// Measured steady-state draw of one engaged electrode stack.
inline constexpr double kPowerPerStack = 0.01;  // W

struct BrakeSpec {
  double voltage = 1000.0;                // V
  double relative_permittivity = 3.35;    // PET film
  double dielectric_thickness = 12.7e-6;  // m
  double overlap_area = 0.8e-4;           // m^2, per electrode pair
  double friction_coefficient = 0.71;
  int num_stacks = 1;
  // One vertical electrode sandwiched between two horizontal ones.
  int interfaces_per_stack = 2;
  double pinion_pitch_diameter = 0.012;  // m

  bool operator==(const BrakeSpec&) const = default;
};

// Throws std::domain_error when the spec cannot describe a physical brake.
// The pinion diameter is only checked by the torque operations.
void validate(const BrakeSpec& spec);

// Attractive force across a single electrode interface, eps*A*V^2 / (2 d^2).
double attractive_force(const BrakeSpec& spec);

// Total tangential force the whole stack resists before sliding.
double max_brake_force(const BrakeSpec& spec);

// Holding torque at the joint: half the pinion pitch diameter times the
// holding force.
double max_brake_torque(const BrakeSpec& spec);

// Holding force per unit cross-section. The cross-section is an explicit
// input; see README for the convention used in the shipped tables.
double specific_tension(const BrakeSpec& spec, double cross_section_area);

double power_draw(const BrakeSpec& spec);

}  // namespace ebrake
