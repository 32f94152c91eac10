#include "ebrake/brake_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ebrake {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::domain_error(std::string("BrakeSpec: ") + what);
}

}  // namespace

void validate(const BrakeSpec& spec) {
  require(std::isfinite(spec.voltage) && spec.voltage >= 0.0,
          "voltage must be >= 0");
  require(std::isfinite(spec.relative_permittivity) &&
              spec.relative_permittivity > 0.0,
          "relative_permittivity must be > 0");
  require(std::isfinite(spec.dielectric_thickness) &&
              spec.dielectric_thickness > 0.0,
          "dielectric_thickness must be > 0");
  require(std::isfinite(spec.overlap_area) && spec.overlap_area > 0.0,
          "overlap_area must be > 0");
  require(std::isfinite(spec.friction_coefficient) &&
              spec.friction_coefficient >= 0.0,
          "friction_coefficient must be >= 0");
  require(spec.num_stacks >= 1, "num_stacks must be >= 1");
  require(spec.interfaces_per_stack >= 1, "interfaces_per_stack must be >= 1");
}

double attractive_force(const BrakeSpec& spec) {
  validate(spec);
  const double permittivity = spec.relative_permittivity * kVacuumPermittivity;
  const double d = spec.dielectric_thickness;
  return permittivity * spec.overlap_area * spec.voltage * spec.voltage /
         (2.0 * d * d);
}

double max_brake_force(const BrakeSpec& spec) {
  return spec.friction_coefficient * attractive_force(spec) *
         static_cast<double>(spec.interfaces_per_stack) *
         static_cast<double>(spec.num_stacks);
}

double max_brake_torque(const BrakeSpec& spec) {
  require(std::isfinite(spec.pinion_pitch_diameter) &&
              spec.pinion_pitch_diameter > 0.0,
          "pinion_pitch_diameter must be > 0");
  return 0.5 * spec.pinion_pitch_diameter * max_brake_force(spec);
}

double specific_tension(const BrakeSpec& spec, double cross_section_area) {
  require(std::isfinite(cross_section_area) && cross_section_area > 0.0,
          "cross_section_area must be > 0");
  return max_brake_force(spec) / cross_section_area;
}

double power_draw(const BrakeSpec& spec) {
  validate(spec);
  return spec.voltage > 0.0 ? kPowerPerStack * spec.num_stacks : 0.0;
}

}  // namespace ebrake
