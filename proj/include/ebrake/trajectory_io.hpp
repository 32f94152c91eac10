#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "ebrake/sim_engine.hpp"

namespace ebrake {

// One row per recorded state: t, q0..qN, dq0..dqN, brake0..brakeN,
// motor0..motorM, obj_x, obj_y. Reals use 9 significant digits.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
void write_trajectory_csv(const std::filesystem::path& path,
                          const Trajectory& traj);
std::string trajectory_csv(const Trajectory& traj);

// "%.9g" formatting shared by every CSV writer.
std::string format_real(double value);

}  // namespace ebrake
