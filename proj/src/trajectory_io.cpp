#include "ebrake/trajectory_io.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace ebrake {

std::string format_real(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  if (traj.states.empty()) return;
  const std::size_t n = traj.states.front().joint_angles.size();
  const std::size_t m = traj.states.front().motor_positions.size();

  out << 't';
  for (std::size_t i = 0; i < n; ++i) out << ",q" << i;
  for (std::size_t i = 0; i < n; ++i) out << ",dq" << i;
  for (std::size_t i = 0; i < n; ++i) out << ",brake" << i;
  for (std::size_t i = 0; i < m; ++i) out << ",motor" << i;
  out << ",obj_x,obj_y\n";

  for (const WorldState& s : traj.states) {
    out << format_real(s.sim_time);
    for (double q : s.joint_angles) out << ',' << format_real(q);
    for (double dq : s.joint_velocities) out << ',' << format_real(dq);
    for (bool b : s.brake_engaged) out << ',' << (b ? 1 : 0);
    for (double p : s.motor_positions) out << ',' << format_real(p);
    out << ',' << format_real(s.object_position.x) << ','
        << format_real(s.object_position.y) << '\n';
  }
}

void write_trajectory_csv(const std::filesystem::path& path,
                          const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_trajectory_csv(out, traj);
}

std::string trajectory_csv(const Trajectory& traj) {
  std::ostringstream out;
  write_trajectory_csv(out, traj);
  return out.str();
}

}  // namespace ebrake
