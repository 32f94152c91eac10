#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include "ebrake/brake_model.hpp"
#include "ebrake/experiment.hpp"

using namespace ebrake;

namespace {

// Independent hand evaluation: parallel-plate attraction per interface,
// friction over every interface of every stack, half the pitch diameter as
// the lever.
double hand_torque(int stacks) {
  const double eps = 8.854e-12 * 3.35;
  const double area = 0.8e-4;
  const double v = 1000.0;
  const double d = 12.7e-6;
  const double attraction = eps * area * v * v / (2.0 * d * d);
  const double force = 0.71 * attraction * 2.0 * stacks;
  return force * 0.012 / 2.0;
}

}  // namespace

TEST_CASE("default brake spec matches the published holding torque") {
  BrakeSpec spec;
  CHECK(max_brake_torque(spec) == doctest::Approx(hand_torque(1)).epsilon(1e-12));
  CHECK(max_brake_torque(spec) == doctest::Approx(62.7e-3).epsilon(0.005));
  CHECK(max_brake_force(spec) == doctest::Approx(10.45).epsilon(0.005));
}

TEST_CASE("two stacks double the torque") {
  BrakeSpec spec;
  spec.num_stacks = 2;
  CHECK(max_brake_torque(spec) == doctest::Approx(125.4e-3).epsilon(0.005));
  CHECK(max_brake_torque(spec) == doctest::Approx(hand_torque(2)).epsilon(1e-12));
}

TEST_CASE("torque is linear in the stack count") {
  BrakeSpec one;
  const double t1 = max_brake_torque(one);
  for (int n = 1; n <= 8; ++n) {
    BrakeSpec s;
    s.num_stacks = n;
    const double rel = std::abs(max_brake_torque(s) - n * t1) / (n * t1);
    CHECK(rel < 1e-9);
  }
}

TEST_CASE("attraction scales with the square of the voltage") {
  BrakeSpec a;
  BrakeSpec b;
  b.voltage = 2.0 * a.voltage;
  CHECK(attractive_force(b) == doctest::Approx(4.0 * attractive_force(a)).epsilon(1e-12));
}

TEST_CASE("degenerate geometry is rejected") {
  BrakeSpec spec;
  spec.pinion_pitch_diameter = 0.0;
  CHECK_THROWS_AS(max_brake_torque(spec), std::domain_error);

  BrakeSpec thin;
  thin.dielectric_thickness = 0.0;
  CHECK_THROWS_AS(validate(thin), std::domain_error);

  BrakeSpec none;
  none.num_stacks = 0;
  CHECK_THROWS_AS(validate(none), std::domain_error);
}

TEST_CASE("specific tension") {
  BrakeSpec spec;
  const double f = max_brake_force(spec);
  CHECK(specific_tension(spec, 5.0e-5) == doctest::Approx(f / 5.0e-5).epsilon(1e-12));
  CHECK(specific_tension(spec, 5.0e-5) == doctest::Approx(2.09e5).epsilon(0.005));

  BrakeSpec doubled = spec;
  doubled.num_stacks = 2;
  CHECK(specific_tension(doubled, 1.0e-4) ==
        doctest::Approx(specific_tension(spec, 5.0e-5)).epsilon(1e-12));

  BrakeSpec off = spec;
  off.voltage = 0.0;
  CHECK(specific_tension(off, 5.0e-5) == 0.0);

  CHECK_THROWS_AS(specific_tension(spec, 0.0), std::domain_error);
  CHECK_THROWS_AS(specific_tension(spec, -1.0), std::domain_error);
}

TEST_CASE("power draw") {
  BrakeSpec spec;
  spec.num_stacks = 2;
  CHECK(power_draw(spec) == doctest::Approx(0.02));
  spec.num_stacks = 8;
  CHECK(power_draw(spec) == doctest::Approx(0.08));
  spec.voltage = 0.0;
  CHECK(power_draw(spec) == 0.0);
}

TEST_CASE("brake table") {
  const std::string csv = brake_table_csv(BrakeSpec{}, 4);
  CHECK(csv.rfind("stacks,force_N,torque_mNm,power_W\n", 0) == 0);

  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  const double expected[] = {62.7, 125.4, 188.1, 250.7};
  for (double want : expected) {
    REQUIRE(std::getline(in, line));
    std::istringstream row(line);
    std::string stacks, force, torque;
    std::getline(row, stacks, ',');
    std::getline(row, force, ',');
    std::getline(row, torque, ',');
    CHECK(std::stod(torque) == doctest::Approx(want).epsilon(0.005));
  }
  CHECK_FALSE(std::getline(in, line));

  const std::string single = brake_table_csv(BrakeSpec{}, 1);
  CHECK(std::count(single.begin(), single.end(), '\n') == 2);

  BrakeSpec off;
  off.voltage = 0.0;
  CHECK(brake_table_csv(off, 2) == "stacks,force_N,torque_mNm,power_W\n1,0,0,0\n2,0,0,0\n");

  CHECK_THROWS_AS(brake_table_csv(BrakeSpec{}, 0), std::domain_error);
}
