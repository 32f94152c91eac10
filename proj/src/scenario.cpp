#include "ebrake/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string_view>

namespace ebrake {

namespace {

constexpr double kChainLimit = deg2rad(60.0);
constexpr double kLimitSlack = 1e-12;

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  const std::string& source() const { return source_; }

  [[noreturn]] void fail(const YAML::Node& at, const std::string& what) const {
    const int line = at.IsDefined() ? at.Mark().line + 1 : 0;
    throw ScenarioError(source_, line, what);
  }

  void expect_map(const YAML::Node& n, const std::string& where) const {
    if (!n.IsMap()) fail(n, where + ": expected a mapping");
  }

  void check_keys(const YAML::Node& map, std::initializer_list<std::string_view> allowed,
                  const std::string& where) const {
    expect_map(map, where);
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        fail(kv.first, where + ": unknown key '" + key + "'");
      }
    }
  }

  template <typename T>
  T get(const YAML::Node& map, const char* key, T fallback,
        const std::string& where) const {
    const YAML::Node n = map[key];
    if (!n.IsDefined() || n.IsNull()) return fallback;
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      fail(n, where + "." + key + ": wrong value type");
    }
  }

  template <typename T>
  T require(const YAML::Node& map, const char* key, const std::string& where) const {
    const YAML::Node n = map[key];
    if (!n.IsDefined() || n.IsNull()) fail(map, where + ": missing '" + key + "'");
    return get<T>(map, key, T{}, where);
  }

  double positive(const YAML::Node& map, const char* key, double fallback,
                  const std::string& where) const {
    const double v = get<double>(map, key, fallback, where);
    if (!(std::isfinite(v) && v > 0.0)) {
      fail(map[key].IsDefined() ? map[key] : map, where + "." + key + " must be > 0");
    }
    return v;
  }

  double nonnegative(const YAML::Node& map, const char* key, double fallback,
                     const std::string& where) const {
    const double v = get<double>(map, key, fallback, where);
    if (!(std::isfinite(v) && v >= 0.0)) {
      fail(map[key].IsDefined() ? map[key] : map, where + "." + key + " must be >= 0");
    }
    return v;
  }

  // Either `<key>` in radians or `<key>_deg` in degrees, not both.
  double angle(const YAML::Node& map, const std::string& key, double fallback,
               const std::string& where) const {
    const std::string deg_key = key + "_deg";
    const bool has_rad = map[key].IsDefined();
    const bool has_deg = map[deg_key].IsDefined();
    if (has_rad && has_deg) fail(map, where + ": give only one of " + key + ", " + deg_key);
    if (has_deg) return deg2rad(get<double>(map, deg_key.c_str(), 0.0, where));
    if (has_rad) return get<double>(map, key.c_str(), fallback, where);
    return fallback;
  }

  std::vector<double> angles(const YAML::Node& map, const std::string& key,
                             const std::string& where) const {
    const std::string deg_key = key + "_deg";
    if (map[key].IsDefined() && map[deg_key].IsDefined()) {
      fail(map, where + ": give only one of " + key + ", " + deg_key);
    }
    if (map[deg_key].IsDefined()) {
      auto v = get<std::vector<double>>(map, deg_key.c_str(), {}, where);
      for (double& a : v) a = deg2rad(a);
      return v;
    }
    return get<std::vector<double>>(map, key.c_str(), {}, where);
  }

 private:
  std::string source_;
};

BrakeSpec parse_brake(const Reader& r, const YAML::Node& n, BrakeSpec base,
                      const std::string& where) {
  if (!n.IsDefined() || n.IsNull()) return base;
  r.check_keys(n,
               {"voltage", "relative_permittivity", "dielectric_thickness", "overlap_area",
                "friction_coefficient", "num_stacks", "interfaces_per_stack",
                "pinion_pitch_diameter"},
               where);
  base.voltage = r.nonnegative(n, "voltage", base.voltage, where);
  base.relative_permittivity =
      r.positive(n, "relative_permittivity", base.relative_permittivity, where);
  base.dielectric_thickness =
      r.positive(n, "dielectric_thickness", base.dielectric_thickness, where);
  base.overlap_area = r.positive(n, "overlap_area", base.overlap_area, where);
  base.friction_coefficient =
      r.nonnegative(n, "friction_coefficient", base.friction_coefficient, where);
  base.num_stacks = r.get<int>(n, "num_stacks", base.num_stacks, where);
  base.interfaces_per_stack =
      r.get<int>(n, "interfaces_per_stack", base.interfaces_per_stack, where);
  base.pinion_pitch_diameter =
      r.positive(n, "pinion_pitch_diameter", base.pinion_pitch_diameter, where);
  if (base.num_stacks < 1) r.fail(n, where + ".num_stacks must be >= 1");
  if (base.interfaces_per_stack < 1) r.fail(n, where + ".interfaces_per_stack must be >= 1");
  return base;
}

Pose2 parse_pose(const Reader& r, const YAML::Node& n, const std::string& where) {
  if (!n.IsDefined() || n.IsNull()) return {};
  r.check_keys(n, {"x", "y", "heading", "heading_deg"}, where);
  return {r.get<double>(n, "x", 0.0, where), r.get<double>(n, "y", 0.0, where),
          r.angle(n, "heading", 0.0, where)};
}

JointSpec parse_joint(const Reader& r, const YAML::Node& n, JointSpec base,
                      const std::string& where) {
  r.check_keys(n,
               {"repeat", "limits", "limits_deg", "moment_arm", "inertia", "damping",
                "link_length", "link_radius", "spring", "brake"},
               where);
  const auto limits = r.angles(n, "limits", where);
  if (!limits.empty()) {
    if (limits.size() != 2) r.fail(n, where + ".limits: expected [lower, upper]");
    base.limits = {limits[0], limits[1]};
    if (!(base.limits.lower < base.limits.upper)) {
      r.fail(n, where + ".limits: lower must be below upper");
    }
  }
  base.moment_arm = r.positive(n, "moment_arm", base.moment_arm, where);
  base.rotational_inertia = r.positive(n, "inertia", base.rotational_inertia, where);
  base.viscous_damping = r.nonnegative(n, "damping", base.viscous_damping, where);
  base.link_length = r.positive(n, "link_length", base.link_length, where);
  base.link_radius = r.nonnegative(n, "link_radius", base.link_radius, where);
  const YAML::Node spring = n["spring"];
  if (spring.IsDefined()) {
    if (spring.IsNull()) {
      base.extension_spring.reset();
    } else {
      const std::string at = where + ".spring";
      r.check_keys(spring, {"stiffness", "rest_angle", "rest_angle_deg"}, at);
      ExtensionSpring s = base.extension_spring.value_or(ExtensionSpring{});
      s.stiffness = r.nonnegative(spring, "stiffness", s.stiffness, at);
      s.rest_angle = r.angle(spring, "rest_angle", s.rest_angle, at);
      base.extension_spring = s;
    }
  }
  base.brake = parse_brake(r, n["brake"], base.brake, where + ".brake");
  return base;
}

MotorSpec parse_motor(const Reader& r, const YAML::Node& n, const std::string& where) {
  r.check_keys(n,
               {"mode", "spool_radius", "max_speed", "position_gain", "min_position",
                "max_position", "tension_limit"},
               where);
  MotorSpec m;
  const auto mode = r.get<std::string>(n, "mode", "velocity", where);
  if (mode == "velocity") {
    m.control_mode = ControlMode::kVelocity;
  } else if (mode == "position") {
    m.control_mode = ControlMode::kPosition;
  } else {
    r.fail(n["mode"], where + ".mode must be 'velocity' or 'position'");
  }
  m.spool_radius = r.positive(n, "spool_radius", m.spool_radius, where);
  m.max_speed = r.positive(n, "max_speed", m.max_speed, where);
  m.position_gain = r.nonnegative(n, "position_gain", m.position_gain, where);
  m.min_position = r.get<double>(n, "min_position", m.min_position, where);
  m.max_position = r.get<double>(n, "max_position", m.max_position, where);
  m.tension_limit = r.positive(n, "tension_limit", m.tension_limit, where);
  if (!(m.min_position < m.max_position)) {
    r.fail(n, where + ": min_position must be below max_position");
  }
  return m;
}

TendonRoute parse_tendon(const Reader& r, const YAML::Node& n, const std::string& where) {
  r.check_keys(n,
               {"motor", "joints", "signs", "spool_direction", "stiffness", "rest_offset",
                "slack_allowed"},
               where);
  TendonRoute t;
  t.motor_id = r.require<int>(n, "motor", where);
  t.joints = r.require<std::vector<int>>(n, "joints", where);
  t.routing_signs = r.require<std::vector<int>>(n, "signs", where);
  t.spool_direction = r.get<int>(n, "spool_direction", 1, where);
  t.stiffness = r.positive(n, "stiffness", t.stiffness, where);
  t.rest_offset = r.get<double>(n, "rest_offset", 0.0, where);
  t.slack_allowed = r.get<bool>(n, "slack_allowed", true, where);
  if (t.joints.size() != t.routing_signs.size()) {
    r.fail(n, where + ": signs must have one entry per joint");
  }
  for (int s : t.routing_signs) {
    if (s != 1 && s != -1) r.fail(n["signs"], where + ".signs entries must be -1 or +1");
  }
  if (t.spool_direction != 1 && t.spool_direction != -1) {
    r.fail(n["spool_direction"], where + ".spool_direction must be -1 or +1");
  }
  return t;
}

ObjectSpec parse_object(const Reader& r, const YAML::Node& n, Vec2& initial) {
  const std::string where = "object";
  r.check_keys(n,
               {"radius", "mass", "table_friction_viscous", "table_friction_coulomb",
                "contact_stiffness", "contact_damping", "surface_friction",
                "initial_position"},
               where);
  ObjectSpec o;
  o.radius = r.positive(n, "radius", o.radius, where);
  o.mass = r.positive(n, "mass", o.mass, where);
  o.table_friction_viscous =
      r.nonnegative(n, "table_friction_viscous", o.table_friction_viscous, where);
  o.table_friction_coulomb =
      r.nonnegative(n, "table_friction_coulomb", o.table_friction_coulomb, where);
  o.contact_stiffness = r.positive(n, "contact_stiffness", o.contact_stiffness, where);
  o.contact_damping = r.nonnegative(n, "contact_damping", o.contact_damping, where);
  o.surface_friction = r.nonnegative(n, "surface_friction", o.surface_friction, where);
  const auto p = r.get<std::vector<double>>(n, "initial_position", {0.0, 0.0}, where);
  if (p.size() != 2) r.fail(n["initial_position"], "object.initial_position: expected [x, y]");
  initial = {p[0], p[1]};
  return o;
}

void parse_mechanism(const Reader& r, const YAML::Node& n, Scenario& sc) {
  const std::string where = "mechanism";
  r.check_keys(n,
               {"base_pose", "limit_stiffness", "allow_wide_limits", "palm_height",
                "joint_defaults", "joints", "motors", "tendons", "fingers"},
               where);
  MechanismSpec& m = sc.mechanism;
  m.name = sc.name;
  m.base_pose = parse_pose(r, n["base_pose"], where + ".base_pose");
  m.limit_stiffness = r.nonnegative(n, "limit_stiffness", m.limit_stiffness, where);
  sc.allow_wide_limits = r.get<bool>(n, "allow_wide_limits", false, where);
  if (n["palm_height"].IsDefined() && !n["palm_height"].IsNull()) {
    m.palm_height = r.get<double>(n, "palm_height", 0.0, where);
  }

  JointSpec defaults;
  defaults.brake = sc.brake_defaults;
  if (n["joint_defaults"].IsDefined()) {
    const YAML::Node d = n["joint_defaults"];
    if (d["repeat"].IsDefined()) r.fail(d["repeat"], "joint_defaults: 'repeat' not allowed");
    defaults = parse_joint(r, d, defaults, where + ".joint_defaults");
  }

  const YAML::Node joints = n["joints"];
  if (!joints.IsDefined() || !joints.IsSequence() || joints.size() == 0) {
    r.fail(joints.IsDefined() ? joints : n, "mechanism.joints: expected a non-empty list");
  }
  for (std::size_t i = 0; i < joints.size(); ++i) {
    const YAML::Node jn = joints[i];
    const std::string at = "mechanism.joints[" + std::to_string(i) + "]";
    if (jn.IsNull()) {
      m.joints.push_back(defaults);
      continue;
    }
    const JointSpec j = parse_joint(r, jn, defaults, at);
    const int repeat = r.get<int>(jn, "repeat", 1, at);
    if (repeat < 1) r.fail(jn["repeat"], at + ".repeat must be >= 1");
    if (sc.kind == MechanismKind::kChain && !sc.allow_wide_limits &&
        (j.limits.lower < -kChainLimit - kLimitSlack ||
         j.limits.upper > kChainLimit + kLimitSlack)) {
      r.fail(jn, at + ": chain joint limits must lie within -60..60 deg "
                      "(set mechanism.allow_wide_limits to override)");
    }
    for (int k = 0; k < repeat; ++k) m.joints.push_back(j);
  }
  // Defaults that only set the limits still have to honor the chain rule.
  if (sc.kind == MechanismKind::kChain && !sc.allow_wide_limits) {
    for (const JointSpec& j : m.joints) {
      if (j.limits.lower < -kChainLimit - kLimitSlack ||
          j.limits.upper > kChainLimit + kLimitSlack) {
        r.fail(joints, "mechanism.joints: chain joint limits must lie within -60..60 deg");
      }
    }
  }

  const YAML::Node motors = n["motors"];
  if (!motors.IsDefined() || !motors.IsSequence()) r.fail(n, "mechanism.motors: expected a list");
  for (std::size_t i = 0; i < motors.size(); ++i) {
    m.motors.push_back(parse_motor(r, motors[i], "mechanism.motors[" + std::to_string(i) + "]"));
  }
  const YAML::Node tendons = n["tendons"];
  if (!tendons.IsDefined() || !tendons.IsSequence()) {
    r.fail(n, "mechanism.tendons: expected a list");
  }
  for (std::size_t i = 0; i < tendons.size(); ++i) {
    m.tendons.push_back(
        parse_tendon(r, tendons[i], "mechanism.tendons[" + std::to_string(i) + "]"));
  }
  const YAML::Node fingers = n["fingers"];
  if (fingers.IsDefined()) {
    if (!fingers.IsSequence()) r.fail(fingers, "mechanism.fingers: expected a list");
    for (std::size_t i = 0; i < fingers.size(); ++i) {
      const std::string at = "mechanism.fingers[" + std::to_string(i) + "]";
      r.check_keys(fingers[i], {"base", "joints"}, at);
      FingerSpec f;
      f.base = parse_pose(r, fingers[i]["base"], at + ".base");
      f.joints = r.require<std::vector<int>>(fingers[i], "joints", at);
      m.fingers.push_back(std::move(f));
    }
  }

  try {
    Mechanism check(m);
  } catch (const std::invalid_argument& e) {
    r.fail(n, e.what());
  }
}

void parse_controller(const Reader& r, const YAML::Node& n, Scenario& sc) {
  r.check_keys(n, {"type", "voting", "mppi"}, "controller");
  const auto type = r.require<std::string>(n, "type", "controller");
  if (type == "voting") {
    sc.controller = ControllerKind::kVoting;
  } else if (type == "mppi") {
    sc.controller = ControllerKind::kMppi;
  } else {
    r.fail(n["type"], "controller.type must be 'voting' or 'mppi'");
  }

  if (const YAML::Node v = n["voting"]; v.IsDefined()) {
    const std::string at = "controller.voting";
    r.check_keys(v, {"motor_speed", "tolerance", "tolerance_deg", "control_period", "timeout"},
                 at);
    VotingSettings& s = sc.voting;
    s.motor_speed = r.positive(v, "motor_speed", s.motor_speed, at);
    s.tolerance = r.angle(v, "tolerance", s.tolerance, at);
    if (!(s.tolerance > 0.0)) r.fail(v, at + ".tolerance must be > 0");
    s.control_period = r.positive(v, "control_period", s.control_period, at);
    s.timeout = r.positive(v, "timeout", s.timeout, at);
  }

  if (const YAML::Node m = n["mppi"]; m.IsDefined()) {
    const std::string at = "controller.mppi";
    r.check_keys(m,
                 {"num_rollouts", "horizon", "lambda", "a1", "a2", "phi", "sigma",
                  "control_rate", "contact_threshold", "parameterization", "goal_x",
                  "success_tolerance", "timeout", "stall_window", "stall_progress"},
                 at);
    MppiSettings& s = sc.mppi;
    MppiParams& p = s.params;
    p.num_rollouts = r.get<int>(m, "num_rollouts", p.num_rollouts, at);
    p.horizon = r.get<int>(m, "horizon", p.horizon, at);
    p.lambda = r.positive(m, "lambda", p.lambda, at);
    p.a1 = r.nonnegative(m, "a1", p.a1, at);
    p.a2 = r.nonnegative(m, "a2", p.a2, at);
    p.phi = r.nonnegative(m, "phi", p.phi, at);
    p.sigma = r.nonnegative(m, "sigma", p.sigma, at);
    p.control_rate = r.positive(m, "control_rate", p.control_rate, at);
    p.contact_threshold = r.nonnegative(m, "contact_threshold", p.contact_threshold, at);
    const auto param = r.get<std::string>(m, "parameterization", "absolute", at);
    if (param == "absolute") {
      p.parameterization = CommandParameterization::kAbsolute;
    } else if (param == "delta") {
      p.parameterization = CommandParameterization::kDelta;
    } else {
      r.fail(m["parameterization"], at + ".parameterization must be 'absolute' or 'delta'");
    }
    if (p.num_rollouts < 1) r.fail(m, at + ".num_rollouts must be >= 1");
    if (p.horizon < 1) r.fail(m, at + ".horizon must be >= 1");
    s.goal_x = r.get<double>(m, "goal_x", s.goal_x, at);
    s.success_tolerance = r.positive(m, "success_tolerance", s.success_tolerance, at);
    s.timeout = r.positive(m, "timeout", s.timeout, at);
    s.stall_window = r.positive(m, "stall_window", s.stall_window, at);
    s.stall_progress = r.nonnegative(m, "stall_progress", s.stall_progress, at);
  }
}

void emit_brake(YAML::Emitter& out, const BrakeSpec& b) {
  out << YAML::BeginMap;
  out << YAML::Key << "voltage" << YAML::Value << b.voltage;
  out << YAML::Key << "relative_permittivity" << YAML::Value << b.relative_permittivity;
  out << YAML::Key << "dielectric_thickness" << YAML::Value << b.dielectric_thickness;
  out << YAML::Key << "overlap_area" << YAML::Value << b.overlap_area;
  out << YAML::Key << "friction_coefficient" << YAML::Value << b.friction_coefficient;
  out << YAML::Key << "num_stacks" << YAML::Value << b.num_stacks;
  out << YAML::Key << "interfaces_per_stack" << YAML::Value << b.interfaces_per_stack;
  out << YAML::Key << "pinion_pitch_diameter" << YAML::Value << b.pinion_pitch_diameter;
  out << YAML::EndMap;
}

void emit_pose(YAML::Emitter& out, const Pose2& p) {
  out << YAML::Flow << YAML::BeginMap;
  out << YAML::Key << "x" << YAML::Value << p.x;
  out << YAML::Key << "y" << YAML::Value << p.y;
  out << YAML::Key << "heading" << YAML::Value << p.heading;
  out << YAML::EndMap;
}

template <typename T>
void emit_list(YAML::Emitter& out, const std::vector<T>& v) {
  out << YAML::Flow << YAML::BeginSeq;
  for (const T& x : v) out << x;
  out << YAML::EndSeq;
}

}  // namespace

ScenarioError::ScenarioError(const std::string& source, int line, const std::string& what)
    : std::runtime_error(source + (line > 0 ? ":" + std::to_string(line) : std::string()) +
                         ": " + what),
      line_(line) {}

Scenario parse_scenario(const std::string& text, const std::string& source) {
  const Reader r(source);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ScenarioError(source, e.mark.line + 1, e.msg);
  }
  if (!root.IsDefined() || root.IsNull()) throw ScenarioError(source, 0, "empty scenario");
  r.check_keys(root,
               {"name", "kind", "seed", "integration", "brake", "mechanism", "object",
                "initial_state", "controller"},
               "scenario");

  Scenario sc;
  sc.name = r.get<std::string>(root, "name", "", "scenario");
  const auto kind = r.get<std::string>(root, "kind", "chain", "scenario");
  if (kind == "chain") {
    sc.kind = MechanismKind::kChain;
  } else if (kind == "hand") {
    sc.kind = MechanismKind::kHand;
  } else {
    r.fail(root["kind"], "kind must be 'chain' or 'hand'");
  }
  sc.seed = r.get<std::uint64_t>(root, "seed", 0, "scenario");

  if (const YAML::Node n = root["integration"]; n.IsDefined()) {
    const std::string at = "integration";
    r.check_keys(n, {"dt", "control_substeps", "brake_latency"}, at);
    sc.integration.dt = r.positive(n, "dt", sc.integration.dt, at);
    if (sc.integration.dt > kMaxPhysicsStep) r.fail(n["dt"], "integration.dt must be <= 0.005");
    sc.integration.control_substeps =
        r.get<int>(n, "control_substeps", sc.integration.control_substeps, at);
    if (sc.integration.control_substeps < 1) {
      r.fail(n["control_substeps"], "integration.control_substeps must be >= 1");
    }
    sc.integration.brake_latency =
        r.nonnegative(n, "brake_latency", sc.integration.brake_latency, at);
  }

  sc.brake_defaults = parse_brake(r, root["brake"], BrakeSpec{}, "brake");
  if (!root["mechanism"].IsDefined()) r.fail(root, "missing 'mechanism'");
  parse_mechanism(r, root["mechanism"], sc);

  if (const YAML::Node n = root["object"]; n.IsDefined() && !n.IsNull()) {
    sc.object = parse_object(r, n, sc.object_initial_position);
  }

  if (const YAML::Node n = root["initial_state"]; n.IsDefined()) {
    const std::string at = "initial_state";
    r.check_keys(n, {"joint_angles", "joint_angles_deg", "motor_positions"}, at);
    sc.initial_joint_angles = r.angles(n, "joint_angles", at);
    sc.initial_motor_positions = r.get<std::vector<double>>(n, "motor_positions", {}, at);
    if (!sc.initial_joint_angles.empty() &&
        sc.initial_joint_angles.size() != sc.mechanism.joints.size()) {
      r.fail(n, "initial_state: one joint angle per joint required");
    }
    if (!sc.initial_motor_positions.empty() &&
        sc.initial_motor_positions.size() != sc.mechanism.motors.size()) {
      r.fail(n, "initial_state: one motor position per motor required");
    }
  }

  if (!root["controller"].IsDefined()) r.fail(root, "missing 'controller'");
  parse_controller(r, root["controller"], sc);

  try {
    validate_scenario(sc, source);
  } catch (const ScenarioError& e) {
    if (e.line() > 0) throw;
    r.fail(root["controller"], e.what());
  }
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(path.string(), 0, "cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.string());
}

std::vector<std::vector<int>> finger_groups(const MechanismSpec& spec) {
  std::vector<std::vector<int>> groups;
  for (const FingerSpec& f : spec.fingers) groups.push_back(f.joints);
  if (groups.empty()) {
    groups.emplace_back();
    for (std::size_t j = 0; j < spec.joints.size(); ++j) {
      groups.back().push_back(static_cast<int>(j));
    }
  }
  return groups;
}

void validate_scenario(const Scenario& sc, const std::string& source) {
  auto fail = [&](const std::string& what) { throw ScenarioError(source, 0, what); };
  try {
    Mechanism check(sc.mechanism);
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  if (sc.object) {
    try {
      validate(*sc.object);
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
  }
  if (!(sc.integration.dt > 0.0 && sc.integration.dt <= kMaxPhysicsStep)) {
    fail("integration.dt must lie in (0, 0.005]");
  }
  if (sc.integration.control_substeps < 1) fail("integration.control_substeps must be >= 1");
  if (sc.kind == MechanismKind::kChain && !sc.allow_wide_limits) {
    for (const JointSpec& j : sc.mechanism.joints) {
      if (j.limits.lower < -kChainLimit - kLimitSlack ||
          j.limits.upper > kChainLimit + kLimitSlack) {
        fail("chain joint limits must lie within -60..60 deg");
      }
    }
  }
  if (sc.controller == ControllerKind::kMppi) {
    if (!sc.object) fail("controller.mppi requires an object");
    if (sc.mechanism.fingers.empty()) fail("controller.mppi requires fingers");
    std::size_t configs = 1;
    for (const FingerSpec& f : sc.mechanism.fingers) configs *= f.joints.size();
    try {
      validate(sc.mppi.params, configs);
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
    const double period = sc.integration.dt * sc.integration.control_substeps;
    if (std::abs(period * sc.mppi.params.control_rate - 1.0) > 1e-6) {
      fail("controller.mppi.control_rate must equal 1 / (dt * control_substeps)");
    }
  }
}

SimModel make_model(const Scenario& sc) {
  return SimModel{Mechanism(sc.mechanism), sc.object, sc.integration};
}

WorldState initial_state(const Scenario& sc, const SimModel& model) {
  WorldState s = model.mechanism.make_state(sc.initial_joint_angles,
                                            sc.initial_motor_positions);
  s.object_position = sc.object_initial_position;
  return s;
}

std::string serialize_scenario(const Scenario& sc) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << sc.name;
  out << YAML::Key << "kind" << YAML::Value
      << (sc.kind == MechanismKind::kChain ? "chain" : "hand");
  out << YAML::Key << "seed" << YAML::Value << sc.seed;

  out << YAML::Key << "integration" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "dt" << YAML::Value << sc.integration.dt;
  out << YAML::Key << "control_substeps" << YAML::Value << sc.integration.control_substeps;
  out << YAML::Key << "brake_latency" << YAML::Value << sc.integration.brake_latency;
  out << YAML::EndMap;

  out << YAML::Key << "brake" << YAML::Value;
  emit_brake(out, sc.brake_defaults);

  const MechanismSpec& m = sc.mechanism;
  out << YAML::Key << "mechanism" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "base_pose" << YAML::Value;
  emit_pose(out, m.base_pose);
  out << YAML::Key << "limit_stiffness" << YAML::Value << m.limit_stiffness;
  out << YAML::Key << "allow_wide_limits" << YAML::Value << sc.allow_wide_limits;
  if (m.palm_height) out << YAML::Key << "palm_height" << YAML::Value << *m.palm_height;
  out << YAML::Key << "joints" << YAML::Value << YAML::BeginSeq;
  for (const JointSpec& j : m.joints) {
    out << YAML::BeginMap;
    out << YAML::Key << "limits" << YAML::Value << YAML::Flow << YAML::BeginSeq
        << j.limits.lower << j.limits.upper << YAML::EndSeq;
    out << YAML::Key << "moment_arm" << YAML::Value << j.moment_arm;
    out << YAML::Key << "inertia" << YAML::Value << j.rotational_inertia;
    out << YAML::Key << "damping" << YAML::Value << j.viscous_damping;
    out << YAML::Key << "link_length" << YAML::Value << j.link_length;
    out << YAML::Key << "link_radius" << YAML::Value << j.link_radius;
    out << YAML::Key << "spring" << YAML::Value;
    if (j.extension_spring) {
      out << YAML::Flow << YAML::BeginMap;
      out << YAML::Key << "stiffness" << YAML::Value << j.extension_spring->stiffness;
      out << YAML::Key << "rest_angle" << YAML::Value << j.extension_spring->rest_angle;
      out << YAML::EndMap;
    } else {
      out << YAML::Null;
    }
    out << YAML::Key << "brake" << YAML::Value;
    emit_brake(out, j.brake);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  out << YAML::Key << "motors" << YAML::Value << YAML::BeginSeq;
  for (const MotorSpec& mo : m.motors) {
    out << YAML::BeginMap;
    out << YAML::Key << "mode" << YAML::Value
        << (mo.control_mode == ControlMode::kVelocity ? "velocity" : "position");
    out << YAML::Key << "spool_radius" << YAML::Value << mo.spool_radius;
    out << YAML::Key << "max_speed" << YAML::Value << mo.max_speed;
    out << YAML::Key << "position_gain" << YAML::Value << mo.position_gain;
    out << YAML::Key << "min_position" << YAML::Value << mo.min_position;
    out << YAML::Key << "max_position" << YAML::Value << mo.max_position;
    out << YAML::Key << "tension_limit" << YAML::Value << mo.tension_limit;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  out << YAML::Key << "tendons" << YAML::Value << YAML::BeginSeq;
  for (const TendonRoute& t : m.tendons) {
    out << YAML::BeginMap;
    out << YAML::Key << "motor" << YAML::Value << t.motor_id;
    out << YAML::Key << "joints" << YAML::Value;
    emit_list(out, t.joints);
    out << YAML::Key << "signs" << YAML::Value;
    emit_list(out, t.routing_signs);
    out << YAML::Key << "spool_direction" << YAML::Value << t.spool_direction;
    out << YAML::Key << "stiffness" << YAML::Value << t.stiffness;
    out << YAML::Key << "rest_offset" << YAML::Value << t.rest_offset;
    out << YAML::Key << "slack_allowed" << YAML::Value << t.slack_allowed;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  if (!m.fingers.empty()) {
    out << YAML::Key << "fingers" << YAML::Value << YAML::BeginSeq;
    for (const FingerSpec& f : m.fingers) {
      out << YAML::BeginMap;
      out << YAML::Key << "base" << YAML::Value;
      emit_pose(out, f.base);
      out << YAML::Key << "joints" << YAML::Value;
      emit_list(out, f.joints);
      out << YAML::EndMap;
    }
    out << YAML::EndSeq;
  }
  out << YAML::EndMap;

  if (sc.object) {
    const ObjectSpec& o = *sc.object;
    out << YAML::Key << "object" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "radius" << YAML::Value << o.radius;
    out << YAML::Key << "mass" << YAML::Value << o.mass;
    out << YAML::Key << "table_friction_viscous" << YAML::Value << o.table_friction_viscous;
    out << YAML::Key << "table_friction_coulomb" << YAML::Value << o.table_friction_coulomb;
    out << YAML::Key << "contact_stiffness" << YAML::Value << o.contact_stiffness;
    out << YAML::Key << "contact_damping" << YAML::Value << o.contact_damping;
    out << YAML::Key << "surface_friction" << YAML::Value << o.surface_friction;
    out << YAML::Key << "initial_position" << YAML::Value << YAML::Flow << YAML::BeginSeq
        << sc.object_initial_position.x << sc.object_initial_position.y << YAML::EndSeq;
    out << YAML::EndMap;
  }

  out << YAML::Key << "initial_state" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "joint_angles" << YAML::Value;
  emit_list(out, sc.initial_joint_angles);
  out << YAML::Key << "motor_positions" << YAML::Value;
  emit_list(out, sc.initial_motor_positions);
  out << YAML::EndMap;

  out << YAML::Key << "controller" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "type" << YAML::Value
      << (sc.controller == ControllerKind::kVoting ? "voting" : "mppi");
  out << YAML::Key << "voting" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "motor_speed" << YAML::Value << sc.voting.motor_speed;
  out << YAML::Key << "tolerance" << YAML::Value << sc.voting.tolerance;
  out << YAML::Key << "control_period" << YAML::Value << sc.voting.control_period;
  out << YAML::Key << "timeout" << YAML::Value << sc.voting.timeout;
  out << YAML::EndMap;
  const MppiParams& p = sc.mppi.params;
  out << YAML::Key << "mppi" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "num_rollouts" << YAML::Value << p.num_rollouts;
  out << YAML::Key << "horizon" << YAML::Value << p.horizon;
  out << YAML::Key << "lambda" << YAML::Value << p.lambda;
  out << YAML::Key << "a1" << YAML::Value << p.a1;
  out << YAML::Key << "a2" << YAML::Value << p.a2;
  out << YAML::Key << "phi" << YAML::Value << p.phi;
  out << YAML::Key << "sigma" << YAML::Value << p.sigma;
  out << YAML::Key << "control_rate" << YAML::Value << p.control_rate;
  out << YAML::Key << "contact_threshold" << YAML::Value << p.contact_threshold;
  out << YAML::Key << "parameterization" << YAML::Value
      << (p.parameterization == CommandParameterization::kAbsolute ? "absolute" : "delta");
  out << YAML::Key << "goal_x" << YAML::Value << sc.mppi.goal_x;
  out << YAML::Key << "success_tolerance" << YAML::Value << sc.mppi.success_tolerance;
  out << YAML::Key << "timeout" << YAML::Value << sc.mppi.timeout;
  out << YAML::Key << "stall_window" << YAML::Value << sc.mppi.stall_window;
  out << YAML::Key << "stall_progress" << YAML::Value << sc.mppi.stall_progress;
  out << YAML::EndMap;
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace ebrake
