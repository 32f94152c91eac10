#include "ebrake/mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ebrake {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("MechanismSpec: " + what);
}

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

// Closest point to c on segment [a, b].
Vec2 closest_on_segment(Vec2 a, Vec2 b, Vec2 c) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 <= 0.0) return a;
  const double t = std::clamp(dot(c - a, ab) / len2, 0.0, 1.0);
  return a + t * ab;
}

}  // namespace

void validate(const ObjectSpec& o) {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("ObjectSpec: ") + what);
  };
  need(positive(o.radius), "radius must be > 0");
  need(positive(o.mass), "mass must be > 0");
  need(positive(o.contact_stiffness), "contact_stiffness must be > 0");
  need(o.table_friction_viscous >= 0.0, "table_friction_viscous must be >= 0");
  need(o.table_friction_coulomb >= 0.0, "table_friction_coulomb must be >= 0");
  need(o.contact_damping >= 0.0, "contact_damping must be >= 0");
  need(o.surface_friction >= 0.0, "surface_friction must be >= 0");
}

Mechanism::Mechanism(MechanismSpec spec) : spec_(std::move(spec)) {
  const int n = num_joints();
  require(n >= 1, "at least one joint is required");
  require(spec_.limit_stiffness >= 0.0, "limit_stiffness must be >= 0");
  require(!spec_.palm_height || std::isfinite(*spec_.palm_height),
          "palm_height must be finite");

  holding_torque_.resize(n);
  for (int i = 0; i < n; ++i) {
    const JointSpec& j = spec_.joints[i];
    const std::string at = "joints[" + std::to_string(i) + "]: ";
    require(j.limits.lower < j.limits.upper, at + "limits.lower < limits.upper");
    require(positive(j.rotational_inertia), at + "rotational_inertia must be > 0");
    require(j.viscous_damping >= 0.0, at + "viscous_damping must be >= 0");
    require(positive(j.moment_arm), at + "moment_arm must be > 0");
    require(positive(j.link_length), at + "link_length must be > 0");
    require(j.link_radius >= 0.0, at + "link_radius must be >= 0");
    if (j.extension_spring) {
      require(j.extension_spring->stiffness >= 0.0,
              at + "spring stiffness must be >= 0");
    }
    try {
      validate(j.brake);
      holding_torque_[i] = max_brake_torque(j.brake);
    } catch (const std::domain_error& e) {
      require(false, at + e.what());
    }
  }

  for (std::size_t m = 0; m < spec_.motors.size(); ++m) {
    const MotorSpec& motor = spec_.motors[m];
    const std::string at = "motors[" + std::to_string(m) + "]: ";
    require(positive(motor.spool_radius), at + "spool_radius must be > 0");
    require(positive(motor.max_speed), at + "max_speed must be > 0");
    require(motor.position_gain >= 0.0, at + "position_gain must be >= 0");
    require(motor.min_position < motor.max_position,
            at + "min_position < max_position");
    require(positive(motor.tension_limit), at + "tension_limit must be > 0");
  }

  std::vector<int> coupled(n, 0);
  for (std::size_t t = 0; t < spec_.tendons.size(); ++t) {
    const TendonRoute& r = spec_.tendons[t];
    const std::string at = "tendons[" + std::to_string(t) + "]: ";
    require(r.motor_id >= 0 && r.motor_id < num_motors(),
            at + "motor_id out of range");
    require(r.joints.size() == r.routing_signs.size(),
            at + "routing_signs length must equal joints length");
    require(!r.joints.empty(), at + "route couples no joints");
    require(positive(r.stiffness), at + "stiffness must be > 0");
    require(r.spool_direction == 1 || r.spool_direction == -1,
            at + "spool_direction must be -1 or +1");
    require(r.slack_allowed, at + "bilateral (non-slack) tendons are unsupported");
    for (std::size_t k = 0; k < r.joints.size(); ++k) {
      require(r.joints[k] >= 0 && r.joints[k] < n, at + "joint index out of range");
      require(r.routing_signs[k] == 1 || r.routing_signs[k] == -1,
              at + "routing signs must be -1 or +1");
      ++coupled[r.joints[k]];
    }
  }
  for (int i = 0; i < n; ++i) {
    require(coupled[i] >= 1,
            "joints[" + std::to_string(i) + "] is not coupled to any tendon");
  }

  if (spec_.fingers.empty()) {
    SerialChain chain{spec_.base_pose, {}};
    for (int i = 0; i < n; ++i) chain.joints.push_back(i);
    chains_.push_back(std::move(chain));
  } else {
    std::vector<int> owner(n, -1);
    for (std::size_t f = 0; f < spec_.fingers.size(); ++f) {
      const FingerSpec& finger = spec_.fingers[f];
      require(!finger.joints.empty(),
              "fingers[" + std::to_string(f) + "] has no joints");
      for (int j : finger.joints) {
        require(j >= 0 && j < n, "finger joint index out of range");
        require(owner[j] < 0, "joint " + std::to_string(j) +
                                  " belongs to more than one finger");
        owner[j] = static_cast<int>(f);
      }
      chains_.push_back({compose(spec_.base_pose, finger.base), finger.joints});
    }
    for (int i = 0; i < n; ++i) {
      require(owner[i] >= 0,
              "fingers must partition the joints; joint " + std::to_string(i) +
                  " is unassigned");
    }
  }
}

int Mechanism::motor_direction(int joint, int motor) const {
  // Positive motor rotation shortens take-up-positive tendons, which pull
  // their joints in the routing-sign direction.
  int net = 0;
  for (const TendonRoute& r : spec_.tendons) {
    if (r.motor_id != motor) continue;
    for (std::size_t k = 0; k < r.joints.size(); ++k) {
      if (r.joints[k] == joint) net += r.spool_direction * r.routing_signs[k];
    }
  }
  return (net > 0) - (net < 0);
}

WorldState Mechanism::make_state(std::span<const double> joint_angles,
                                 std::span<const double> motor_positions) const {
  const auto n = static_cast<std::size_t>(num_joints());
  const auto m = static_cast<std::size_t>(num_motors());
  require(joint_angles.empty() || joint_angles.size() == n,
          "initial joint angle count mismatch");
  require(motor_positions.empty() || motor_positions.size() == m,
          "initial motor position count mismatch");
  WorldState s;
  s.joint_angles.assign(n, 0.0);
  if (!joint_angles.empty()) {
    std::copy(joint_angles.begin(), joint_angles.end(), s.joint_angles.begin());
  }
  s.joint_velocities.assign(n, 0.0);
  s.brake_engaged.assign(n, false);
  s.brake_changed_at.assign(n, 0.0);
  s.motor_positions.assign(m, 0.0);
  if (!motor_positions.empty()) {
    std::copy(motor_positions.begin(), motor_positions.end(),
              s.motor_positions.begin());
  }
  return s;
}

namespace detail {

void compute_kinematics(const Mechanism& mech,
                        std::span<const double> joint_angles,
                        std::vector<LinkSegment>& links,
                        std::vector<Vec2>& tips) {
  links.resize(mech.num_joints());
  tips.resize(mech.chains().size());
  for (std::size_t c = 0; c < mech.chains().size(); ++c) {
    const SerialChain& chain = mech.chains()[c];
    Vec2 p = chain.base.position();
    double heading = chain.base.heading;
    for (int j : chain.joints) {
      heading += joint_angles[j];
      const Vec2 end = p + mech.joint(j).link_length * unit_heading(heading);
      links[j] = {p, end, heading};
      p = end;
    }
    tips[c] = p;
  }
}

void compute_tensions(const Mechanism& mech, const WorldState& state,
                      std::vector<double>& tensions) {
  const auto& spec = mech.spec();
  tensions.resize(spec.tendons.size());
  for (std::size_t t = 0; t < spec.tendons.size(); ++t) {
    const TendonRoute& r = spec.tendons[t];
    const MotorSpec& motor = spec.motors[r.motor_id];
    const double take_up = r.spool_direction * motor.spool_radius *
                               state.motor_positions[r.motor_id] +
                           r.rest_offset;
    double excursion = 0.0;
    for (std::size_t k = 0; k < r.joints.size(); ++k) {
      const int j = r.joints[k];
      excursion += r.routing_signs[k] * mech.joint(j).moment_arm *
                   state.joint_angles[j];
    }
    tensions[t] = r.stiffness * std::max(0.0, take_up - excursion);
  }
}

Vec2 accumulate_torques(const Mechanism& mech, const WorldState& state,
                        const ObjectSpec* object, TorqueScratch& scratch,
                        std::vector<LinkContact>* contacts) {
  const auto& spec = mech.spec();
  const int n = mech.num_joints();
  auto& tau = scratch.torques;
  tau.assign(n, 0.0);

  for (std::size_t t = 0; t < spec.tendons.size(); ++t) {
    const TendonRoute& r = spec.tendons[t];
    const double tension = scratch.tensions[t];
    if (tension == 0.0) continue;
    for (std::size_t k = 0; k < r.joints.size(); ++k) {
      const int j = r.joints[k];
      tau[j] += r.routing_signs[k] * mech.joint(j).moment_arm * tension;
    }
  }

  for (int j = 0; j < n; ++j) {
    const JointSpec& js = mech.joint(j);
    const double q = state.joint_angles[j];
    if (js.extension_spring) {
      tau[j] -= js.extension_spring->stiffness *
                (q - js.extension_spring->rest_angle);
    }
    tau[j] -= js.viscous_damping * state.joint_velocities[j];
    if (q > js.limits.upper) {
      tau[j] -= spec.limit_stiffness * (q - js.limits.upper);
    } else if (q < js.limits.lower) {
      tau[j] -= spec.limit_stiffness * (q - js.limits.lower);
    }
  }

  Vec2 object_force;
  if (object == nullptr) return object_force;

  const Vec2 center = state.object_position;
  for (const SerialChain& chain : mech.chains()) {
    for (std::size_t k = 0; k < chain.joints.size(); ++k) {
      const int j = chain.joints[k];
      const LinkSegment& link = scratch.links[j];
      const double reach = object->radius + mech.joint(j).link_radius;
      // Cheap reject on the bounding circle of the capsule.
      const Vec2 mid = 0.5 * (link.start + link.end);
      const Vec2 dm = center - mid;
      const double bound = reach + 0.5 * mech.joint(j).link_length;
      if (dot(dm, dm) >= bound * bound) continue;

      const Vec2 p = closest_on_segment(link.start, link.end, center);
      const Vec2 d = center - p;
      const double dist = norm(d);
      const double penetration = reach - dist;
      if (penetration <= 0.0 || dist <= 0.0) continue;
      const Vec2 normal = (1.0 / dist) * d;

      // Velocity of the link point from every joint up to and including j.
      Vec2 v_link;
      for (std::size_t i = 0; i <= k; ++i) {
        const int ji = chain.joints[i];
        v_link += state.joint_velocities[ji] * perp(p - scratch.links[ji].start);
      }
      const Vec2 v_rel = state.object_velocity - v_link;
      const double approach = -dot(v_rel, normal);
      const double fn = std::max(
          0.0, object->contact_stiffness * penetration +
                   object->contact_damping * approach);
      const Vec2 tangent = perp(normal);
      const double limit = object->surface_friction * fn;
      const double ft = std::clamp(-object->contact_damping * dot(v_rel, tangent),
                                   -limit, limit);
      const Vec2 on_object = fn * normal + ft * tangent;
      object_force += on_object;
      const Vec2 on_link = -on_object;
      for (std::size_t i = 0; i <= k; ++i) {
        const int ji = chain.joints[i];
        tau[ji] += cross(p - scratch.links[ji].start, on_link);
      }
      if (contacts != nullptr) {
        contacts->push_back({j, p, normal, penetration, on_link});
      }
    }
  }
  if (spec.palm_height) {
    const double penetration = object->radius - (center.y - *spec.palm_height);
    if (penetration > 0.0) {
      // Frictionless; table friction already acts on the object.
      const double fn = std::max(0.0, object->contact_stiffness * penetration -
                                          object->contact_damping * state.object_velocity.y);
      object_force.y += fn;
    }
  }
  return object_force;
}

}  // namespace detail

Kinematics forward_kinematics(const Mechanism& mech,
                              std::span<const double> joint_angles) {
  if (joint_angles.size() != static_cast<std::size_t>(mech.num_joints())) {
    throw std::domain_error("forward_kinematics: expected " +
                                std::to_string(mech.num_joints()) +
                                " joint angles, got " +
                                std::to_string(joint_angles.size()));
  }
  Kinematics k;
  detail::compute_kinematics(mech, joint_angles, k.links, k.fingertips);
  return k;
}

double tendon_excursion(const Mechanism& mech,
                        std::span<const double> joint_angles,
                        const TendonRoute& route) {
  double excursion = 0.0;
  for (std::size_t k = 0; k < route.joints.size(); ++k) {
    const int j = route.joints[k];
    excursion += route.routing_signs[k] * mech.joint(j).moment_arm *
                 joint_angles[j];
  }
  return excursion;
}

std::vector<double> tendon_tensions(const Mechanism& mech,
                                    const WorldState& state) {
  std::vector<double> tensions;
  detail::compute_tensions(mech, state, tensions);
  return tensions;
}

std::vector<double> net_joint_torques(const Mechanism& mech,
                                      const WorldState& state,
                                      std::span<const double> tensions,
                                      const ObjectSpec* object) {
  if (tensions.size() != static_cast<std::size_t>(mech.num_tendons())) {
    throw std::invalid_argument("net_joint_torques: one tension per tendon");
  }
  for (double t : tensions) {
    if (!(t >= 0.0)) throw std::domain_error("net_joint_torques: negative tension");
  }
  detail::TorqueScratch scratch;
  scratch.tensions.assign(tensions.begin(), tensions.end());
  detail::compute_kinematics(mech, state.joint_angles, scratch.links,
                             scratch.tips);
  detail::accumulate_torques(mech, state, object, scratch);
  return scratch.torques;
}

ContactWrench contact_wrench(const Mechanism& mech, const WorldState& state,
                             const ObjectSpec& object) {
  detail::TorqueScratch scratch;
  scratch.tensions.assign(mech.num_tendons(), 0.0);
  detail::compute_kinematics(mech, state.joint_angles, scratch.links,
                             scratch.tips);
  ContactWrench w;
  w.force_on_object =
      detail::accumulate_torques(mech, state, &object, scratch, &w.contacts);
  return w;
}

std::vector<bool> fingertip_contacts(const Mechanism& mech,
                                     const WorldState& state,
                                     const ObjectSpec& object,
                                     double threshold) {
  const Kinematics k = forward_kinematics(mech, state.joint_angles);
  std::vector<bool> touching(mech.chains().size(), false);
  for (std::size_t c = 0; c < mech.chains().size(); ++c) {
    const int tip_joint = mech.chains()[c].joints.back();
    const double gap = norm(k.fingertips[c] - state.object_position) -
                       object.radius - mech.joint(tip_joint).link_radius;
    touching[c] = gap <= threshold;
  }
  return touching;
}

int count_fingertips_not_in_contact(const Mechanism& mech,
                                    const WorldState& state,
                                    const ObjectSpec& object,
                                    double threshold) {
  const auto touching = fingertip_contacts(mech, state, object, threshold);
  return static_cast<int>(std::count(touching.begin(), touching.end(), false));
}

}  // namespace ebrake
