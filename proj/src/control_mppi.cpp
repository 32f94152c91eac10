#include "ebrake/control_mppi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace ebrake {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Drops the first tick and pads the tail.
MotorPlan shifted(const MotorPlan& plan, CommandParameterization p) {
  MotorPlan out(plan.begin() + 1, plan.end());
  if (p == CommandParameterization::kAbsolute) {
    out.push_back(plan.back());
  } else {
    out.push_back(std::vector<double>(plan.back().size(), 0.0));
  }
  return out;
}

MotorPlan hold_plan(const SimModel& model, const WorldState& world, int horizon,
                    CommandParameterization p) {
  std::vector<double> tick(model.mechanism.num_motors(), 0.0);
  if (p == CommandParameterization::kAbsolute) tick = world.motor_positions;
  return MotorPlan(horizon, tick);
}

std::vector<Command> plan_commands(const MotorPlan& targets,
                                   const std::vector<bool>& brakes) {
  std::vector<Command> cmds(targets.size());
  for (std::size_t h = 0; h < targets.size(); ++h) {
    cmds[h].motor_commands = targets[h];
    cmds[h].brake_engaged = brakes;
  }
  return cmds;
}

}  // namespace

void validate(const MppiParams& p, std::size_t num_configs) {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("MppiParams: ") + what);
  };
  need(p.num_rollouts >= 1, "num_rollouts must be >= 1");
  need(p.horizon >= 1, "horizon must be >= 1");
  need(p.lambda > 0.0, "lambda must be > 0");
  need(p.phi >= 0.0, "phi must be >= 0");
  need(p.sigma >= 0.0, "sigma must be >= 0");
  need(p.a1 >= 0.0 && p.a2 >= 0.0, "cost weights must be >= 0");
  need(p.control_rate > 0.0, "control_rate must be > 0");
  need(p.contact_threshold >= 0.0, "contact_threshold must be >= 0");
  need(num_configs >= 1, "at least one brake configuration is required");
  need(static_cast<std::size_t>(p.num_rollouts) % num_configs == 0,
       "num_rollouts must be divisible by the number of brake configurations");
}

std::vector<std::vector<bool>> enumerate_brake_configs(
    const std::vector<std::vector<int>>& fingers, int num_joints) {
  std::vector<std::vector<bool>> configs{std::vector<bool>(num_joints, true)};
  for (const auto& finger : fingers) {
    if (finger.empty()) throw std::domain_error("enumerate_brake_configs: empty finger");
    std::vector<std::vector<bool>> next;
    next.reserve(configs.size() * finger.size());
    for (const auto& prefix : configs) {
      for (int joint : finger) {
        if (joint < 0 || joint >= num_joints) {
          throw std::domain_error("enumerate_brake_configs: joint index out of range");
        }
        auto c = prefix;
        c[joint] = false;
        next.push_back(std::move(c));
      }
    }
    configs = std::move(next);
  }
  return configs;
}

double contact_distance_cost(std::span<const int> not_in_contact, double final_x,
                             const GoalSpec& goal, const MppiParams& params) {
  double count = 0.0;
  for (int c : not_in_contact) count += c;
  return params.a1 * count + params.a2 * std::abs(goal.goal_x - final_x);
}

double trajectory_cost(const SimModel& model, const Trajectory& traj,
                       const GoalSpec& goal, const MppiParams& params) {
  if (traj.states.size() != static_cast<std::size_t>(params.horizon) + 1) {
    throw std::invalid_argument("trajectory_cost: expected horizon + 1 states");
  }
  if (!model.object) throw std::invalid_argument("trajectory_cost: model has no object");
  std::vector<int> missing;
  missing.reserve(traj.states.size());
  for (const WorldState& s : traj.states) {
    missing.push_back(count_fingertips_not_in_contact(
        model.mechanism, s, *model.object, params.contact_threshold));
  }
  return contact_distance_cost(missing, traj.states.back().object_position.x,
                               goal, params);
}

std::vector<double> softmax_weights(std::span<const double> costs, double lambda) {
  if (costs.empty()) throw std::domain_error("softmax_weights: no costs");
  if (!(lambda > 0.0)) throw std::domain_error("softmax_weights: lambda must be > 0");
  const double best = *std::min_element(costs.begin(), costs.end());
  if (!std::isfinite(best)) {
    throw std::domain_error("softmax_weights: every cost is infinite");
  }
  std::vector<double> w(costs.size());
  double total = 0.0;
  for (std::size_t k = 0; k < costs.size(); ++k) {
    w[k] = std::isfinite(costs[k]) ? std::exp(-(costs[k] - best) / lambda) : 0.0;
    total += w[k];
  }
  for (double& x : w) x /= total;
  return w;
}

MotorPlan weighted_average(std::span<const MotorPlan> sequences,
                           std::span<const double> costs, double lambda) {
  if (sequences.empty()) throw std::domain_error("weighted_average: no sequences");
  if (sequences.size() != costs.size()) {
    throw std::domain_error("weighted_average: one cost per sequence");
  }
  const std::vector<double> w = softmax_weights(costs, lambda);
  MotorPlan out = sequences.front();
  for (auto& tick : out) std::fill(tick.begin(), tick.end(), 0.0);
  for (std::size_t k = 0; k < sequences.size(); ++k) {
    if (w[k] == 0.0) continue;
    if (sequences[k].size() != out.size()) {
      throw std::domain_error("weighted_average: sequences differ in length");
    }
    for (std::size_t h = 0; h < out.size(); ++h) {
      for (std::size_t m = 0; m < out[h].size(); ++m) {
        out[h][m] += w[k] * sequences[k][h][m];
      }
    }
  }
  return out;
}

int select_config(std::span<const double> costs, std::optional<int> previous,
                  double phi) {
  if (costs.empty()) throw std::domain_error("select_config: no costs");
  const int best = static_cast<int>(
      std::min_element(costs.begin(), costs.end()) - costs.begin());
  if (!previous) return best;
  const int prev = *previous;
  if (prev < 0 || prev >= static_cast<int>(costs.size())) {
    throw std::domain_error("select_config: previous config out of range");
  }
  if (best == prev) return prev;
  const double prev_cost = costs[prev];
  if (!std::isfinite(prev_cost)) return std::isfinite(costs[best]) ? best : prev;
  return costs[best] < (1.0 - phi) * prev_cost ? best : prev;
}

std::uint64_t rollout_seed(std::uint64_t master, std::uint64_t step, int config,
                           int sample) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ step);
  h = splitmix64(h ^ static_cast<std::uint64_t>(config));
  return splitmix64(h ^ static_cast<std::uint64_t>(sample));
}

MotorPlan plan_targets(const MotorPlan& plan, std::span<const double> motor_positions,
                       CommandParameterization parameterization) {
  if (parameterization == CommandParameterization::kAbsolute) return plan;
  MotorPlan out = plan;
  std::vector<double> target(motor_positions.begin(), motor_positions.end());
  for (auto& tick : out) {
    for (std::size_t m = 0; m < tick.size(); ++m) {
      target[m] += tick[m];
      tick[m] = target[m];
    }
  }
  return out;
}

MppiStepResult mppi_step(const SimModel& model, const WorldState& world,
                         const GoalSpec& goal, const MppiParams& params,
                         const std::vector<std::vector<bool>>& configs,
                         const MppiPlan& previous, ThreadPool& pool) {
  validate(params, configs.size());
  const int num_configs = static_cast<int>(configs.size());
  const int per_config = params.num_rollouts / num_configs;
  const int motors = model.mechanism.num_motors();
  const auto& motor_specs = model.mechanism.spec().motors;
  const auto param = params.parameterization;

  // Nominal plan per configuration: the previous average, shifted.
  std::vector<MotorPlan> nominal(num_configs);
  for (int c = 0; c < num_configs; ++c) {
    if (previous.per_config.size() == configs.size() &&
        previous.per_config[c].size() == static_cast<std::size_t>(params.horizon)) {
      nominal[c] = shifted(previous.per_config[c], param);
    } else {
      nominal[c] = hold_plan(model, world, params.horizon, param);
    }
  }

  const std::size_t total = static_cast<std::size_t>(num_configs) * per_config;
  std::vector<MotorPlan> samples(total);
  std::vector<double> sample_costs(total, kInf);

  pool.parallel_for(total, [&](std::size_t idx) {
    const int c = static_cast<int>(idx) / per_config;
    const int k = static_cast<int>(idx) % per_config;
    std::mt19937_64 rng(rollout_seed(params.seed, previous.step_index, c, k));
    std::normal_distribution<double> noise(0.0, 1.0);
    MotorPlan seq = nominal[c];
    std::vector<double> target(world.motor_positions.begin(),
                               world.motor_positions.end());
    for (auto& tick : seq) {
      for (int m = 0; m < motors; ++m) {
        if (params.sigma > 0.0) tick[m] += params.sigma * noise(rng);
        // Clamp the resulting target to the motor's travel.
        const double lo = motor_specs[m].min_position;
        const double hi = motor_specs[m].max_position;
        if (param == CommandParameterization::kAbsolute) {
          tick[m] = std::clamp(tick[m], lo, hi);
        } else {
          const double next = std::clamp(target[m] + tick[m], lo, hi);
          tick[m] = next - target[m];
          target[m] = next;
        }
      }
    }
    try {
      const auto cmds = plan_commands(
          plan_targets(seq, world.motor_positions, param), configs[c]);
      const Trajectory traj = rollout(model, world, cmds);
      sample_costs[idx] = trajectory_cost(model, traj, goal, params);
    } catch (const IntegrationFault&) {
      sample_costs[idx] = kInf;
    }
    samples[idx] = std::move(seq);
  });

  MppiStepResult result;
  result.plan.per_config.resize(num_configs);
  result.diagnostics.config_costs.assign(num_configs, kInf);
  result.diagnostics.best_sample_costs.assign(num_configs, kInf);
  for (double cost : sample_costs) {
    result.diagnostics.faulted_samples += std::isfinite(cost) ? 0 : 1;
  }

  std::vector<bool> usable(num_configs, false);
  for (int c = 0; c < num_configs; ++c) {
    const auto begin = static_cast<std::size_t>(c) * per_config;
    std::span<const MotorPlan> seqs(samples.data() + begin, per_config);
    std::span<const double> costs(sample_costs.data() + begin, per_config);
    const double best = *std::min_element(costs.begin(), costs.end());
    result.diagnostics.best_sample_costs[c] = best;
    if (std::isfinite(best)) {
      result.plan.per_config[c] = weighted_average(seqs, costs, params.lambda);
      usable[c] = true;
    } else {
      result.plan.per_config[c] = nominal[c];
    }
  }

  // Score each averaged plan with one more rollout.
  pool.parallel_for(num_configs, [&](std::size_t c) {
    if (!usable[c]) return;
    try {
      const auto cmds = plan_commands(
          plan_targets(result.plan.per_config[c], world.motor_positions, param),
          configs[c]);
      const Trajectory traj = rollout(model, world, cmds);
      result.diagnostics.config_costs[c] = trajectory_cost(model, traj, goal, params);
    } catch (const IntegrationFault&) {
      result.diagnostics.config_costs[c] = kInf;
    }
  });

  const int chosen =
      select_config(result.diagnostics.config_costs, previous.previous_config, params.phi);
  result.diagnostics.chosen = chosen;
  result.plan.previous_config = chosen;
  result.plan.step_index = previous.step_index + 1;

  const MotorPlan targets =
      plan_targets(result.plan.per_config[chosen], world.motor_positions, param);
  result.action.motor_targets = targets.front();
  result.action.brake_config = chosen;
  return result;
}

}  // namespace ebrake
