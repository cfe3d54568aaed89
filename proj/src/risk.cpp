#include "riskplan/risk.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "riskplan/errors.hpp"

namespace riskplan {

void validate(const RiskParams& params, const std::string& field) {
  auto check = [&](double v, const char* name) {
    if (!std::isfinite(v) || !(v > 0.0)) {
      throw ValidationError(field + "." + name, "must be finite and > 0");
    }
  };
  check(params.epsilon, "epsilon");
  check(params.ttc_clamp_sigma, "ttc_clamp_sigma");
  check(params.tau_risk, "tau_risk");
  check(params.sigma_risk, "sigma_risk");
}

RelativeKinematics relative_kinematics(const KinematicState& ego, const KinematicState& agent) {
  RelativeKinematics rel;
  rel.p_rel = agent.pose.position() - ego.pose.position();
  rel.v_rel = agent.velocity.vector() - ego.velocity.vector();
  rel.distance = norm(rel.p_rel);
  return rel;
}

double ttc(Vec2 p_rel, Vec2 v_rel, double distance, const RiskParams& params) {
  const double p_norm = norm(p_rel);
  double closing_speed = 0.0;
  if (p_norm > 0.0) {
    closing_speed = std::max(0.0, -dot(p_rel, v_rel) / p_norm);
  }
  return std::min(distance / (closing_speed + params.epsilon), params.ttc_clamp_sigma);
}

double ttc(const RelativeKinematics& rel, const RiskParams& params) {
  return ttc(rel.p_rel, rel.v_rel, rel.distance, params);
}

double instantaneous_risk(double ttc_s, double distance, const RiskParams& params) {
  return std::exp(-ttc_s / params.tau_risk) * std::exp(-distance / params.sigma_risk);
}

RiskTensor::RiskTensor(std::size_t plans, std::vector<std::size_t> modes_per_agent,
                       std::size_t horizon)
    : plans_(plans), horizon_(horizon), modes_(std::move(modes_per_agent)) {
  offsets_.resize(modes_.size());
  std::size_t offset = 0;
  for (std::size_t k = 0; k < modes_.size(); ++k) {
    offsets_[k] = offset;
    offset += modes_[k] * horizon_;
  }
  plan_stride_ = offset;
  values_.assign(plans_ * plan_stride_, 0.0);
}

namespace {

void check_timing(const Trajectory& traj, std::size_t horizon, double dt, const std::string& what) {
  if (traj.size() != horizon) {
    throw HorizonMismatch(what + " has " + std::to_string(traj.size()) + " samples, expected " +
                          std::to_string(horizon));
  }
  if (traj.dt != dt) {
    throw HorizonMismatch(what + " has dt " + std::to_string(traj.dt) + ", expected " +
                          std::to_string(dt));
  }
}

}  // namespace

RiskTensor build_risk_tensor(std::span<const Trajectory> plans,
                             std::span<const AgentPrediction> agents, const RiskParams& params) {
  if (plans.empty()) {
    return RiskTensor(0, {}, 0);
  }
  const std::size_t horizon = plans.front().size();
  const double dt = plans.front().dt;
  for (std::size_t p = 0; p < plans.size(); ++p) {
    check_timing(plans[p], horizon, dt, "plan " + std::to_string(p));
  }
  std::vector<std::size_t> modes(agents.size());
  for (std::size_t k = 0; k < agents.size(); ++k) {
    if (agents[k].modes.empty()) {
      throw DimensionMismatch("agent " + std::to_string(k) + " has no predicted modes");
    }
    for (std::size_t a = 0; a < agents[k].modes.size(); ++a) {
      check_timing(agents[k].modes[a], horizon, dt,
                   "agent " + std::to_string(k) + " mode " + std::to_string(a));
    }
    modes[k] = agents[k].modes.size();
  }

  RiskTensor tensor(plans.size(), std::move(modes), horizon);
  for (std::size_t p = 0; p < plans.size(); ++p) {
    for (std::size_t k = 0; k < agents.size(); ++k) {
      for (std::size_t a = 0; a < agents[k].modes.size(); ++a) {
        const Trajectory& mode = agents[k].modes[a];
        for (std::size_t t = 0; t < horizon; ++t) {
          const auto& ego = plans[p][t];
          const auto& other = mode[t];
          const RelativeKinematics rel =
              relative_kinematics({ego.pose, ego.velocity}, {other.pose, other.velocity});
          tensor.at(p, k, a, t) = instantaneous_risk(ttc(rel, params), rel.distance, params);
        }
      }
    }
  }
  return tensor;
}

RiskMatrix minimax_reduce(const RiskTensor& tensor, std::span<const double> confidences) {
  if (confidences.size() != tensor.agents()) {
    throw DimensionMismatch("expected " + std::to_string(tensor.agents()) +
                            " confidences, got " + std::to_string(confidences.size()));
  }
  RiskMatrix out{Grid<double>(tensor.plans(), tensor.agents()), true};
  for (std::size_t p = 0; p < tensor.plans(); ++p) {
    for (std::size_t k = 0; k < tensor.agents(); ++k) {
      const auto block = tensor.block(p, k);
      const double worst = block.empty() ? 0.0 : *std::max_element(block.begin(), block.end());
      out.values(p, k) = worst * std::clamp(confidences[k], 0.0, 1.0);
    }
  }
  return out;
}

std::vector<double> confidences_of(std::span<const AgentPrediction> agents) {
  std::vector<double> out;
  out.reserve(agents.size());
  for (const auto& a : agents) {
    out.push_back(a.confidence);
  }
  return out;
}

}  // namespace riskplan
