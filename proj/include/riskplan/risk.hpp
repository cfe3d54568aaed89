#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "riskplan/core_types.hpp"

namespace riskplan {

struct RiskParams {
  double epsilon{1e-3};         // s, guards the TTC denominator
  double ttc_clamp_sigma{8.0};  // s, TTC upper clamp
  double tau_risk{2.0};         // s, TTC decay of the instantaneous risk
  double sigma_risk{8.0};       // m, distance decay of the instantaneous risk

  bool operator==(const RiskParams&) const = default;
};

/// Throws ValidationError if any parameter is not strictly positive.
void validate(const RiskParams& params, const std::string& field = "risk_params");

struct KinematicState {
  Pose2 pose;
  Velocity2 velocity;
};

struct RelativeKinematics {
  Vec2 p_rel;  // agent - ego
  Vec2 v_rel;  // agent - ego
  double distance{0.0};
};

RelativeKinematics relative_kinematics(const KinematicState& ego, const KinematicState& agent);

/// Clamped time to collision. Closing speed is taken as zero for coincident
/// positions, which makes the result zero through the distance numerator.
double ttc(Vec2 p_rel, Vec2 v_rel, double distance, const RiskParams& params);
double ttc(const RelativeKinematics& rel, const RiskParams& params);

/// exp(-ttc / tau_risk) * exp(-distance / sigma_risk).
double instantaneous_risk(double ttc_s, double distance, const RiskParams& params);

/// One traffic participant: predicted motion modes plus a detection confidence.
struct AgentPrediction {
  std::vector<Trajectory> modes;
  double confidence{1.0};

  bool operator==(const AgentPrediction&) const = default;
};

/// Per (plan, agent, mode, step) risk. The mode axis may differ per agent.
class RiskTensor {
 public:
  RiskTensor() = default;
  RiskTensor(std::size_t plans, std::vector<std::size_t> modes_per_agent, std::size_t horizon);

  std::size_t plans() const { return plans_; }
  std::size_t agents() const { return modes_.size(); }
  std::size_t modes(std::size_t agent) const { return modes_[agent]; }
  std::size_t horizon() const { return horizon_; }

  double& at(std::size_t p, std::size_t k, std::size_t a, std::size_t t) {
    return values_[index(p, k, a, t)];
  }
  double at(std::size_t p, std::size_t k, std::size_t a, std::size_t t) const {
    return values_[index(p, k, a, t)];
  }

  /// All entries of the (p, k) block, mode-major.
  std::span<const double> block(std::size_t p, std::size_t k) const {
    return {values_.data() + p * plan_stride_ + offsets_[k], modes_[k] * horizon_};
  }

 private:
  std::size_t index(std::size_t p, std::size_t k, std::size_t a, std::size_t t) const {
    return p * plan_stride_ + offsets_[k] + a * horizon_ + t;
  }

  std::size_t plans_{0};
  std::size_t horizon_{0};
  std::size_t plan_stride_{0};
  std::vector<std::size_t> modes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> values_;
};

/// Worst-case risk per (plan, agent), optionally scaled by detection confidence.
struct RiskMatrix {
  Grid<double> values;
  bool confidence_applied{false};

  std::size_t plans() const { return values.rows(); }
  std::size_t agents() const { return values.cols(); }
};

/// Evaluates the instantaneous risk between every plan step and every agent
/// mode step. Throws HorizonMismatch when lengths or time steps disagree, and
/// DimensionMismatch when an agent has no modes.
RiskTensor build_risk_tensor(std::span<const Trajectory> plans,
                             std::span<const AgentPrediction> agents, const RiskParams& params);

/// Max over modes and steps, times clamp(confidence, 0, 1).
RiskMatrix minimax_reduce(const RiskTensor& tensor, std::span<const double> confidences);

std::vector<double> confidences_of(std::span<const AgentPrediction> agents);

}  // namespace riskplan
