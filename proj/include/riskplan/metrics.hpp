#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "riskplan/core_types.hpp"
#include "riskplan/risk.hpp"

namespace riskplan {

struct PreParams {
  double tau{2.0};        // s
  double pre_sigma{8.0};  // m

  bool operator==(const PreParams&) const = default;
};

void validate(const PreParams& params, const std::string& field = "metrics");

/// Ground-truth box track of one obstacle. Sample `i` of `states` lines up with
/// plan sample `start_step + i`; the obstacle is absent outside that window.
struct GroundTruthTrack {
  Trajectory states;
  std::size_t start_step{0};
  double length{4.0};
  double width{1.8};

  bool present(std::size_t step) const {
    return step >= start_step && step - start_step < states.size();
  }
  const TrajectorySample& at(std::size_t step) const { return states[step - start_step]; }

  bool operator==(const GroundTruthTrack&) const = default;
};

/// Sample index of horizon `seconds`: round(seconds / dt) - 1. Throws
/// HorizonMismatch if the horizon is not a positive multiple of dt.
std::size_t horizon_index(double seconds, double dt);

/// Position error at each horizon.
std::vector<double> l2_error(const Trajectory& plan, const Trajectory& gt,
                             std::span<const double> horizons);

/// 1 if the ego box along the plan overlaps any obstacle at a step up to the
/// horizon, else 0.
std::vector<double> collision_flags(const Trajectory& plan, std::span<const GroundTruthTrack> agents,
                                    double ego_length, double ego_width,
                                    std::span<const double> horizons);

struct PreResult {
  std::vector<double> phi;          // per step, worst exposure over present obstacles
  double value{0.0};                // mean of phi over the whole plan
  std::vector<double> per_horizon;  // mean of phi up to each horizon
};

/// Planning risk exposure of a plan against ground-truth obstacles.
PreResult pre(const Trajectory& plan, std::span<const GroundTruthTrack> agents,
              const PreParams& params, const RiskParams& risk_params,
              std::span<const double> horizons = {});

/// Mean deviation between the current plan and the plan made `frame_offset`
/// steps earlier over their shared window, up to each horizon. Throws NoOverlap.
std::vector<double> tpc(const Trajectory& plan_now, const Trajectory& plan_prev,
                        std::size_t frame_offset, std::span<const double> horizons);

/// One planning frame with everything needed to score it.
struct EvaluationFrame {
  Trajectory plan;
  Trajectory ground_truth;
  std::vector<GroundTruthTrack> agents;
  std::optional<Trajectory> previous_plan;
  std::size_t previous_offset{1};

  bool operator==(const EvaluationFrame&) const = default;
};

struct HorizonSeries {
  std::vector<double> values;  // aligned with MetricsReport::horizons
  double average{0.0};

  bool operator==(const HorizonSeries&) const = default;
};

struct MetricsReport {
  std::vector<double> horizons{1.0, 2.0, 3.0};
  std::size_t frames{0};
  HorizonSeries l2;
  HorizonSeries collision;
  HorizonSeries pre;
  std::optional<HorizonSeries> tpc;
  PreParams pre_params;
  RiskParams risk_params;
  double ego_length{4.0};
  double ego_width{1.8};

  bool operator==(const MetricsReport&) const = default;
};

struct EvaluationSettings {
  std::vector<double> horizons{1.0, 2.0, 3.0};
  PreParams pre_params;
  RiskParams risk_params;
  double ego_length{4.0};
  double ego_width{1.8};
};

/// Unweighted dataset means of every metric (compensated summation).
MetricsReport evaluate_frames(std::span<const EvaluationFrame> frames,
                              const EvaluationSettings& settings);

}  // namespace riskplan
