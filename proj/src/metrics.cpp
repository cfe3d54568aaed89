#include "riskplan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "riskplan/errors.hpp"

namespace riskplan {

void validate(const PreParams& params, const std::string& field) {
  if (!std::isfinite(params.tau) || !(params.tau > 0.0)) {
    throw ValidationError(field + ".tau", "must be finite and > 0");
  }
  if (!std::isfinite(params.pre_sigma) || !(params.pre_sigma > 0.0)) {
    throw ValidationError(field + ".pre_sigma", "must be finite and > 0");
  }
}

std::size_t horizon_index(double seconds, double dt) {
  const double steps = seconds / dt;
  const double rounded = std::round(steps);
  if (!(rounded >= 1.0) || std::abs(steps - rounded) > 1e-6) {
    throw HorizonMismatch("horizon " + std::to_string(seconds) + " s is not a positive multiple of dt " +
                          std::to_string(dt));
  }
  return static_cast<std::size_t>(rounded) - 1;
}

std::vector<double> l2_error(const Trajectory& plan, const Trajectory& gt,
                             std::span<const double> horizons) {
  if (plan.dt != gt.dt) {
    throw HorizonMismatch("plan and ground truth use different dt");
  }
  std::vector<double> out;
  out.reserve(horizons.size());
  for (double h : horizons) {
    const std::size_t i = horizon_index(h, plan.dt);
    if (i >= plan.size() || i >= gt.size()) {
      throw HorizonMismatch("horizon " + std::to_string(h) + " s exceeds the trajectory length");
    }
    out.push_back(norm(plan[i].pose.position() - gt[i].pose.position()));
  }
  return out;
}

std::vector<double> collision_flags(const Trajectory& plan, std::span<const GroundTruthTrack> agents,
                                    double ego_length, double ego_width,
                                    std::span<const double> horizons) {
  // Step at which the first overlap happens, plan.size() if none.
  std::size_t first_hit = plan.size();
  for (std::size_t t = 0; t < plan.size() && first_hit == plan.size(); ++t) {
    const OrientedBox ego{plan[t].pose, ego_length, ego_width};
    for (const auto& agent : agents) {
      if (agent.present(t) && box_overlap(ego, {agent.at(t).pose, agent.length, agent.width})) {
        first_hit = t;
        break;
      }
    }
  }
  std::vector<double> out;
  out.reserve(horizons.size());
  for (double h : horizons) {
    const std::size_t i = horizon_index(h, plan.dt);
    if (i >= plan.size()) {
      throw HorizonMismatch("horizon " + std::to_string(h) + " s exceeds the plan length");
    }
    out.push_back(first_hit <= i ? 1.0 : 0.0);
  }
  return out;
}

PreResult pre(const Trajectory& plan, std::span<const GroundTruthTrack> agents,
              const PreParams& params, const RiskParams& risk_params,
              std::span<const double> horizons) {
  PreResult out;
  out.phi.assign(plan.size(), 0.0);
  for (std::size_t t = 0; t < plan.size(); ++t) {
    const KinematicState ego{plan[t].pose, plan[t].velocity};
    for (const auto& agent : agents) {
      if (!agent.present(t)) {
        continue;
      }
      const auto& s = agent.at(t);
      const RelativeKinematics rel = relative_kinematics(ego, {s.pose, s.velocity});
      const double exposure = std::exp(-ttc(rel, risk_params) / params.tau) *
                              std::exp(-rel.distance / params.pre_sigma);
      out.phi[t] = std::max(out.phi[t], exposure);
    }
  }
  double total = 0.0;
  for (std::size_t t = 0; t < plan.size(); ++t) {
    total += out.phi[t];
  }
  out.value = plan.empty() ? 0.0 : total / static_cast<double>(plan.size());
  for (double h : horizons) {
    const std::size_t i = horizon_index(h, plan.dt);
    if (i >= plan.size()) {
      throw HorizonMismatch("horizon " + std::to_string(h) + " s exceeds the plan length");
    }
    double partial = 0.0;
    for (std::size_t t = 0; t <= i; ++t) {
      partial += out.phi[t];
    }
    out.per_horizon.push_back(partial / static_cast<double>(i + 1));
  }
  return out;
}

std::vector<double> tpc(const Trajectory& plan_now, const Trajectory& plan_prev,
                        std::size_t frame_offset, std::span<const double> horizons) {
  if (plan_now.dt != plan_prev.dt) {
    throw HorizonMismatch("consecutive plans use different dt");
  }
  if (frame_offset >= plan_prev.size() || plan_now.empty()) {
    throw NoOverlap("plans share no future window");
  }
  const std::size_t overlap = std::min(plan_now.size(), plan_prev.size() - frame_offset);
  std::vector<double> out;
  out.reserve(horizons.size());
  for (double h : horizons) {
    const std::size_t last = std::min(horizon_index(h, plan_now.dt), overlap - 1);
    double total = 0.0;
    for (std::size_t i = 0; i <= last; ++i) {
      total += norm(plan_now[i].pose.position() - plan_prev[i + frame_offset].pose.position());
    }
    out.push_back(total / static_cast<double>(last + 1));
  }
  return out;
}

namespace {

// Neumaier summation.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_{0.0};
  double comp_{0.0};
};

HorizonSeries finish(const std::vector<CompensatedSum>& sums, std::size_t count) {
  HorizonSeries series;
  CompensatedSum avg;
  for (const auto& s : sums) {
    const double mean = count > 0 ? s.value() / static_cast<double>(count) : 0.0;
    series.values.push_back(mean);
    avg.add(mean);
  }
  series.average = sums.empty() ? 0.0 : avg.value() / static_cast<double>(sums.size());
  return series;
}

}  // namespace

MetricsReport evaluate_frames(std::span<const EvaluationFrame> frames,
                              const EvaluationSettings& settings) {
  const std::size_t n = settings.horizons.size();
  std::vector<CompensatedSum> l2(n), col(n), exposure(n), consistency(n);
  std::size_t tpc_frames = 0;
  for (const auto& frame : frames) {
    const auto e = l2_error(frame.plan, frame.ground_truth, settings.horizons);
    const auto c = collision_flags(frame.plan, frame.agents, settings.ego_length,
                                   settings.ego_width, settings.horizons);
    const auto r = pre(frame.plan, frame.agents, settings.pre_params, settings.risk_params,
                       settings.horizons);
    for (std::size_t h = 0; h < n; ++h) {
      l2[h].add(e[h]);
      col[h].add(c[h]);
      exposure[h].add(r.per_horizon[h]);
    }
    if (frame.previous_plan) {
      const auto d = tpc(frame.plan, *frame.previous_plan, frame.previous_offset, settings.horizons);
      for (std::size_t h = 0; h < n; ++h) {
        consistency[h].add(d[h]);
      }
      ++tpc_frames;
    }
  }
  MetricsReport report;
  report.horizons = settings.horizons;
  report.frames = frames.size();
  report.l2 = finish(l2, frames.size());
  report.collision = finish(col, frames.size());
  report.pre = finish(exposure, frames.size());
  if (tpc_frames > 0) {
    report.tpc = finish(consistency, tpc_frames);
  }
  report.pre_params = settings.pre_params;
  report.risk_params = settings.risk_params;
  report.ego_length = settings.ego_length;
  report.ego_width = settings.ego_width;
  return report;
}

}  // namespace riskplan
