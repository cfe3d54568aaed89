#include "riskplan/stabilization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "riskplan/errors.hpp"

namespace riskplan {

std::string_view to_string(ConsistencyDistance distance) {
  return distance == ConsistencyDistance::kEuclidean ? "euclidean" : "hausdorff";
}

ConsistencyDistance consistency_distance_from_string(std::string_view label,
                                                     const std::string& field) {
  if (label == "hausdorff") return ConsistencyDistance::kHausdorff;
  if (label == "euclidean") return ConsistencyDistance::kEuclidean;
  throw ValidationError(field, "expected 'hausdorff' or 'euclidean', got '" + std::string(label) +
                                   "'");
}

void HistoryBuffer::push(HistoryEntry entry) {
  if (capacity_ == 0) {
    return;
  }
  entries_.push_back(std::move(entry));
  while (entries_.size() > capacity_) {
    entries_.pop_front();
  }
}

HistoryBuffer push_history(HistoryBuffer buffer, Trajectory selected, Command command,
                           const Pose2& ego_pose, double time) {
  buffer.push({std::move(selected), command, ego_pose, time});
  return buffer;
}

namespace {

double directed_hausdorff(std::span<const Vec2> from, std::span<const Vec2> to) {
  double worst = 0.0;
  for (const Vec2& p : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec2& q : to) {
      best = std::min(best, norm(p - q));
    }
    worst = std::max(worst, best);
  }
  return worst;
}

}  // namespace

double hausdorff(std::span<const Vec2> a, std::span<const Vec2> b) {
  if (a.empty() || b.empty()) {
    throw EmptyTrajectory("hausdorff distance needs two non-empty point sets");
  }
  return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

double hausdorff(const Trajectory& a, const Trajectory& b) {
  const auto pa = a.positions();
  const auto pb = b.positions();
  return hausdorff(pa, pb);
}

double mean_pointwise_distance(std::span<const Vec2> a, std::span<const Vec2> b) {
  if (a.empty() || b.empty()) {
    throw EmptyTrajectory("pointwise distance needs two non-empty point sets");
  }
  if (a.size() != b.size()) {
    throw HorizonMismatch("pointwise distance needs equally long point sets");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    total += norm(a[i] - b[i]);
  }
  return total / static_cast<double>(a.size());
}

ConsistencyScores consistency_scores(std::span<const Trajectory> candidates,
                                     const HistoryBuffer& buffer, Command current_command,
                                     const Pose2& current_pose, double now,
                                     ConsistencyDistance distance) {
  ConsistencyScores out;
  out.scores.assign(candidates.size(), 0.0);
  if (buffer.empty() || buffer.newest().command != current_command || candidates.empty()) {
    return out;
  }
  out.gate_open = true;

  std::vector<std::vector<Vec2>> local_candidates;
  local_candidates.reserve(candidates.size());
  for (const auto& c : candidates) {
    local_candidates.push_back(transform_to_frame(c, current_pose).positions());
  }

  std::vector<double> totals(candidates.size(), 0.0);
  for (const HistoryEntry& entry : buffer.entries()) {
    const Trajectory& hist = entry.trajectory;
    if (hist.empty()) {
      continue;
    }
    const double elapsed = std::max(0.0, now - entry.time);
    const auto shift = static_cast<std::size_t>(std::llround(elapsed / hist.dt));
    if (shift >= hist.size()) {
      continue;
    }
    const auto hist_local = transform_to_frame(hist, current_pose).positions();
    const std::span<const Vec2> remaining(hist_local.data() + shift, hist_local.size() - shift);
    for (std::size_t p = 0; p < candidates.size(); ++p) {
      const std::size_t n = std::min(remaining.size(), local_candidates[p].size());
      if (n == 0) {
        continue;
      }
      const std::span<const Vec2> cand(local_candidates[p].data(), n);
      const std::span<const Vec2> past = remaining.first(n);
      totals[p] += distance == ConsistencyDistance::kHausdorff ? hausdorff(cand, past)
                                                               : mean_pointwise_distance(cand, past);
    }
    ++out.entries_used;
  }
  if (out.entries_used > 0) {
    for (std::size_t p = 0; p < candidates.size(); ++p) {
      out.scores[p] = totals[p] / static_cast<double>(out.entries_used);
    }
  }
  return out;
}

}  // namespace riskplan
