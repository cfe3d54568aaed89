#pragma once

#include <cstddef>
#include <deque>
#include <span>
#include <string_view>
#include <vector>

#include "riskplan/core_types.hpp"

namespace riskplan {

/// Distance used to compare a candidate with a historical plan.
enum class ConsistencyDistance { kHausdorff, kEuclidean };

std::string_view to_string(ConsistencyDistance distance);
ConsistencyDistance consistency_distance_from_string(std::string_view label,
                                                     const std::string& field = "distance");

struct HistoryEntry {
  Trajectory trajectory;  // world frame
  Command command{Command::kGoStraight};
  Pose2 ego_pose;
  double time{0.0};  // when the plan was selected

  bool operator==(const HistoryEntry&) const = default;
};

/// Most recent selected plans, newest last. A capacity of zero keeps nothing.
class HistoryBuffer {
 public:
  explicit HistoryBuffer(std::size_t capacity = 3) : capacity_(capacity) {}

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::deque<HistoryEntry>& entries() const { return entries_; }
  const HistoryEntry& newest() const { return entries_.back(); }
  void clear() { entries_.clear(); }

  void push(HistoryEntry entry);

  bool operator==(const HistoryBuffer&) const = default;

 private:
  std::size_t capacity_;
  std::deque<HistoryEntry> entries_;
};

/// Appends and evicts the oldest entry when over capacity.
HistoryBuffer push_history(HistoryBuffer buffer, Trajectory selected, Command command,
                           const Pose2& ego_pose, double time);

/// Symmetric Hausdorff distance between two point sets. Throws EmptyTrajectory.
double hausdorff(std::span<const Vec2> a, std::span<const Vec2> b);
double hausdorff(const Trajectory& a, const Trajectory& b);

/// Mean distance between time-aligned samples; lengths must match.
double mean_pointwise_distance(std::span<const Vec2> a, std::span<const Vec2> b);

struct ConsistencyScores {
  std::vector<double> scores;  // one per candidate, >= 0
  bool gate_open{false};       // false when empty or the command changed
  std::size_t entries_used{0};
};

/// Mean distance from each candidate to the buffered plans, compared in the
/// current ego frame over the future window the two plans share. Candidates
/// and buffered plans are world-frame trajectories; a buffered plan selected
/// at time tau is advanced by round((now - tau) / dt) samples.
ConsistencyScores consistency_scores(std::span<const Trajectory> candidates,
                                     const HistoryBuffer& buffer, Command current_command,
                                     const Pose2& current_pose, double now,
                                     ConsistencyDistance distance = ConsistencyDistance::kHausdorff);

}  // namespace riskplan
