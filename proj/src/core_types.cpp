#include "riskplan/core_types.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "riskplan/errors.hpp"

namespace riskplan {

double norm(Vec2 v) { return std::hypot(v.x, v.y); }

double wrap_angle(double angle) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  if (angle > -std::numbers::pi && angle <= std::numbers::pi) {
    return angle;
  }
  double a = std::fmod(angle + std::numbers::pi, kTwoPi);
  if (a <= 0.0) {
    a += kTwoPi;
  }
  return a - std::numbers::pi;
}

double Velocity2::speed() const { return std::hypot(vx, vy); }

std::vector<Vec2> Trajectory::positions() const {
  std::vector<Vec2> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    out.push_back(s.pose.position());
  }
  return out;
}

Trajectory trajectory_from_positions(double dt, std::span<const Vec2> points,
                                     double initial_heading) {
  Trajectory traj;
  traj.dt = dt;
  traj.samples.resize(points.size());
  double heading = wrap_angle(initial_heading);
  for (std::size_t i = 0; i < points.size(); ++i) {
    Velocity2 v;
    if (points.size() >= 2) {
      const std::size_t j = std::min(i, points.size() - 2);
      v = {(points[j + 1].x - points[j].x) / dt, (points[j + 1].y - points[j].y) / dt};
    }
    if (v.speed() > 1e-12) {
      heading = std::atan2(v.vy, v.vx);
    }
    traj.samples[i] = {{points[i].x, points[i].y, heading}, v};
  }
  return traj;
}

void validate_trajectory(const Trajectory& traj, const std::string& field) {
  if (!(traj.dt > 0.0) || !std::isfinite(traj.dt)) {
    throw ValidationError(field + ".dt", "must be finite and > 0");
  }
  if (traj.samples.empty()) {
    throw ValidationError(field, "trajectory has no samples");
  }
  for (std::size_t i = 0; i < traj.samples.size(); ++i) {
    const auto& s = traj.samples[i];
    if (!std::isfinite(s.pose.x) || !std::isfinite(s.pose.y) || !std::isfinite(s.pose.heading) ||
        !std::isfinite(s.velocity.vx) || !std::isfinite(s.velocity.vy)) {
      throw ValidationError(field + ".samples[" + std::to_string(i) + "]", "non-finite value");
    }
  }
}

Pose2 inverse(const Pose2& frame) {
  const double c = std::cos(frame.heading);
  const double s = std::sin(frame.heading);
  return {-(c * frame.x + s * frame.y), -(-s * frame.x + c * frame.y), wrap_angle(-frame.heading)};
}

Vec2 transform_point_to_frame(Vec2 point, const Pose2& frame) {
  const double c = std::cos(frame.heading);
  const double s = std::sin(frame.heading);
  const double dx = point.x - frame.x;
  const double dy = point.y - frame.y;
  return {c * dx + s * dy, -s * dx + c * dy};
}

Pose2 transform_to_frame(const Pose2& pose, const Pose2& frame) {
  const Vec2 p = transform_point_to_frame(pose.position(), frame);
  return {p.x, p.y, wrap_angle(pose.heading - frame.heading)};
}

Velocity2 transform_to_frame(const Velocity2& velocity, const Pose2& frame) {
  const double c = std::cos(frame.heading);
  const double s = std::sin(frame.heading);
  return {c * velocity.vx + s * velocity.vy, -s * velocity.vx + c * velocity.vy};
}

Trajectory transform_to_frame(const Trajectory& traj, const Pose2& frame) {
  Trajectory out{traj.dt, {}};
  out.samples.reserve(traj.size());
  for (const auto& s : traj.samples) {
    out.samples.push_back({transform_to_frame(s.pose, frame), transform_to_frame(s.velocity, frame)});
  }
  return out;
}

Pose2 transform_from_frame(const Pose2& local, const Pose2& frame) {
  const double c = std::cos(frame.heading);
  const double s = std::sin(frame.heading);
  return {frame.x + c * local.x - s * local.y, frame.y + s * local.x + c * local.y,
          wrap_angle(local.heading + frame.heading)};
}

Trajectory transform_from_frame(const Trajectory& local, const Pose2& frame) {
  const double c = std::cos(frame.heading);
  const double s = std::sin(frame.heading);
  Trajectory out{local.dt, {}};
  out.samples.reserve(local.size());
  for (const auto& smp : local.samples) {
    out.samples.push_back({transform_from_frame(smp.pose, frame),
                           {c * smp.velocity.vx - s * smp.velocity.vy,
                            s * smp.velocity.vx + c * smp.velocity.vy}});
  }
  return out;
}

std::array<Vec2, 4> OrientedBox::corners() const {
  const Vec2 u{std::cos(center.heading), std::sin(center.heading)};
  const Vec2 n{-u.y, u.x};
  const Vec2 c = center.position();
  const Vec2 hl = 0.5 * length * u;
  const Vec2 hw = 0.5 * width * n;
  return {c + hl + hw, c - hl + hw, c - hl - hw, c + hl - hw};
}

void validate_box_dims(double length, double width, const std::string& field) {
  if (!std::isfinite(length) || !std::isfinite(width) || !(width > 0.0)) {
    throw ValidationError(field, "box dimensions must be finite and > 0");
  }
  if (length < width) {
    throw ValidationError(field, "box length must be >= width");
  }
}

namespace {

// Projected half-extent of a box onto a unit axis.
double projected_radius(const OrientedBox& box, Vec2 axis) {
  const Vec2 u{std::cos(box.center.heading), std::sin(box.center.heading)};
  const Vec2 n{-u.y, u.x};
  return 0.5 * box.length * std::abs(dot(u, axis)) + 0.5 * box.width * std::abs(dot(n, axis));
}

}  // namespace

bool box_overlap(const OrientedBox& a, const OrientedBox& b) {
  const Vec2 delta = b.center.position() - a.center.position();
  const double ca = std::cos(a.center.heading);
  const double sa = std::sin(a.center.heading);
  const double cb = std::cos(b.center.heading);
  const double sb = std::sin(b.center.heading);
  const std::array<Vec2, 4> axes{Vec2{ca, sa}, Vec2{-sa, ca}, Vec2{cb, sb}, Vec2{-sb, cb}};
  for (const Vec2& axis : axes) {
    if (std::abs(dot(delta, axis)) > projected_radius(a, axis) + projected_radius(b, axis)) {
      return false;
    }
  }
  return true;
}

std::string_view to_string(Command command) {
  switch (command) {
    case Command::kGoStraight:
      return "go_straight";
    case Command::kTurnLeft:
      return "turn_left";
    case Command::kTurnRight:
      return "turn_right";
  }
  return "go_straight";
}

Command command_from_string(std::string_view label, const std::string& field) {
  if (label == "go_straight") return Command::kGoStraight;
  if (label == "turn_left") return Command::kTurnLeft;
  if (label == "turn_right") return Command::kTurnRight;
  throw ValidationError(field, "unknown command '" + std::string(label) +
                                   "' (expected go_straight, turn_left or turn_right)");
}

}  // namespace riskplan
