#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace riskplan {

struct Vec2 {
  double x{0.0};
  double y{0.0};

  bool operator==(const Vec2&) const = default;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
double norm(Vec2 v);

/// Wraps an angle into (-pi, pi].
double wrap_angle(double angle);

struct Pose2 {
  double x{0.0};
  double y{0.0};
  double heading{0.0};  // radians, (-pi, pi]

  Vec2 position() const { return {x, y}; }
  bool operator==(const Pose2&) const = default;
};

struct Velocity2 {
  double vx{0.0};
  double vy{0.0};

  Vec2 vector() const { return {vx, vy}; }
  double speed() const;
  bool operator==(const Velocity2&) const = default;
};

struct TrajectorySample {
  Pose2 pose;
  Velocity2 velocity;

  bool operator==(const TrajectorySample&) const = default;
};

/// Fixed-rate sequence of poses and velocities.
///
/// Plans and predictions follow one convention throughout the library: sample
/// `i` is the state at `t0 + (i + 1) * dt`, where `t0` is the time the
/// trajectory was produced. The current state is not part of the trajectory.
struct Trajectory {
  double dt{0.1};
  std::vector<TrajectorySample> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  const TrajectorySample& operator[](std::size_t i) const { return samples[i]; }
  std::vector<Vec2> positions() const;

  bool operator==(const Trajectory&) const = default;
};

/// Builds a trajectory from positions only. Velocities are forward finite
/// differences with the trailing value repeated; headings follow the velocity
/// direction and fall back to `initial_heading` while stationary.
Trajectory trajectory_from_positions(double dt, std::span<const Vec2> points,
                                     double initial_heading = 0.0);

/// Checks finiteness, dt > 0 and non-emptiness. Throws ValidationError naming `field`.
void validate_trajectory(const Trajectory& traj, const std::string& field);

/// Pose of the frame that undoes `frame`: transform_to_frame(transform_to_frame(x, f), inverse(f)) == x.
Pose2 inverse(const Pose2& frame);

/// Expresses `pose` in the coordinate frame anchored at `frame`.
Pose2 transform_to_frame(const Pose2& pose, const Pose2& frame);
Velocity2 transform_to_frame(const Velocity2& velocity, const Pose2& frame);
Vec2 transform_point_to_frame(Vec2 point, const Pose2& frame);
Trajectory transform_to_frame(const Trajectory& traj, const Pose2& frame);

/// Maps a pose expressed in `frame` back to the parent frame.
Pose2 transform_from_frame(const Pose2& local, const Pose2& frame);
Trajectory transform_from_frame(const Trajectory& local, const Pose2& frame);

struct OrientedBox {
  Pose2 center;
  double length{4.0};  // along heading
  double width{1.8};

  std::array<Vec2, 4> corners() const;
  bool operator==(const OrientedBox&) const = default;
};

void validate_box_dims(double length, double width, const std::string& field);

/// Separating-axis test. Touching boundaries count as an intersection.
bool box_overlap(const OrientedBox& a, const OrientedBox& b);

enum class Command { kGoStraight, kTurnLeft, kTurnRight };

std::string_view to_string(Command command);
/// Throws ValidationError for labels other than go_straight / turn_left / turn_right.
Command command_from_string(std::string_view label, const std::string& field = "command");

/// Dense row-major 2D array.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  typename std::vector<T>::reference operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }
  typename std::vector<T>::const_reference operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<T> row(std::size_t r) requires(!std::is_same_v<T, bool>) {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const T> row(std::size_t r) const requires(!std::is_same_v<T, bool>) {
    return {data_.data() + r * cols_, cols_};
  }

  const std::vector<T>& data() const { return data_; }
  bool operator==(const Grid&) const = default;

 private:
  std::size_t rows_{0};
  std::size_t cols_{0};
  std::vector<T> data_;
};

}  // namespace riskplan
