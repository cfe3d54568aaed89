#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "riskplan/adapters.hpp"
#include "riskplan/metrics.hpp"
#include "riskplan/planner.hpp"

namespace riskplan {

enum class AgentKind { kConstantVelocity, kWaypointFollow };

/// Fixed per-mode perturbation of the constant-velocity rollout.
struct ModeOffset {
  double lateral{0.0};  // m, left of the agent heading
  double speed_scale{1.0};

  bool operator==(const ModeOffset&) const = default;
};

struct AgentScript {
  std::string id;
  AgentKind kind{AgentKind::kConstantVelocity};
  Pose2 pose;
  Velocity2 velocity;
  std::vector<Vec2> waypoints;
  double length{4.0};
  double width{1.8};
  double confidence{1.0};
  std::size_t prediction_modes{1};
  std::vector<ModeOffset> mode_offsets;

  bool operator==(const AgentScript&) const = default;
};

/// Ego-frame template, one point per horizon step.
struct TemplateSpec {
  std::string name;
  std::vector<Vec2> points;

  bool operator==(const TemplateSpec&) const = default;
};

struct CommandChange {
  std::size_t from_step{0};
  Command command{Command::kGoStraight};

  bool operator==(const CommandChange&) const = default;
};

struct EgoSpec {
  Pose2 pose;
  double speed{0.0};
  double length{4.0};
  double width{1.8};

  bool operator==(const EgoSpec&) const = default;
};

struct Scenario {
  std::string name;
  double dt{0.5};
  std::size_t horizon{6};
  std::size_t steps{20};
  std::uint64_t seed{0};
  EgoSpec ego;
  std::vector<TemplateSpec> templates;
  std::vector<AgentScript> agents;
  std::vector<CommandChange> commands;
  GoalSpec goals;
  PreParams pre_params;
  std::vector<double> horizons{1.0, 2.0, 3.0};
  PlannerConfig planner;
  double risk_noise_std{0.0};  // m, seeded noise on predicted agent positions
  std::optional<std::string> spa_weights;        // absolute path
  std::optional<std::string> attention_weights;  // absolute path
  std::size_t max_context_tokens{16};

  bool operator==(const Scenario&) const = default;
};

/// Throws ValidationError with the offending field path.
void validate(const Scenario& scenario);

/// Command in force at `step`.
Command command_at(const Scenario& scenario, std::size_t step);

struct AgentState {
  Pose2 pose;
  Velocity2 velocity;
  std::size_t next_waypoint{0};

  bool operator==(const AgentState&) const = default;
};

struct WorldState {
  std::size_t step{0};
  double time{0.0};
  KinematicState ego;
  std::vector<AgentState> agents;
  HistoryBuffer history;
};

struct StepRecord {
  std::size_t step{0};
  double time{0.0};
  Command command{Command::kGoStraight};
  KinematicState ego;
  std::vector<AgentState> agents;
  PlanDecision decision;
  Trajectory selected_plan;  // world frame
  KinematicState ego_next;
  std::vector<AgentState> agents_next;
};

struct SimulationLog {
  Scenario scenario;
  std::vector<StepRecord> records;
};

/// Weights for template refinement and the scene tokens it attends to.
struct SpaBundle {
  TokenEmbedding embedding;
  SpaWeights weights;
};

/// Deterministic closed-loop harness: predict, plan, execute one dt, repeat.
class Simulator {
 public:
  explicit Simulator(Scenario scenario, std::optional<SpaBundle> spa = std::nullopt);

  const Scenario& scenario() const { return scenario_; }

  WorldState initial_state() const;

  /// Constant-velocity rollouts with per-mode offsets plus seeded noise.
  std::vector<AgentPrediction> predict_agents(const WorldState& state) const;

  /// Ego-frame templates, refined when adapter weights are present.
  std::vector<Trajectory> ego_frame_candidates(const WorldState& state,
                                               const std::vector<AgentPrediction>& agents) const;

  Scene build_scene(const WorldState& state) const;

  /// Advances one step in place and returns the record of the decision made.
  StepRecord step(WorldState& state) const;

  SimulationLog run(std::size_t steps) const;

  /// Agent state after one dt of its script.
  AgentState advance_agent(const AgentScript& script, const AgentState& state) const;

 private:
  Scenario scenario_;
  std::optional<SpaBundle> spa_;
  std::vector<Trajectory> templates_;
};

/// Mode switches between consecutive records.
std::size_t count_mode_switches(const SimulationLog& log);

/// Scores every step whose realized future covers the full horizon. The
/// ground truth is the ego and agent motion recorded in later steps.
std::vector<EvaluationFrame> frames_from_log(const SimulationLog& log);

EvaluationSettings evaluation_settings(const Scenario& scenario);

}  // namespace riskplan
