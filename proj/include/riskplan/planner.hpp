#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "riskplan/adapters.hpp"
#include "riskplan/attention.hpp"
#include "riskplan/risk.hpp"
#include "riskplan/sparse_game.hpp"
#include "riskplan/stabilization.hpp"

namespace riskplan {

struct CostWeights {
  double w_risk{1.0};
  double w_cons{0.5};
  double w_goal{0.1};

  bool operator==(const CostWeights&) const = default;
};

struct PlannerConfig {
  RiskParams risk;
  std::size_t top_m{4};
  double beta{2.0};  // risk prior intensity used by refine_queries
  std::size_t history_t{3};
  CostWeights weights;
  NormalizationScope normalization{NormalizationScope::kGlobal};
  ConsistencyDistance distance{ConsistencyDistance::kHausdorff};

  bool operator==(const PlannerConfig&) const = default;
};

void validate(const PlannerConfig& config, const std::string& field = "planner");

/// Ego-frame endpoints for the turn commands. Going straight needs no fixture.
struct GoalSpec {
  std::optional<Vec2> turn_left;
  std::optional<Vec2> turn_right;

  bool operator==(const GoalSpec&) const = default;
};

/// One planning frame. Candidates and predictions are world-frame trajectories
/// sharing dt and horizon.
struct Scene {
  KinematicState ego;
  std::vector<Trajectory> candidates;
  std::vector<AgentPrediction> agents;
  Command command{Command::kGoStraight};
  double time{0.0};
  GoalSpec goals;
};

/// World-frame goal for the scene command: straight ahead at current speed over
/// the horizon, or the fixture endpoint for turns.
Vec2 goal_point(const Scene& scene);

struct CandidateCost {
  double aggregate_risk{0.0};  // max normalized risk over active agents
  double consistency{0.0};     // mean distance to buffered plans
  double goal_deviation{0.0};  // endpoint distance to the goal, m
  double total{0.0};
};

struct PlanDecision {
  std::size_t selected_index{0};
  std::vector<CandidateCost> costs;
  RiskMatrix risk_matrix;
  SparseGameGraph graph;
  bool history_gate_open{false};
  Vec2 goal;
};

struct PlanStepResult {
  PlanDecision decision;
  HistoryBuffer buffer;
};

/// Risk tensor, minimax matrix, sparse graph, gated history consistency and
/// goal deviation, then the cheapest candidate (lowest index on ties). The
/// buffer is flushed on a command change and receives the selected plan.
PlanStepResult plan_step(const Scene& scene, HistoryBuffer buffer, const PlannerConfig& config);

/// Fixed affine embeddings from kinematic features to attention tokens.
///   agent features: rel x, rel y, rel vx, rel vy, distance, confidence (ego frame)
///   plan features:  end x, end y, end heading, mean speed (ego frame)
///   ego features:   speed, cos heading, sin heading
struct TokenEmbedding {
  static constexpr Eigen::Index kAgentFeatures = 6;
  static constexpr Eigen::Index kPlanFeatures = 4;
  static constexpr Eigen::Index kEgoFeatures = 3;

  Matrix agent_proj;  // 6 x D
  Vector agent_bias;
  Matrix plan_proj;   // 4 x D
  Vector plan_bias;
  Matrix ego_proj;    // 3 x D, optional (used for adapter context)
  Vector ego_bias;

  Eigen::Index dim() const { return agent_proj.cols(); }
};

RowVector agent_features(const KinematicState& ego, const AgentPrediction& agent);
RowVector plan_features(const KinematicState& ego, const Trajectory& plan);
RowVector ego_features(const KinematicState& ego);

/// Plan queries and agent tokens for the scene. Throws DimensionMismatch.
TokenSet build_tokens(const Scene& scene, const TokenEmbedding& embedding);

/// Ego and detection tokens (top `max_det` by confidence) for template refinement.
SceneContext build_scene_context(const KinematicState& ego, std::span<const AgentPrediction> agents,
                                 const TokenEmbedding& embedding, std::size_t max_det);

/// Risk-biased attention of the scene's plan queries over its agent tokens.
/// The refined queries are diagnostic; the analytic cost does not consume them.
AttentionResult refine_queries(const Scene& scene, const SparseGameGraph& graph,
                               const TokenEmbedding& embedding, const AttentionWeights& weights);

}  // namespace riskplan
