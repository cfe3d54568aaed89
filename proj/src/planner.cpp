#include "riskplan/planner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "riskplan/errors.hpp"

namespace riskplan {

void validate(const PlannerConfig& config, const std::string& field) {
  validate(config.risk, field + ".risk_params");
  if (config.top_m < 1) {
    throw ValidationError(field + ".top_m", "must be >= 1");
  }
  if (!std::isfinite(config.beta)) {
    throw ValidationError(field + ".beta", "must be finite");
  }
  auto check = [&](double w, const char* name) {
    if (!std::isfinite(w) || w < 0.0) {
      throw ValidationError(field + ".weights." + name, "must be finite and >= 0");
    }
  };
  check(config.weights.w_risk, "w_risk");
  check(config.weights.w_cons, "w_cons");
  check(config.weights.w_goal, "w_goal");
}

Vec2 goal_point(const Scene& scene) {
  const Pose2& pose = scene.ego.pose;
  switch (scene.command) {
    case Command::kGoStraight: {
      const Trajectory& ref = scene.candidates.front();
      const double reach = scene.ego.velocity.speed() * ref.dt * static_cast<double>(ref.size());
      return {pose.x + reach * std::cos(pose.heading), pose.y + reach * std::sin(pose.heading)};
    }
    case Command::kTurnLeft:
    case Command::kTurnRight: {
      const auto& goal =
          scene.command == Command::kTurnLeft ? scene.goals.turn_left : scene.goals.turn_right;
      if (!goal) {
        throw ValidationError(std::string("goals.") + std::string(to_string(scene.command)),
                              "no goal endpoint for this command");
      }
      const Pose2 world = transform_from_frame(Pose2{goal->x, goal->y, 0.0}, pose);
      return world.position();
    }
  }
  return pose.position();
}

PlanStepResult plan_step(const Scene& scene, HistoryBuffer buffer, const PlannerConfig& config) {
  if (scene.candidates.empty()) {
    throw std::invalid_argument("plan_step needs at least one candidate");
  }
  PlanStepResult result{{}, std::move(buffer)};
  PlanDecision& decision = result.decision;

  const RiskTensor tensor = build_risk_tensor(scene.candidates, scene.agents, config.risk);
  decision.risk_matrix = minimax_reduce(tensor, confidences_of(scene.agents));
  decision.graph = build_sparse_game_graph(decision.risk_matrix, config.top_m, config.normalization);

  if (!result.buffer.empty() && result.buffer.newest().command != scene.command) {
    result.buffer.clear();
  }
  const ConsistencyScores consistency =
      consistency_scores(scene.candidates, result.buffer, scene.command, scene.ego.pose,
                         scene.time, config.distance);
  decision.history_gate_open = consistency.gate_open;
  decision.goal = goal_point(scene);

  const CostWeights& w = config.weights;
  decision.costs.resize(scene.candidates.size());
  for (std::size_t p = 0; p < scene.candidates.size(); ++p) {
    CandidateCost& c = decision.costs[p];
    for (std::size_t k = 0; k < decision.graph.agents(); ++k) {
      if (decision.graph.active(p, k)) {
        c.aggregate_risk = std::max(c.aggregate_risk, decision.graph.normalized(p, k));
      }
    }
    c.consistency = consistency.scores[p];
    c.goal_deviation = norm(scene.candidates[p].samples.back().pose.position() - decision.goal);
    c.total = w.w_risk * c.aggregate_risk + w.w_cons * c.consistency + w.w_goal * c.goal_deviation;
    if (c.total < decision.costs[decision.selected_index].total) {
      decision.selected_index = p;
    }
  }

  result.buffer.push({scene.candidates[decision.selected_index], scene.command, scene.ego.pose,
                      scene.time});
  return result;
}

RowVector agent_features(const KinematicState& ego, const AgentPrediction& agent) {
  RowVector f = RowVector::Zero(TokenEmbedding::kAgentFeatures);
  f(5) = std::clamp(agent.confidence, 0.0, 1.0);
  if (agent.modes.empty() || agent.modes.front().empty()) {
    return f;
  }
  const auto& s = agent.modes.front()[0];
  const Vec2 p = transform_point_to_frame(s.pose.position(), ego.pose);
  const Velocity2 v = transform_to_frame(
      Velocity2{s.velocity.vx - ego.velocity.vx, s.velocity.vy - ego.velocity.vy}, ego.pose);
  f << p.x, p.y, v.vx, v.vy, norm(p), std::clamp(agent.confidence, 0.0, 1.0);
  return f;
}

RowVector plan_features(const KinematicState& ego, const Trajectory& plan) {
  RowVector f = RowVector::Zero(TokenEmbedding::kPlanFeatures);
  if (plan.empty()) {
    return f;
  }
  const Pose2 end = transform_to_frame(plan.samples.back().pose, ego.pose);
  double speed = 0.0;
  for (const auto& s : plan.samples) {
    speed += s.velocity.speed();
  }
  f << end.x, end.y, end.heading, speed / static_cast<double>(plan.size());
  return f;
}

RowVector ego_features(const KinematicState& ego) {
  RowVector f(TokenEmbedding::kEgoFeatures);
  f << ego.velocity.speed(), std::cos(ego.pose.heading), std::sin(ego.pose.heading);
  return f;
}

namespace {

void check_projection(const Matrix& proj, const Vector& bias, Eigen::Index features,
                      Eigen::Index dim, const char* name) {
  if (proj.rows() != features || proj.cols() != dim || bias.size() != dim) {
    throw DimensionMismatch(std::string(name) + " must be " + std::to_string(features) + "x" +
                            std::to_string(dim) + " with a bias of size " + std::to_string(dim));
  }
}

}  // namespace

TokenSet build_tokens(const Scene& scene, const TokenEmbedding& embedding) {
  const Eigen::Index d = embedding.dim();
  check_projection(embedding.agent_proj, embedding.agent_bias, TokenEmbedding::kAgentFeatures, d,
                   "embed.agent_proj");
  check_projection(embedding.plan_proj, embedding.plan_bias, TokenEmbedding::kPlanFeatures, d,
                   "embed.plan_proj");
  TokenSet tokens;
  tokens.plan_queries.resize(static_cast<Eigen::Index>(scene.candidates.size()), d);
  for (std::size_t p = 0; p < scene.candidates.size(); ++p) {
    tokens.plan_queries.row(static_cast<Eigen::Index>(p)) =
        plan_features(scene.ego, scene.candidates[p]) * embedding.plan_proj +
        embedding.plan_bias.transpose();
  }
  tokens.agent_tokens.resize(static_cast<Eigen::Index>(scene.agents.size()), d);
  for (std::size_t k = 0; k < scene.agents.size(); ++k) {
    tokens.agent_tokens.row(static_cast<Eigen::Index>(k)) =
        agent_features(scene.ego, scene.agents[k]) * embedding.agent_proj +
        embedding.agent_bias.transpose();
  }
  return tokens;
}

SceneContext build_scene_context(const KinematicState& ego, std::span<const AgentPrediction> agents,
                                 const TokenEmbedding& embedding, std::size_t max_det) {
  const Eigen::Index d = embedding.dim();
  check_projection(embedding.agent_proj, embedding.agent_bias, TokenEmbedding::kAgentFeatures, d,
                   "embed.agent_proj");
  check_projection(embedding.ego_proj, embedding.ego_bias, TokenEmbedding::kEgoFeatures, d,
                   "embed.ego_proj");
  SceneContext ctx;
  ctx.ego_token = ego_features(ego) * embedding.ego_proj + embedding.ego_bias.transpose();
  Matrix det(static_cast<Eigen::Index>(agents.size()), d);
  std::vector<double> scores;
  scores.reserve(agents.size());
  for (std::size_t k = 0; k < agents.size(); ++k) {
    det.row(static_cast<Eigen::Index>(k)) =
        agent_features(ego, agents[k]) * embedding.agent_proj + embedding.agent_bias.transpose();
    scores.push_back(agents[k].confidence);
  }
  ctx.det_tokens = select_top_tokens(det, scores, max_det);
  ctx.map_tokens.resize(0, d);
  return ctx;
}

AttentionResult refine_queries(const Scene& scene, const SparseGameGraph& graph,
                               const TokenEmbedding& embedding, const AttentionWeights& weights) {
  return risk_biased_attention(build_tokens(scene, embedding), graph, weights);
}

}  // namespace riskplan
