#include "riskplan/simulator.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "riskplan/errors.hpp"

namespace riskplan {

namespace {

std::string idx(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

bool finite_pose(const Pose2& p) {
  return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.heading);
}

// Standard normal deviate from two raw engine outputs (Box-Muller). Engine
// output and seed_seq are fully specified, so the stream is portable.
double standard_normal(std::mt19937_64& rng) {
  constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
  const double u1 = static_cast<double>((rng() >> 11) + 1) * kScale;
  const double u2 = static_cast<double>(rng() >> 11) * kScale;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

void validate(const Scenario& s) {
  if (!std::isfinite(s.dt) || !(s.dt > 0.0)) {
    throw ValidationError("dt", "must be finite and > 0");
  }
  if (s.horizon < 1) {
    throw ValidationError("horizon", "must be >= 1");
  }
  if (s.steps < 1) {
    throw ValidationError("steps", "must be >= 1");
  }
  if (!finite_pose(s.ego.pose)) {
    throw ValidationError("ego.pose", "non-finite value");
  }
  if (!std::isfinite(s.ego.speed) || s.ego.speed < 0.0) {
    throw ValidationError("ego.speed", "must be finite and >= 0");
  }
  validate_box_dims(s.ego.length, s.ego.width, "ego.length");
  if (s.templates.empty()) {
    throw ValidationError("templates", "at least one template is required");
  }
  for (std::size_t i = 0; i < s.templates.size(); ++i) {
    const auto& t = s.templates[i];
    if (t.points.size() != s.horizon) {
      throw ValidationError(idx("templates", i) + ".points",
                            "has " + std::to_string(t.points.size()) + " points, horizon is " +
                                std::to_string(s.horizon));
    }
    for (const auto& p : t.points) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
        throw ValidationError(idx("templates", i) + ".points", "non-finite value");
      }
    }
  }
  for (std::size_t k = 0; k < s.agents.size(); ++k) {
    const auto& a = s.agents[k];
    const std::string field = idx("agents", k);
    if (!finite_pose(a.pose) || !std::isfinite(a.velocity.vx) || !std::isfinite(a.velocity.vy)) {
      throw ValidationError(field + ".pose", "non-finite value");
    }
    validate_box_dims(a.length, a.width, field + ".length");
    if (!(a.confidence >= 0.0 && a.confidence <= 1.0)) {
      throw ValidationError(field + ".confidence", "must lie in [0, 1]");
    }
    if (a.prediction_modes < 1) {
      throw ValidationError(field + ".prediction_modes", "must be >= 1");
    }
    if (a.mode_offsets.size() > a.prediction_modes) {
      throw ValidationError(field + ".mode_offsets", "more offsets than prediction modes");
    }
    for (std::size_t m = 0; m < a.mode_offsets.size(); ++m) {
      const auto& o = a.mode_offsets[m];
      if (!std::isfinite(o.lateral) || !std::isfinite(o.speed_scale)) {
        throw ValidationError(idx(field + ".mode_offsets", m), "non-finite value");
      }
    }
    if (a.kind == AgentKind::kWaypointFollow && a.waypoints.empty()) {
      throw ValidationError(field + ".waypoints", "waypoint_follow needs at least one waypoint");
    }
  }
  for (std::size_t i = 0; i < s.commands.size(); ++i) {
    if (i > 0 && s.commands[i].from_step <= s.commands[i - 1].from_step) {
      throw ValidationError(idx("commands", i) + ".from_step", "must be strictly increasing");
    }
    const Command c = s.commands[i].command;
    if ((c == Command::kTurnLeft && !s.goals.turn_left) ||
        (c == Command::kTurnRight && !s.goals.turn_right)) {
      throw ValidationError(std::string("goals.") + std::string(to_string(c)),
                            "required by " + idx("commands", i));
    }
  }
  validate(s.pre_params, "metrics");
  if (s.horizons.empty()) {
    throw ValidationError("metrics.horizons", "at least one horizon is required");
  }
  for (std::size_t i = 0; i < s.horizons.size(); ++i) {
    try {
      if (horizon_index(s.horizons[i], s.dt) >= s.horizon) {
        throw ValidationError(idx("metrics.horizons", i), "exceeds the planning horizon");
      }
    } catch (const HorizonMismatch& e) {
      throw ValidationError(idx("metrics.horizons", i), e.what());
    }
  }
  validate(s.planner, "planner");
  if (!std::isfinite(s.risk_noise_std) || s.risk_noise_std < 0.0) {
    throw ValidationError("noise.risk_noise_std", "must be finite and >= 0");
  }
}

Command command_at(const Scenario& scenario, std::size_t step) {
  Command current = Command::kGoStraight;
  for (const auto& change : scenario.commands) {
    if (change.from_step <= step) {
      current = change.command;
    }
  }
  return current;
}

Simulator::Simulator(Scenario scenario, std::optional<SpaBundle> spa)
    : scenario_(std::move(scenario)), spa_(std::move(spa)) {
  validate(scenario_);
  templates_.reserve(scenario_.templates.size());
  for (const auto& t : scenario_.templates) {
    templates_.push_back(trajectory_from_positions(scenario_.dt, t.points, 0.0));
  }
}

WorldState Simulator::initial_state() const {
  WorldState state;
  state.ego.pose = scenario_.ego.pose;
  state.ego.pose.heading = wrap_angle(state.ego.pose.heading);
  state.ego.velocity = {scenario_.ego.speed * std::cos(state.ego.pose.heading),
                        scenario_.ego.speed * std::sin(state.ego.pose.heading)};
  for (const auto& a : scenario_.agents) {
    state.agents.push_back({a.pose, a.velocity, 0});
  }
  state.history = HistoryBuffer(scenario_.planner.history_t);
  return state;
}

std::vector<AgentPrediction> Simulator::predict_agents(const WorldState& state) const {
  std::vector<Vec2> noise(scenario_.agents.size());
  if (scenario_.risk_noise_std > 0.0) {
    std::seed_seq seq{static_cast<std::uint32_t>(scenario_.seed),
                      static_cast<std::uint32_t>(scenario_.seed >> 32),
                      static_cast<std::uint32_t>(state.step)};
    std::mt19937_64 rng(seq);
    for (auto& n : noise) {
      n.x = scenario_.risk_noise_std * standard_normal(rng);
      n.y = scenario_.risk_noise_std * standard_normal(rng);
    }
  }

  std::vector<AgentPrediction> out;
  out.reserve(scenario_.agents.size());
  for (std::size_t k = 0; k < scenario_.agents.size(); ++k) {
    const AgentScript& script = scenario_.agents[k];
    const AgentState& agent = state.agents[k];
    const Vec2 left{-std::sin(agent.pose.heading), std::cos(agent.pose.heading)};
    AgentPrediction prediction;
    prediction.confidence = script.confidence;
    for (std::size_t m = 0; m < script.prediction_modes; ++m) {
      const ModeOffset offset = m < script.mode_offsets.size() ? script.mode_offsets[m] : ModeOffset{};
      const Velocity2 v{offset.speed_scale * agent.velocity.vx, offset.speed_scale * agent.velocity.vy};
      Trajectory mode{scenario_.dt, {}};
      mode.samples.reserve(scenario_.horizon);
      for (std::size_t i = 0; i < scenario_.horizon; ++i) {
        const double t = scenario_.dt * static_cast<double>(i + 1);
        const Vec2 p = agent.pose.position() + t * v.vector() + offset.lateral * left + noise[k];
        mode.samples.push_back({{p.x, p.y, agent.pose.heading}, v});
      }
      prediction.modes.push_back(std::move(mode));
    }
    out.push_back(std::move(prediction));
  }
  return out;
}

std::vector<Trajectory> Simulator::ego_frame_candidates(
    const WorldState& state, const std::vector<AgentPrediction>& agents) const {
  if (!spa_) {
    return templates_;
  }
  const SceneContext context =
      build_scene_context(state.ego, agents, spa_->embedding, scenario_.max_context_tokens);
  return spa_refine(templates_, context, spa_->weights);
}

Scene Simulator::build_scene(const WorldState& state) const {
  Scene scene;
  scene.ego = state.ego;
  scene.agents = predict_agents(state);
  for (const auto& local : ego_frame_candidates(state, scene.agents)) {
    scene.candidates.push_back(transform_from_frame(local, state.ego.pose));
  }
  scene.command = command_at(scenario_, state.step);
  scene.time = state.time;
  scene.goals = scenario_.goals;
  return scene;
}

AgentState Simulator::advance_agent(const AgentScript& script, const AgentState& state) const {
  AgentState next = state;
  const double dt = scenario_.dt;
  if (script.kind == AgentKind::kConstantVelocity) {
    next.pose.x = state.pose.x + dt * state.velocity.vx;
    next.pose.y = state.pose.y + dt * state.velocity.vy;
    return next;
  }
  const double speed = script.velocity.speed();
  double travel = speed * dt;
  Vec2 pos = state.pose.position();
  while (next.next_waypoint < script.waypoints.size()) {
    const Vec2 target = script.waypoints[next.next_waypoint];
    const double gap = norm(target - pos);
    if (gap > travel) {
      const Vec2 dir = (1.0 / gap) * (target - pos);
      pos = pos + travel * dir;
      next.pose.heading = std::atan2(dir.y, dir.x);
      next.velocity = {speed * dir.x, speed * dir.y};
      travel = 0.0;
      break;
    }
    if (gap > 0.0) {
      next.pose.heading = std::atan2(target.y - pos.y, target.x - pos.x);
    }
    pos = target;
    travel -= gap;
    ++next.next_waypoint;
  }
  if (next.next_waypoint >= script.waypoints.size()) {
    next.velocity = {0.0, 0.0};
  }
  next.pose.x = pos.x;
  next.pose.y = pos.y;
  return next;
}

StepRecord Simulator::step(WorldState& state) const {
  const Scene scene = build_scene(state);
  PlanStepResult result = plan_step(scene, std::move(state.history), scenario_.planner);

  StepRecord record;
  record.step = state.step;
  record.time = state.time;
  record.command = scene.command;
  record.ego = state.ego;
  record.agents = state.agents;
  record.selected_plan = scene.candidates[result.decision.selected_index];
  record.decision = std::move(result.decision);

  const auto& first = record.selected_plan[0];
  state.ego = {first.pose, first.velocity};
  for (std::size_t k = 0; k < state.agents.size(); ++k) {
    state.agents[k] = advance_agent(scenario_.agents[k], state.agents[k]);
  }
  state.history = std::move(result.buffer);
  state.step += 1;
  state.time = scenario_.dt * static_cast<double>(state.step);

  record.ego_next = state.ego;
  record.agents_next = state.agents;
  return record;
}

SimulationLog Simulator::run(std::size_t steps) const {
  if (steps < 1) {
    throw ValidationError("steps", "must be >= 1");
  }
  SimulationLog log{scenario_, {}};
  log.records.reserve(steps);
  WorldState state = initial_state();
  for (std::size_t n = 0; n < steps; ++n) {
    log.records.push_back(step(state));
  }
  return log;
}

std::size_t count_mode_switches(const SimulationLog& log) {
  std::size_t switches = 0;
  for (std::size_t n = 1; n < log.records.size(); ++n) {
    if (log.records[n].decision.selected_index != log.records[n - 1].decision.selected_index) {
      ++switches;
    }
  }
  return switches;
}

std::vector<EvaluationFrame> frames_from_log(const SimulationLog& log) {
  const std::size_t horizon = log.scenario.horizon;
  const double dt = log.scenario.dt;
  const auto& records = log.records;
  std::vector<EvaluationFrame> frames;
  for (std::size_t n = 0; n + horizon <= records.size(); ++n) {
    EvaluationFrame frame;
    frame.plan = records[n].selected_plan;
    frame.ground_truth.dt = dt;
    for (std::size_t i = 0; i < horizon; ++i) {
      const auto& ego = records[n + i].ego_next;
      frame.ground_truth.samples.push_back({ego.pose, ego.velocity});
    }
    for (std::size_t k = 0; k < log.scenario.agents.size(); ++k) {
      GroundTruthTrack track;
      track.states.dt = dt;
      track.length = log.scenario.agents[k].length;
      track.width = log.scenario.agents[k].width;
      for (std::size_t i = 0; i < horizon; ++i) {
        const auto& a = records[n + i].agents_next[k];
        track.states.samples.push_back({a.pose, a.velocity});
      }
      frame.agents.push_back(std::move(track));
    }
    if (n > 0) {
      frame.previous_plan = records[n - 1].selected_plan;
      frame.previous_offset = 1;
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

EvaluationSettings evaluation_settings(const Scenario& scenario) {
  EvaluationSettings settings;
  settings.horizons = scenario.horizons;
  settings.pre_params = scenario.pre_params;
  settings.risk_params = scenario.planner.risk;
  settings.ego_length = scenario.ego.length;
  settings.ego_width = scenario.ego.width;
  return settings;
}

}  // namespace riskplan
