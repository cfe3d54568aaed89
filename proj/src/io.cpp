#include "riskplan/io.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "riskplan/errors.hpp"

namespace riskplan::io {

namespace fs = std::filesystem;

namespace {

/// Read-only view of a JSON node that knows its own path for error messages.
class Field {
 public:
  Field(const json& node, std::string path) : node_(node), path_(std::move(path)) {}

  const json& raw() const { return node_; }
  const std::string& path() const { return path_; }

  bool has(const std::string& key) const {
    return node_.is_object() && node_.contains(key) && !node_.at(key).is_null();
  }

  Field operator[](const std::string& key) const {
    if (!node_.is_object()) {
      throw ValidationError(path_, "expected an object");
    }
    if (!has(key)) {
      throw ValidationError(child(key), "missing required field");
    }
    return {node_.at(key), child(key)};
  }

  Field at(std::size_t i) const {
    return {node_.at(i), path_ + "[" + std::to_string(i) + "]"};
  }

  std::size_t size() const {
    if (!node_.is_array()) {
      throw ValidationError(path_, "expected an array");
    }
    return node_.size();
  }

  double number() const {
    if (node_.is_number()) {
      return node_.get<double>();
    }
    if (node_.is_string()) {
      const auto s = node_.get<std::string>();
      if (s == "inf") return std::numeric_limits<double>::infinity();
      if (s == "-inf") return -std::numeric_limits<double>::infinity();
      if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    }
    throw ValidationError(path_, "expected a number");
  }

  double number(const std::string& key, double fallback) const {
    return has(key) ? (*this)[key].number() : fallback;
  }

  std::size_t count() const {
    if (node_.is_number_unsigned() || (node_.is_number_integer() && node_.get<std::int64_t>() >= 0)) {
      return node_.get<std::size_t>();
    }
    throw ValidationError(path_, "expected a non-negative integer");
  }

  std::size_t count(const std::string& key, std::size_t fallback) const {
    return has(key) ? (*this)[key].count() : fallback;
  }

  std::string text() const {
    if (!node_.is_string()) {
      throw ValidationError(path_, "expected a string");
    }
    return node_.get<std::string>();
  }

  std::string text(const std::string& key, const std::string& fallback) const {
    return has(key) ? (*this)[key].text() : fallback;
  }

  bool flag() const {
    if (!node_.is_boolean()) {
      throw ValidationError(path_, "expected a boolean");
    }
    return node_.get<bool>();
  }

  std::vector<double> numbers() const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = at(i).number();
    }
    return out;
  }

  Vec2 vec2() const {
    const auto v = numbers();
    if (v.size() != 2) {
      throw ValidationError(path_, "expected [x, y]");
    }
    return {v[0], v[1]};
  }

  Pose2 pose() const {
    const auto v = numbers();
    if (v.size() != 3) {
      throw ValidationError(path_, "expected [x, y, heading]");
    }
    return {v[0], v[1], v[2]};
  }

  Velocity2 velocity() const {
    const auto v = vec2();
    return {v.x, v.y};
  }

 private:
  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& node_;
  std::string path_;
};

json number_json(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

json vec2_json(Vec2 v) { return json::array({v.x, v.y}); }
json pose_json(const Pose2& p) { return json::array({p.x, p.y, p.heading}); }
json velocity_json(const Velocity2& v) { return json::array({v.vx, v.vy}); }

void check_version(const Field& root, const char* expected) {
  if (!root.raw().is_object()) {
    throw ValidationError(root.path(), "expected a JSON object");
  }
  const std::string found = root.text("version", "");
  if (found != expected) {
    throw VersionError("unrecognized version '" + found + "' (expected '" + expected + "')");
  }
}

Trajectory trajectory_from_field(const Field& f) {
  Trajectory traj;
  traj.dt = f["dt"].number();
  if (f.has("samples")) {
    const Field samples = f["samples"];
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto v = samples.at(i).numbers();
      if (v.size() != 5) {
        throw ValidationError(samples.at(i).path(), "expected [x, y, heading, vx, vy]");
      }
      traj.samples.push_back({{v[0], v[1], v[2]}, {v[3], v[4]}});
    }
  } else {
    const Field points = f["points"];
    std::vector<Vec2> pts;
    for (std::size_t i = 0; i < points.size(); ++i) {
      pts.push_back(points.at(i).vec2());
    }
    traj = trajectory_from_positions(traj.dt, pts, f.number("initial_heading", 0.0));
  }
  validate_trajectory(traj, f.path());
  return traj;
}

RiskParams risk_params_from(const Field& f, const RiskParams& defaults) {
  RiskParams p = defaults;
  p.epsilon = f.number("epsilon", p.epsilon);
  p.ttc_clamp_sigma = f.number("ttc_clamp_sigma", p.ttc_clamp_sigma);
  p.tau_risk = f.number("tau_risk", p.tau_risk);
  p.sigma_risk = f.number("sigma_risk", p.sigma_risk);
  return p;
}

json to_json(const RiskParams& p) {
  return {{"epsilon", p.epsilon},
          {"ttc_clamp_sigma", p.ttc_clamp_sigma},
          {"tau_risk", p.tau_risk},
          {"sigma_risk", p.sigma_risk}};
}

PlannerConfig planner_from(const Field& f, const PlannerConfig& defaults) {
  PlannerConfig c = defaults;
  if (f.has("risk_params")) {
    c.risk = risk_params_from(f["risk_params"], c.risk);
  }
  c.top_m = f.count("top_m", c.top_m);
  c.beta = f.number("beta", c.beta);
  c.history_t = f.count("history_t", c.history_t);
  if (f.has("weights")) {
    const Field w = f["weights"];
    c.weights.w_risk = w.number("w_risk", c.weights.w_risk);
    c.weights.w_cons = w.number("w_cons", c.weights.w_cons);
    c.weights.w_goal = w.number("w_goal", c.weights.w_goal);
  }
  if (f.has("normalization_scope")) {
    c.normalization = normalization_scope_from_string(f["normalization_scope"].text(),
                                                      f["normalization_scope"].path());
  }
  if (f.has("distance")) {
    c.distance = consistency_distance_from_string(f["distance"].text(), f["distance"].path());
  }
  validate(c, f.path());
  return c;
}

std::vector<TemplateSpec> generate_templates(const Field& g, double dt, std::size_t horizon,
                                             double speed) {
  const auto accels = g.has("accelerations") ? g["accelerations"].numbers() : std::vector<double>{0.0};
  const auto yaw_rates = g.has("yaw_rates") ? g["yaw_rates"].numbers() : std::vector<double>{0.0};
  std::vector<TemplateSpec> out;
  for (double a : accels) {
    for (double w : yaw_rates) {
      std::ostringstream name;
      name << "a" << a << "_w" << w;
      TemplateSpec spec{name.str(), {}};
      double v = speed;
      double heading = 0.0;
      Vec2 p{0.0, 0.0};
      for (std::size_t i = 0; i < horizon; ++i) {
        v = std::max(0.0, v + a * dt);
        heading += w * dt;
        p = p + (v * dt) * Vec2{std::cos(heading), std::sin(heading)};
        spec.points.push_back(p);
      }
      out.push_back(std::move(spec));
    }
  }
  return out;
}

AgentScript agent_from(const Field& f) {
  AgentScript a;
  a.id = f.text("id", "");
  const std::string kind = f.text("kind", "constant_velocity");
  if (kind == "constant_velocity") {
    a.kind = AgentKind::kConstantVelocity;
  } else if (kind == "waypoint_follow") {
    a.kind = AgentKind::kWaypointFollow;
  } else {
    throw ValidationError(f["kind"].path(), "expected constant_velocity or waypoint_follow");
  }
  a.pose = f["pose"].pose();
  a.velocity = f["velocity"].velocity();
  if (f.has("waypoints")) {
    const Field w = f["waypoints"];
    for (std::size_t i = 0; i < w.size(); ++i) {
      a.waypoints.push_back(w.at(i).vec2());
    }
  }
  a.length = f.number("length", a.length);
  a.width = f.number("width", a.width);
  a.confidence = f.number("confidence", a.confidence);
  a.prediction_modes = f.count("prediction_modes", a.prediction_modes);
  if (f.has("mode_offsets")) {
    const Field m = f["mode_offsets"];
    for (std::size_t i = 0; i < m.size(); ++i) {
      a.mode_offsets.push_back(
          {m.at(i).number("lateral", 0.0), m.at(i).number("speed_scale", 1.0)});
    }
  }
  return a;
}

json to_json(const AgentScript& a) {
  json offsets = json::array();
  for (const auto& o : a.mode_offsets) {
    offsets.push_back({{"lateral", o.lateral}, {"speed_scale", o.speed_scale}});
  }
  json waypoints = json::array();
  for (const auto& w : a.waypoints) {
    waypoints.push_back(vec2_json(w));
  }
  return {{"id", a.id},
          {"kind", a.kind == AgentKind::kConstantVelocity ? "constant_velocity" : "waypoint_follow"},
          {"pose", pose_json(a.pose)},
          {"velocity", velocity_json(a.velocity)},
          {"waypoints", waypoints},
          {"length", a.length},
          {"width", a.width},
          {"confidence", a.confidence},
          {"prediction_modes", a.prediction_modes},
          {"mode_offsets", offsets}};
}

std::string resolve_path(const std::string& p, const fs::path& base_dir) {
  fs::path path(p);
  if (path.is_relative() && !base_dir.empty()) {
    path = base_dir / path;
  }
  return fs::weakly_canonical(fs::absolute(path)).string();
}

json kinematic_json(const KinematicState& s) {
  return {{"pose", pose_json(s.pose)}, {"velocity", velocity_json(s.velocity)}};
}

KinematicState kinematic_from(const Field& f) { return {f["pose"].pose(), f["velocity"].velocity()}; }

json agent_states_json(const std::vector<AgentState>& agents) {
  json out = json::array();
  for (const auto& a : agents) {
    out.push_back({{"pose", pose_json(a.pose)},
                   {"velocity", velocity_json(a.velocity)},
                   {"next_waypoint", a.next_waypoint}});
  }
  return out;
}

std::vector<AgentState> agent_states_from(const Field& f) {
  std::vector<AgentState> out;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Field a = f.at(i);
    out.push_back({a["pose"].pose(), a["velocity"].velocity(), a.count("next_waypoint", 0)});
  }
  return out;
}

Grid<double> grid_from(const Field& f, std::size_t rows) {
  if (f.size() != rows) {
    throw ValidationError(f.path(), "expected " + std::to_string(rows) + " rows");
  }
  const std::size_t cols = rows > 0 ? f.at(0).size() : 0;
  Grid<double> g(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto row = f.at(r).numbers();
    if (row.size() != cols) {
      throw ValidationError(f.at(r).path(), "ragged matrix row");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      g(r, c) = row[c];
    }
  }
  return g;
}

PlanDecision decision_from(const Field& f) {
  PlanDecision d;
  d.selected_index = f["selected_index"].count();
  const Field costs = f["costs"];
  for (std::size_t i = 0; i < costs.size(); ++i) {
    const Field c = costs.at(i);
    d.costs.push_back({c["aggregate_risk"].number(), c["consistency"].number(),
                       c["goal_deviation"].number(), c["total"].number()});
  }
  const std::size_t plans = d.costs.size();
  d.risk_matrix.values = grid_from(f["risk_matrix"]["values"], plans);
  d.risk_matrix.confidence_applied = f["risk_matrix"]["confidence_applied"].flag();
  const Field g = f["graph"];
  d.graph.top_m = g["top_m"].count();
  d.graph.normalized = grid_from(g["normalized"], plans);
  const Field active = g["active"];
  d.graph.active = Grid<bool>(plans, d.graph.normalized.cols(), false);
  for (std::size_t r = 0; r < plans; ++r) {
    for (std::size_t c = 0; c < d.graph.normalized.cols(); ++c) {
      d.graph.active(r, c) = active.at(r).at(c).flag();
    }
  }
  d.history_gate_open = f["history_gate_open"].flag();
  d.goal = f["goal"].vec2();
  return d;
}

EvaluationSettings settings_from(const Field& f) {
  EvaluationSettings s;
  if (f.has("horizons")) {
    s.horizons = f["horizons"].numbers();
  }
  s.pre_params.tau = f.number("tau", s.pre_params.tau);
  s.pre_params.pre_sigma = f.number("pre_sigma", s.pre_params.pre_sigma);
  validate(s.pre_params, f.path());
  if (f.has("risk_params")) {
    s.risk_params = risk_params_from(f["risk_params"], s.risk_params);
  }
  validate(s.risk_params, f.path() + ".risk_params");
  s.ego_length = f.number("ego_length", s.ego_length);
  s.ego_width = f.number("ego_width", s.ego_width);
  validate_box_dims(s.ego_length, s.ego_width, f.path() + ".ego_length");
  return s;
}

json series_json(const HorizonSeries& s) {
  return {{"per_horizon", s.values}, {"avg", s.average}};
}

}  // namespace

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open '" + path.string() + "'");
  }
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot write '" + path.string() + "'");
  }
  out << text;
}

json to_json(const Trajectory& traj) {
  json samples = json::array();
  for (const auto& s : traj.samples) {
    samples.push_back({s.pose.x, s.pose.y, s.pose.heading, s.velocity.vx, s.velocity.vy});
  }
  return {{"dt", traj.dt}, {"samples", samples}};
}

Trajectory trajectory_from_json(const json& j, const std::string& field) {
  return trajectory_from_field(Field(j, field));
}

json to_json(const PlannerConfig& c) {
  return {{"risk_params", to_json(c.risk)},
          {"top_m", c.top_m},
          {"beta", c.beta},
          {"history_t", c.history_t},
          {"weights", {{"w_risk", c.weights.w_risk}, {"w_cons", c.weights.w_cons}, {"w_goal", c.weights.w_goal}}},
          {"normalization_scope", std::string(to_string(c.normalization))},
          {"distance", std::string(to_string(c.distance))}};
}

PlannerConfig planner_config_from_json(const json& j, const std::string& field,
                                       const PlannerConfig& defaults) {
  return planner_from(Field(j, field), defaults);
}

Scenario scenario_from_json(const json& j, const fs::path& base_dir) {
  const Field root(j, "");
  check_version(root, kScenarioVersion);
  Scenario s;
  s.name = root.text("name", "");
  s.dt = root["dt"].number();
  s.horizon = root["horizon"].count();
  s.steps = root.count("steps", s.steps);
  if (root.has("seed")) {
    if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer()) {
      throw ValidationError("seed", "expected a non-negative integer");
    }
    s.seed = j.at("seed").get<std::uint64_t>();
  }

  const Field ego = root["ego"];
  s.ego.pose = ego["pose"].pose();
  s.ego.speed = ego.number("speed", 0.0);
  s.ego.length = ego.number("length", s.ego.length);
  s.ego.width = ego.number("width", s.ego.width);

  if (root.has("templates")) {
    const Field templates = root["templates"];
    for (std::size_t i = 0; i < templates.size(); ++i) {
      const Field t = templates.at(i);
      TemplateSpec spec;
      spec.name = t.text("name", "template_" + std::to_string(i));
      const Field points = t["points"];
      for (std::size_t n = 0; n < points.size(); ++n) {
        spec.points.push_back(points.at(n).vec2());
      }
      s.templates.push_back(std::move(spec));
    }
  }
  if (root.has("template_generator")) {
    if (!(s.dt > 0.0)) {
      throw ValidationError("dt", "must be finite and > 0");
    }
    auto generated = generate_templates(root["template_generator"], s.dt, s.horizon, s.ego.speed);
    s.templates.insert(s.templates.end(), generated.begin(), generated.end());
  }

  if (root.has("agents")) {
    const Field agents = root["agents"];
    for (std::size_t i = 0; i < agents.size(); ++i) {
      s.agents.push_back(agent_from(agents.at(i)));
    }
  }
  if (root.has("commands")) {
    const Field commands = root["commands"];
    for (std::size_t i = 0; i < commands.size(); ++i) {
      const Field c = commands.at(i);
      s.commands.push_back({c.count("from_step", 0),
                            command_from_string(c["command"].text(), c["command"].path())});
    }
  }
  if (root.has("goals")) {
    const Field goals = root["goals"];
    if (goals.has("turn_left")) s.goals.turn_left = goals["turn_left"].vec2();
    if (goals.has("turn_right")) s.goals.turn_right = goals["turn_right"].vec2();
  }
  if (root.has("metrics")) {
    const Field m = root["metrics"];
    s.pre_params.tau = m.number("tau", s.pre_params.tau);
    s.pre_params.pre_sigma = m.number("pre_sigma", s.pre_params.pre_sigma);
    if (m.has("horizons")) {
      s.horizons = m["horizons"].numbers();
    }
  }
  if (root.has("planner")) {
    s.planner = planner_from(root["planner"], s.planner);
  }
  if (root.has("noise")) {
    s.risk_noise_std = root["noise"].number("risk_noise_std", 0.0);
  }
  if (root.has("weights")) {
    const Field w = root["weights"];
    if (w.has("spa")) s.spa_weights = resolve_path(w["spa"].text(), base_dir);
    if (w.has("attention")) s.attention_weights = resolve_path(w["attention"].text(), base_dir);
  }
  s.max_context_tokens = root.count("max_context_tokens", s.max_context_tokens);
  validate(s);
  return s;
}

json to_json(const Scenario& s) {
  json templates = json::array();
  for (const auto& t : s.templates) {
    json points = json::array();
    for (const auto& p : t.points) {
      points.push_back(vec2_json(p));
    }
    templates.push_back({{"name", t.name}, {"points", points}});
  }
  json agents = json::array();
  for (const auto& a : s.agents) {
    agents.push_back(to_json(a));
  }
  json commands = json::array();
  for (const auto& c : s.commands) {
    commands.push_back({{"from_step", c.from_step}, {"command", std::string(to_string(c.command))}});
  }
  json goals = json::object();
  if (s.goals.turn_left) goals["turn_left"] = vec2_json(*s.goals.turn_left);
  if (s.goals.turn_right) goals["turn_right"] = vec2_json(*s.goals.turn_right);
  json weights = json::object();
  if (s.spa_weights) weights["spa"] = *s.spa_weights;
  if (s.attention_weights) weights["attention"] = *s.attention_weights;

  return {{"version", kScenarioVersion},
          {"name", s.name},
          {"dt", s.dt},
          {"horizon", s.horizon},
          {"steps", s.steps},
          {"seed", s.seed},
          {"ego",
           {{"pose", pose_json(s.ego.pose)},
            {"speed", s.ego.speed},
            {"length", s.ego.length},
            {"width", s.ego.width}}},
          {"templates", templates},
          {"agents", agents},
          {"commands", commands},
          {"goals", goals},
          {"metrics", {{"tau", s.pre_params.tau}, {"pre_sigma", s.pre_params.pre_sigma}, {"horizons", s.horizons}}},
          {"planner", to_json(s.planner)},
          {"noise", {{"risk_noise_std", s.risk_noise_std}}},
          {"weights", weights},
          {"max_context_tokens", s.max_context_tokens}};
}

Scenario load_scenario(const fs::path& path) {
  return scenario_from_json(read_json_file(path), path.parent_path());
}

void save_scenario(const Scenario& scenario, const fs::path& path) {
  write_text_file(path, to_json(scenario).dump(2) + "\n");
}

PlannerConfig load_planner_config(const fs::path& path, const PlannerConfig& defaults) {
  fs::path resolved = path;
  if (!fs::exists(resolved) && path.is_relative()) {
    if (const char* dir = std::getenv(kConfigDirEnv)) {
      resolved = fs::path(dir) / path;
    }
  }
  const json j = read_json_file(resolved);
  const json& body = j.contains("planner") ? j.at("planner") : j;
  return planner_config_from_json(body, "planner", defaults);
}

WeightFixture WeightFixture::from_json(const json& j, const std::string& source) {
  const Field root(j, source);
  check_version(root, kWeightsVersion);
  WeightFixture f;
  f.source_ = source;
  if (root.has("arrays")) {
    const Field arrays = root["arrays"];
    for (const auto& [name, _] : j.at("arrays").items()) {
      const Field a = arrays[name];
      Array arr;
      const Field shape = a["shape"];
      std::size_t expected = 1;
      for (std::size_t i = 0; i < shape.size(); ++i) {
        arr.shape.push_back(shape.at(i).count());
        expected *= arr.shape.back();
      }
      if (arr.shape.empty() || arr.shape.size() > 2) {
        throw ValidationError(shape.path(), "expected one or two dimensions");
      }
      arr.data = a["data"].numbers();
      if (arr.data.size() != expected) {
        throw ValidationError(a["data"].path(), "has " + std::to_string(arr.data.size()) +
                                                    " entries, declared shape needs " +
                                                    std::to_string(expected));
      }
      f.arrays_[name] = std::move(arr);
    }
  }
  if (root.has("scalars")) {
    const Field scalars = root["scalars"];
    for (const auto& [name, _] : j.at("scalars").items()) {
      f.scalars_[name] = scalars[name].number();
    }
  }
  if (root.has("labels")) {
    const Field labels = root["labels"];
    for (const auto& [name, _] : j.at("labels").items()) {
      f.labels_[name] = labels[name].text();
    }
  }
  return f;
}

json WeightFixture::to_json() const {
  json arrays = json::object();
  for (const auto& [name, arr] : arrays_) {
    json data = json::array();
    for (double v : arr.data) {
      data.push_back(number_json(v));
    }
    arrays[name] = {{"shape", arr.shape}, {"data", data}};
  }
  json scalars = json::object();
  for (const auto& [name, v] : scalars_) {
    scalars[name] = number_json(v);
  }
  return {{"version", kWeightsVersion}, {"arrays", arrays}, {"scalars", scalars}, {"labels", labels_}};
}

const WeightFixture::Array& WeightFixture::array(const std::string& name) const {
  const auto it = arrays_.find(name);
  if (it == arrays_.end()) {
    throw ValidationError(source_ + ".arrays." + name, "missing weight array");
  }
  return it->second;
}

Matrix WeightFixture::matrix(const std::string& name) const {
  const Array& a = array(name);
  if (a.shape.size() != 2) {
    throw ValidationError(source_ + ".arrays." + name, "expected a two-dimensional array");
  }
  Matrix m(static_cast<Eigen::Index>(a.shape[0]), static_cast<Eigen::Index>(a.shape[1]));
  for (std::size_t r = 0; r < a.shape[0]; ++r) {
    for (std::size_t c = 0; c < a.shape[1]; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = a.data[r * a.shape[1] + c];
    }
  }
  return m;
}

Vector WeightFixture::vector(const std::string& name) const {
  const Array& a = array(name);
  if (a.shape.size() != 1) {
    throw ValidationError(source_ + ".arrays." + name, "expected a one-dimensional array");
  }
  return Eigen::Map<const Vector>(a.data.data(), static_cast<Eigen::Index>(a.data.size()));
}

double WeightFixture::scalar(const std::string& name, double fallback) const {
  const auto it = scalars_.find(name);
  return it == scalars_.end() ? fallback : it->second;
}

std::string WeightFixture::label(const std::string& name, const std::string& fallback) const {
  const auto it = labels_.find(name);
  return it == labels_.end() ? fallback : it->second;
}

void WeightFixture::set(const std::string& name, const Matrix& m) {
  Array a{{static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())}, {}};
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      a.data.push_back(m(r, c));
    }
  }
  arrays_[name] = std::move(a);
}

void WeightFixture::set(const std::string& name, const Vector& v) {
  arrays_[name] = {{static_cast<std::size_t>(v.size())}, {v.data(), v.data() + v.size()}};
}

WeightFixture load_weight_fixture(const fs::path& path) {
  return WeightFixture::from_json(read_json_file(path), path.filename().string());
}

AttentionWeights attention_weights_from(const WeightFixture& f, const std::string& prefix) {
  AttentionWeights w;
  w.w_q = f.matrix(prefix + "w_q");
  w.w_k = f.matrix(prefix + "w_k");
  w.w_v = f.matrix(prefix + "w_v");
  w.ffn.w1 = f.matrix(prefix + "ffn.w1");
  w.ffn.b1 = f.vector(prefix + "ffn.b1");
  w.ffn.w2 = f.matrix(prefix + "ffn.w2");
  w.ffn.b2 = f.vector(prefix + "ffn.b2");
  w.ffn.activation = activation_from_string(f.label(prefix + "ffn.activation", "relu"),
                                            prefix + "ffn.activation");
  w.norm.scale = f.vector(prefix + "norm.scale");
  w.norm.shift = f.vector(prefix + "norm.shift");
  w.norm.eps = f.scalar(prefix + "norm.eps", w.norm.eps);
  w.beta = f.scalar(prefix + "beta", w.beta);
  w.validate();
  return w;
}

TokenEmbedding token_embedding_from(const WeightFixture& f, const std::string& prefix) {
  TokenEmbedding e;
  e.agent_proj = f.matrix(prefix + "agent_proj");
  e.agent_bias = f.vector(prefix + "agent_bias");
  e.plan_proj = f.matrix(prefix + "plan_proj");
  e.plan_bias = f.vector(prefix + "plan_bias");
  if (f.has(prefix + "ego_proj")) {
    e.ego_proj = f.matrix(prefix + "ego_proj");
    e.ego_bias = f.vector(prefix + "ego_bias");
  }
  return e;
}

SpaWeights spa_weights_from(const WeightFixture& f, const std::string& prefix) {
  SpaWeights w;
  w.template_proj = f.matrix(prefix + "template_proj");
  w.template_bias = f.vector(prefix + "template_bias");
  w.ctx_q = f.matrix(prefix + "ctx_q");
  w.ctx_k = f.matrix(prefix + "ctx_k");
  w.ctx_v = f.matrix(prefix + "ctx_v");
  w.cross_q = f.matrix(prefix + "cross_q");
  w.cross_k = f.matrix(prefix + "cross_k");
  w.cross_v = f.matrix(prefix + "cross_v");
  w.decoder = f.matrix(prefix + "decoder");
  w.decoder_bias = f.vector(prefix + "decoder_bias");
  return w;
}

RtaWeights rta_weights_from(const WeightFixture& f, const std::string& prefix) {
  RtaWeights w;
  w.w_q = f.matrix(prefix + "w_q");
  w.w_k = f.matrix(prefix + "w_k");
  w.w_v = f.matrix(prefix + "w_v");
  w.gate_bias = f.vector(prefix + "gate_bias");
  w.w_mod = f.matrix(prefix + "w_mod");
  w.b_mod = f.vector(prefix + "b_mod");
  w.mod_activation = activation_from_string(f.label(prefix + "mod_activation", "relu"),
                                            prefix + "mod_activation");
  return w;
}

void store(WeightFixture& f, const AttentionWeights& w, const std::string& prefix) {
  f.set(prefix + "w_q", w.w_q);
  f.set(prefix + "w_k", w.w_k);
  f.set(prefix + "w_v", w.w_v);
  f.set(prefix + "ffn.w1", w.ffn.w1);
  f.set(prefix + "ffn.b1", w.ffn.b1);
  f.set(prefix + "ffn.w2", w.ffn.w2);
  f.set(prefix + "ffn.b2", w.ffn.b2);
  f.set_label(prefix + "ffn.activation", std::string(to_string(w.ffn.activation)));
  f.set(prefix + "norm.scale", w.norm.scale);
  f.set(prefix + "norm.shift", w.norm.shift);
  f.set_scalar(prefix + "norm.eps", w.norm.eps);
  f.set_scalar(prefix + "beta", w.beta);
}

void store(WeightFixture& f, const TokenEmbedding& e, const std::string& prefix) {
  f.set(prefix + "agent_proj", e.agent_proj);
  f.set(prefix + "agent_bias", e.agent_bias);
  f.set(prefix + "plan_proj", e.plan_proj);
  f.set(prefix + "plan_bias", e.plan_bias);
  if (e.ego_proj.size() > 0) {
    f.set(prefix + "ego_proj", e.ego_proj);
    f.set(prefix + "ego_bias", e.ego_bias);
  }
}

void store(WeightFixture& f, const SpaWeights& w, const std::string& prefix) {
  f.set(prefix + "template_proj", w.template_proj);
  f.set(prefix + "template_bias", w.template_bias);
  f.set(prefix + "ctx_q", w.ctx_q);
  f.set(prefix + "ctx_k", w.ctx_k);
  f.set(prefix + "ctx_v", w.ctx_v);
  f.set(prefix + "cross_q", w.cross_q);
  f.set(prefix + "cross_k", w.cross_k);
  f.set(prefix + "cross_v", w.cross_v);
  f.set(prefix + "decoder", w.decoder);
  f.set(prefix + "decoder_bias", w.decoder_bias);
}

void store(WeightFixture& f, const RtaWeights& w, const std::string& prefix) {
  f.set(prefix + "w_q", w.w_q);
  f.set(prefix + "w_k", w.w_k);
  f.set(prefix + "w_v", w.w_v);
  f.set(prefix + "gate_bias", w.gate_bias);
  f.set(prefix + "w_mod", w.w_mod);
  f.set(prefix + "b_mod", w.b_mod);
  f.set_label(prefix + "mod_activation", std::string(to_string(w.mod_activation)));
}

Simulator make_simulator(const Scenario& scenario) {
  std::optional<SpaBundle> spa;
  if (scenario.spa_weights) {
    const WeightFixture f = load_weight_fixture(*scenario.spa_weights);
    spa = SpaBundle{token_embedding_from(f), spa_weights_from(f)};
  }
  return Simulator(scenario, std::move(spa));
}

json to_json(const RiskMatrix& risk) {
  json values = json::array();
  for (std::size_t p = 0; p < risk.plans(); ++p) {
    json row = json::array();
    for (std::size_t k = 0; k < risk.agents(); ++k) {
      row.push_back(risk.values(p, k));
    }
    values.push_back(row);
  }
  return {{"values", values}, {"confidence_applied", risk.confidence_applied}};
}

json to_json(const SparseGameGraph& graph) {
  json active = json::array();
  json normalized = json::array();
  for (std::size_t p = 0; p < graph.plans(); ++p) {
    json a = json::array();
    json n = json::array();
    for (std::size_t k = 0; k < graph.agents(); ++k) {
      a.push_back(static_cast<bool>(graph.active(p, k)));
      n.push_back(graph.normalized(p, k));
    }
    active.push_back(a);
    normalized.push_back(n);
  }
  return {{"top_m", graph.top_m}, {"active", active}, {"normalized", normalized}};
}

json to_json(const PlanDecision& d, const std::vector<std::string>& names) {
  json costs = json::array();
  for (const auto& c : d.costs) {
    costs.push_back({{"aggregate_risk", c.aggregate_risk},
                     {"consistency", c.consistency},
                     {"goal_deviation", c.goal_deviation},
                     {"total", c.total}});
  }
  json out = {{"selected_index", d.selected_index},
              {"costs", costs},
              {"risk_matrix", to_json(d.risk_matrix)},
              {"graph", to_json(d.graph)},
              {"history_gate_open", d.history_gate_open},
              {"goal", vec2_json(d.goal)}};
  if (d.selected_index < names.size()) {
    out["selected_name"] = names[d.selected_index];
  }
  return out;
}

json to_json(const AttentionResult& a) {
  auto matrix_json = [](const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        row.push_back(number_json(m(r, c)));
      }
      rows.push_back(row);
    }
    return rows;
  };
  return {{"logits", matrix_json(a.logits)},
          {"weights", matrix_json(a.weights)},
          {"refined", matrix_json(a.refined)}};
}

void write_log(const SimulationLog& log, std::ostream& out) {
  std::vector<std::string> names;
  for (const auto& t : log.scenario.templates) {
    names.push_back(t.name);
  }
  const json header = {{"type", "header"},
                       {"version", kLogVersion},
                       {"seed", log.scenario.seed},
                       {"steps", log.records.size()},
                       {"scenario", to_json(log.scenario)}};
  out << header.dump() << '\n';
  for (const auto& r : log.records) {
    const json record = {{"type", "step"},
                         {"step", r.step},
                         {"time", r.time},
                         {"command", std::string(to_string(r.command))},
                         {"ego", kinematic_json(r.ego)},
                         {"agents", agent_states_json(r.agents)},
                         {"decision", to_json(r.decision, names)},
                         {"plan", to_json(r.selected_plan)},
                         {"ego_next", kinematic_json(r.ego_next)},
                         {"agents_next", agent_states_json(r.agents_next)}};
    out << record.dump() << '\n';
  }
}

std::string log_to_string(const SimulationLog& log) {
  std::ostringstream out;
  write_log(log, out);
  return out.str();
}

SimulationLog read_log(std::istream& in, const std::string& source) {
  SimulationLog log;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
    const std::string path = source + ":" + std::to_string(line_no);
    const Field f(j, path);
    const std::string type = f["type"].text();
    if (!have_header) {
      if (type != "header") {
        throw ValidationError(path + ".type", "first line must be the log header");
      }
      check_version(f, kLogVersion);
      log.scenario = scenario_from_json(j.at("scenario"));
      have_header = true;
      continue;
    }
    if (type != "step") {
      throw ValidationError(path + ".type", "expected 'step'");
    }
    StepRecord r;
    r.step = f["step"].count();
    r.time = f["time"].number();
    r.command = command_from_string(f["command"].text(), f["command"].path());
    r.ego = kinematic_from(f["ego"]);
    r.agents = agent_states_from(f["agents"]);
    r.decision = decision_from(f["decision"]);
    r.selected_plan = trajectory_from_field(f["plan"]);
    r.ego_next = kinematic_from(f["ego_next"]);
    r.agents_next = agent_states_from(f["agents_next"]);
    if (r.agents.size() != log.scenario.agents.size() ||
        r.agents_next.size() != log.scenario.agents.size()) {
      throw ValidationError(path + ".agents", "agent count does not match the scenario");
    }
    log.records.push_back(std::move(r));
  }
  if (!have_header) {
    throw ParseError(source + ": empty log");
  }
  return log;
}

SimulationLog load_log(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open '" + path.string() + "'");
  }
  return read_log(in, path.string());
}

FramesFile frames_from_json(const json& j) {
  const Field root(j, "");
  check_version(root, kFramesVersion);
  FramesFile file;
  if (root.has("settings")) {
    file.settings = settings_from(root["settings"]);
  }
  const Field frames = root["frames"];
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const Field f = frames.at(i);
    EvaluationFrame frame;
    frame.plan = trajectory_from_field(f["plan"]);
    frame.ground_truth = trajectory_from_field(f["ground_truth"]);
    if (f.has("agents")) {
      const Field agents = f["agents"];
      for (std::size_t k = 0; k < agents.size(); ++k) {
        const Field a = agents.at(k);
        GroundTruthTrack track;
        track.states = trajectory_from_field(a["states"]);
        track.start_step = a.count("start_step", 0);
        track.length = a.number("length", track.length);
        track.width = a.number("width", track.width);
        validate_box_dims(track.length, track.width, a.path() + ".length");
        frame.agents.push_back(std::move(track));
      }
    }
    if (f.has("previous_plan")) {
      frame.previous_plan = trajectory_from_field(f["previous_plan"]);
      frame.previous_offset = f.count("previous_offset", 1);
    }
    file.frames.push_back(std::move(frame));
  }
  return file;
}

json to_json(const FramesFile& file) {
  json frames = json::array();
  for (const auto& f : file.frames) {
    json agents = json::array();
    for (const auto& a : f.agents) {
      agents.push_back({{"states", to_json(a.states)},
                        {"start_step", a.start_step},
                        {"length", a.length},
                        {"width", a.width}});
    }
    json frame = {{"plan", to_json(f.plan)}, {"ground_truth", to_json(f.ground_truth)}, {"agents", agents}};
    if (f.previous_plan) {
      frame["previous_plan"] = to_json(*f.previous_plan);
      frame["previous_offset"] = f.previous_offset;
    }
    frames.push_back(frame);
  }
  const auto& s = file.settings;
  return {{"version", kFramesVersion},
          {"settings",
           {{"horizons", s.horizons},
            {"tau", s.pre_params.tau},
            {"pre_sigma", s.pre_params.pre_sigma},
            {"risk_params", to_json(s.risk_params)},
            {"ego_length", s.ego_length},
            {"ego_width", s.ego_width}}},
          {"frames", frames}};
}

json to_json(const MetricsReport& r) {
  return {{"schema", kReportSchema},
          {"frames", r.frames},
          {"horizons_s", r.horizons},
          {"l2_m", series_json(r.l2)},
          {"collision_rate", series_json(r.collision)},
          {"pre", series_json(r.pre)},
          {"tpc_m", r.tpc ? series_json(*r.tpc) : json(nullptr)},
          {"params",
           {{"tau", r.pre_params.tau},
            {"pre_sigma", r.pre_params.pre_sigma},
            {"epsilon", r.risk_params.epsilon},
            {"ttc_clamp_sigma", r.risk_params.ttc_clamp_sigma},
            {"ego_length", r.ego_length},
            {"ego_width", r.ego_width}}}};
}

std::string report_table(const MetricsReport& r) {
  std::ostringstream out;
  out << std::fixed;
  out << std::left << std::setw(16) << "metric";
  for (double h : r.horizons) {
    std::ostringstream label;
    label << h << "s";
    out << std::right << std::setw(10) << label.str();
  }
  out << std::right << std::setw(10) << "Avg." << '\n';
  auto row = [&](const char* name, const HorizonSeries& s, double scale, int precision) {
    out << std::left << std::setw(16) << name << std::right << std::setprecision(precision);
    for (double v : s.values) {
      out << std::setw(10) << v * scale;
    }
    out << std::setw(10) << s.average * scale << '\n';
  };
  row("L2 (m)", r.l2, 1.0, 3);
  row("Col. Rate (%)", r.collision, 100.0, 2);
  row("PRE (%)", r.pre, 100.0, 2);
  if (r.tpc) {
    row("TPC (m)", *r.tpc, 1.0, 3);
  }
  out << "frames: " << r.frames << "  tau=" << std::setprecision(3) << r.pre_params.tau
      << " s  sigma=" << r.pre_params.pre_sigma << " m\n";
  return out.str();
}

}  // namespace riskplan::io
