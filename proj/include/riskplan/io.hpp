#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "riskplan/attention.hpp"
#include "riskplan/metrics.hpp"
#include "riskplan/planner.hpp"
#include "riskplan/simulator.hpp"

namespace riskplan::io {

using nlohmann::json;

inline constexpr const char* kScenarioVersion = "riskplan.scenario/1";
inline constexpr const char* kWeightsVersion = "riskplan.weights/1";
inline constexpr const char* kLogVersion = "riskplan.log/1";
inline constexpr const char* kFramesVersion = "riskplan.frames/1";
inline constexpr const char* kReportSchema = "riskplan.metrics_report/1";
inline constexpr const char* kConfigDirEnv = "RISKPLAN_CONFIG_DIR";

/// Reads and parses a JSON document. Throws ParseError naming the file.
json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

// Trajectories: {"dt": s, "samples": [[x, y, heading, vx, vy], ...]} or
// {"dt": s, "points": [[x, y], ...]} with finite-difference velocities.
json to_json(const Trajectory& traj);
Trajectory trajectory_from_json(const json& j, const std::string& field);

json to_json(const PlannerConfig& config);
/// Fields absent from `j` keep their value from `defaults`.
PlannerConfig planner_config_from_json(const json& j, const std::string& field,
                                       const PlannerConfig& defaults = {});

/// Relative weight paths resolve against `base_dir`.
Scenario scenario_from_json(const json& j, const std::filesystem::path& base_dir = {});
json to_json(const Scenario& scenario);

/// Throws ParseError, VersionError or ValidationError (with field path).
Scenario load_scenario(const std::filesystem::path& path);
void save_scenario(const Scenario& scenario, const std::filesystem::path& path);

/// Planner configuration file. Relative paths that do not exist are looked up
/// in the directory named by RISKPLAN_CONFIG_DIR.
PlannerConfig load_planner_config(const std::filesystem::path& path,
                                  const PlannerConfig& defaults = {});

/// Named arrays with declared shapes. Non-finite entries are written as the
/// strings "inf", "-inf" and "nan".
class WeightFixture {
 public:
  struct Array {
    std::vector<std::size_t> shape;
    std::vector<double> data;
  };

  static WeightFixture from_json(const json& j, const std::string& source = "weights");
  json to_json() const;

  bool has(const std::string& name) const { return arrays_.count(name) > 0; }
  Matrix matrix(const std::string& name) const;
  Vector vector(const std::string& name) const;
  double scalar(const std::string& name, double fallback) const;
  std::string label(const std::string& name, const std::string& fallback) const;

  void set(const std::string& name, const Matrix& m);
  void set(const std::string& name, const Vector& v);
  void set_scalar(const std::string& name, double value) { scalars_[name] = value; }
  void set_label(const std::string& name, std::string value) { labels_[name] = std::move(value); }

 private:
  const Array& array(const std::string& name) const;

  std::string source_;
  std::map<std::string, Array> arrays_;
  std::map<std::string, double> scalars_;
  std::map<std::string, std::string> labels_;
};

WeightFixture load_weight_fixture(const std::filesystem::path& path);

// Builders read arrays under a name prefix, e.g. "attn.w_q".
AttentionWeights attention_weights_from(const WeightFixture& f, const std::string& prefix = "attn.");
TokenEmbedding token_embedding_from(const WeightFixture& f, const std::string& prefix = "embed.");
SpaWeights spa_weights_from(const WeightFixture& f, const std::string& prefix = "spa.");
RtaWeights rta_weights_from(const WeightFixture& f, const std::string& prefix = "rta.");
void store(WeightFixture& f, const AttentionWeights& w, const std::string& prefix = "attn.");
void store(WeightFixture& f, const TokenEmbedding& e, const std::string& prefix = "embed.");
void store(WeightFixture& f, const SpaWeights& w, const std::string& prefix = "spa.");
void store(WeightFixture& f, const RtaWeights& w, const std::string& prefix = "rta.");

/// Simulator with the adapter weights named by the scenario, if any.
Simulator make_simulator(const Scenario& scenario);

json to_json(const PlanDecision& decision, const std::vector<std::string>& candidate_names);
json to_json(const RiskMatrix& risk);
json to_json(const SparseGameGraph& graph);
json to_json(const AttentionResult& attention);

/// JSON lines: a header carrying the scenario, then one record per step.
void write_log(const SimulationLog& log, std::ostream& out);
std::string log_to_string(const SimulationLog& log);
SimulationLog read_log(std::istream& in, const std::string& source = "log");
SimulationLog load_log(const std::filesystem::path& path);

struct FramesFile {
  std::vector<EvaluationFrame> frames;
  EvaluationSettings settings;
};
FramesFile frames_from_json(const json& j);
json to_json(const FramesFile& file);

json to_json(const MetricsReport& report);
/// Aligned table with one column per horizon plus the average.
std::string report_table(const MetricsReport& report);

}  // namespace riskplan::io
