#include "riskplan/cli.hpp"

#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "riskplan/errors.hpp"
#include "riskplan/io.hpp"

namespace riskplan {

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> beta;
  std::optional<std::size_t> top_m;
  std::optional<std::size_t> history_t;
  std::optional<double> tau;
  std::optional<double> sigma;
  std::optional<double> risk_tau;
  std::optional<double> risk_sigma;
  std::string config;
};

void add_planner_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--seed", o.seed, "noise seed");
  cmd->add_option("--beta", o.beta, "risk prior intensity");
  cmd->add_option("--top-m", o.top_m, "agents kept per plan in the sparse graph")->check(CLI::PositiveNumber);
  cmd->add_option("--history-t", o.history_t, "number of buffered plans");
  cmd->add_option("--config", o.config, "planner config file (relative names also searched in $" +
                                            std::string(io::kConfigDirEnv) + ")");
}

void add_metric_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--tau", o.tau, "PRE time-to-collision decay, s");
  cmd->add_option("--sigma", o.sigma, "PRE distance decay, m");
  cmd->add_option("--risk-tau", o.risk_tau, "planner risk time-to-collision decay, s");
  cmd->add_option("--risk-sigma", o.risk_sigma, "planner risk distance decay, m");
}

void apply_risk(RiskParams& p, const Overrides& o) {
  if (o.risk_tau) p.tau_risk = *o.risk_tau;
  if (o.risk_sigma) p.sigma_risk = *o.risk_sigma;
}

void apply_pre(PreParams& p, const Overrides& o) {
  if (o.tau) p.tau = *o.tau;
  if (o.sigma) p.pre_sigma = *o.sigma;
}

Scenario load_with_overrides(const std::string& path, const Overrides& o) {
  Scenario s = io::load_scenario(path);
  if (!o.config.empty()) {
    s.planner = io::load_planner_config(o.config, s.planner);
  }
  if (o.seed) s.seed = *o.seed;
  if (o.beta) s.planner.beta = *o.beta;
  if (o.top_m) s.planner.top_m = *o.top_m;
  if (o.history_t) s.planner.history_t = *o.history_t;
  apply_risk(s.planner.risk, o);
  apply_pre(s.pre_params, o);
  validate(s);
  return s;
}

std::vector<std::string> template_names(const Scenario& s) {
  std::vector<std::string> names;
  for (const auto& t : s.templates) {
    names.push_back(t.name);
  }
  return names;
}

/// Runs the closed loop up to `step` and returns the state there.
WorldState state_at(const Simulator& sim, std::size_t step) {
  WorldState state = sim.initial_state();
  while (state.step < step) {
    sim.step(state);
  }
  return state;
}

bool looks_like_log(const std::string& text) {
  const auto end = text.find('\n');
  try {
    const io::json first = io::json::parse(text.substr(0, end));
    return first.is_object() && first.value("type", "") == "header";
  } catch (const io::json::parse_error&) {
    return false;
  }
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
  } else {
    io::write_text_file(path, text);
  }
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Risk-prioritized candidate planning, closed-loop simulation and evaluation", "riskplan"};
  app.require_subcommand(1);

  Overrides o;
  std::string input;
  std::string out_path;
  std::size_t step = 0;
  std::optional<std::size_t> steps;
  bool table = false;

  auto* plan = app.add_subcommand("plan", "plan one frame of a scenario and print the decision");
  plan->add_option("scenario", input, "scenario file")->required();
  plan->add_option("--step", step, "closed-loop step to plan at");
  add_planner_flags(plan, o);
  add_metric_flags(plan, o);

  auto* risk = app.add_subcommand("risk", "print the risk matrix and sparse graph of a frame");
  risk->add_option("scenario", input, "scenario file")->required();
  risk->add_option("--step", step, "closed-loop step to inspect");
  add_planner_flags(risk, o);
  add_metric_flags(risk, o);

  auto* simulate = app.add_subcommand("simulate", "run the closed loop and write a JSON-lines log");
  simulate->add_option("scenario", input, "scenario file")->required();
  simulate->add_option("--out", out_path, "log file (default: stdout)");
  simulate->add_option("--steps", steps, "number of steps (default: from scenario)");
  add_planner_flags(simulate, o);
  add_metric_flags(simulate, o);

  auto* evaluate = app.add_subcommand("evaluate", "score a log or frames file and write a metrics report");
  evaluate->add_option("input", input, "log (.jsonl) or frames (.json) file")->required();
  evaluate->add_option("--out", out_path, "report file (default: stdout)");
  evaluate->add_flag("--table", table, "also print a text table");
  add_metric_flags(evaluate, o);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "riskplan: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (app.got_subcommand(plan) || app.got_subcommand(risk)) {
      const Scenario scenario = load_with_overrides(input, o);
      const Simulator sim = io::make_simulator(scenario);
      WorldState state = state_at(sim, step);
      const Scene scene = sim.build_scene(state);
      const StepRecord record = sim.step(state);
      io::json doc;
      if (app.got_subcommand(plan)) {
        doc = io::to_json(record.decision, template_names(scenario));
        doc["step"] = record.step;
        doc["plan"] = io::to_json(record.selected_plan);
      } else {
        doc = {{"step", record.step},
               {"risk_matrix", io::to_json(record.decision.risk_matrix)},
               {"graph", io::to_json(record.decision.graph)}};
        if (scenario.attention_weights) {
          const io::WeightFixture f = io::load_weight_fixture(*scenario.attention_weights);
          AttentionWeights weights = io::attention_weights_from(f);
          if (o.beta) weights.beta = *o.beta;
          doc["attention"] = io::to_json(
              refine_queries(scene, record.decision.graph, io::token_embedding_from(f), weights));
        }
      }
      out << doc.dump(2) << '\n';
    } else if (app.got_subcommand(simulate)) {
      const Scenario scenario = load_with_overrides(input, o);
      const SimulationLog log = io::make_simulator(scenario).run(steps.value_or(scenario.steps));
      emit(io::log_to_string(log), out_path, out);
    } else {
      std::ifstream in(input, std::ios::binary);
      if (!in) {
        throw ParseError("cannot open '" + input + "'");
      }
      std::stringstream buffer;
      buffer << in.rdbuf();
      const std::string text = buffer.str();

      std::vector<EvaluationFrame> frames;
      EvaluationSettings settings;
      if (looks_like_log(text)) {
        std::istringstream log_in(text);
        const SimulationLog log = io::read_log(log_in, input);
        frames = frames_from_log(log);
        settings = evaluation_settings(log.scenario);
      } else {
        io::json j;
        try {
          j = io::json::parse(text);
        } catch (const io::json::parse_error& e) {
          throw ParseError(input + ": " + e.what());
        }
        io::FramesFile file = io::frames_from_json(j);
        frames = std::move(file.frames);
        settings = file.settings;
      }
      apply_pre(settings.pre_params, o);
      apply_risk(settings.risk_params, o);
      validate(settings.pre_params, "--tau/--sigma");
      validate(settings.risk_params, "--risk-tau/--risk-sigma");
      const MetricsReport report = evaluate_frames(frames, settings);
      emit(io::to_json(report).dump(2) + "\n", out_path, out);
      if (table) {
        out << io::report_table(report);
      }
    }
  } catch (const std::exception& e) {
    err << "riskplan: " << e.what() << '\n';
    return kExitDataError;
  }
  return kExitOk;
}

}  // namespace riskplan
