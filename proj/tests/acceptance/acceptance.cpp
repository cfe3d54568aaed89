// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "riskplan/adapters.hpp"
#include "riskplan/attention.hpp"
#include "riskplan/cli.hpp"
#include "riskplan/io.hpp"
#include "riskplan/metrics.hpp"
#include "riskplan/planner.hpp"
#include "riskplan/risk.hpp"
#include "riskplan/simulator.hpp"
#include "riskplan/sparse_game.hpp"
#include "riskplan/stabilization.hpp"

using namespace riskplan;
namespace fs = std::filesystem;

namespace {

const std::string kFixtures = RISKPLAN_FIXTURES;

struct Outcome {
  bool pass{true};
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

int failures = 0;

void criterion(int id, const std::string& name, double budget_s, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (budget_s > 0.0 && elapsed >= budget_s) {
    o.require(false, "runtime " + std::to_string(elapsed) + " s over budget");
  }
  char line[256];
  std::snprintf(line, sizeof line, "%s  %2d  %-34s %8.3f s", o.pass ? "PASS" : "FAIL", id, name.c_str(), elapsed);
  std::cout << line;
  if (!o.detail.empty()) std::cout << "  " << o.detail;
  std::cout << std::endl;
  failures += !o.pass;
}

std::string fmt(double v) {
  char b[64];
  std::snprintf(b, sizeof b, "%.3g", v);
  return b;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Trajectory straight(double y, double speed, std::size_t n = 6, double dt = 0.5) {
  std::vector<Vec2> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back({speed * dt * double(i + 1), y});
  return trajectory_from_positions(dt, pts);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Outcome ttc_fidelity() {
  Outcome o;
  std::mt19937_64 rng(101);
  const RiskParams params;
  double worst = 0.0;
  for (int n = 0; n < 1000; ++n) {
    const Vec2 p{oracle::uniform(rng, -50, 50), oracle::uniform(rng, -50, 50)};
    const Vec2 v{oracle::uniform(rng, -20, 20), oracle::uniform(rng, -20, 20)};
    const double got = ttc(p, v, norm(p), params);
    worst = std::max(worst, std::abs(got - oracle::ttc(p.x, p.y, v.x, v.y, 1e-3, 8.0)));
    // receding: relative velocity along +p
    const double s = oracle::uniform(rng, 0.0, 20.0);
    const Vec2 away{s * p.x / norm(p), s * p.y / norm(p)};
    o.require(ttc(p, away, norm(p), params) == 8.0, "receding pair did not clamp to 8.0");
  }
  o.require(worst <= 1e-12, "max |diff| " + fmt(worst));
  if (o.pass) o.detail = "max |diff| " + fmt(worst);
  return o;
}

Outcome minimax_equivalence() {
  Outcome o;
  std::mt19937_64 rng(102);
  const RiskParams params;
  double worst = 0.0;
  for (int n = 0; n < 100; ++n) {
    const std::size_t P = 1 + rng() % 4, K = 1 + rng() % 6, T = 1 + rng() % 8;
    std::vector<Trajectory> plans;
    for (std::size_t p = 0; p < P; ++p) plans.push_back(oracle::random_trajectory(rng, T, 0.5, 20.0));
    std::vector<AgentPrediction> agents(K);
    for (auto& a : agents) {
      const std::size_t A = 1 + rng() % 3;
      for (std::size_t m = 0; m < A; ++m) a.modes.push_back(oracle::random_trajectory(rng, T, 0.5, 20.0));
      a.confidence = oracle::uniform(rng, -0.2, 1.2);
    }
    const RiskMatrix r = minimax_reduce(build_risk_tensor(plans, agents, params), confidences_of(agents));
    const auto ref = oracle::minimax(plans, agents, params);
    for (std::size_t p = 0; p < P; ++p)
      for (std::size_t k = 0; k < K; ++k) worst = std::max(worst, std::abs(r.values(p, k) - ref[p][k]));
  }
  o.require(worst <= 1e-12, "max |diff| " + fmt(worst));
  if (o.pass) o.detail = "max |diff| " + fmt(worst);
  return o;
}

Outcome beta_zero_reduction() {
  Outcome o;
  std::mt19937_64 rng(103);
  double worst = 0.0;
  for (int n = 0; n < 100; ++n) {
    const Eigen::Index P = 1 + rng() % 5, K = 1 + rng() % 8, d_in = 2 + rng() % 6, d_k = 2 + rng() % 6;
    AttentionWeights w = oracle::random_attention_weights(rng, d_in, d_k, 2 + rng() % 8);
    w.beta = 0.0;
    SparseGameGraph g{static_cast<std::size_t>(K), Grid<bool>(P, K, true), Grid<double>(P, K, 0.0)};
    for (Eigen::Index p = 0; p < P; ++p)
      for (Eigen::Index k = 0; k < K; ++k) g.normalized(p, k) = oracle::uniform(rng, 0.0, 1.0);
    const TokenSet tokens{oracle::random_matrix(rng, P, d_in), oracle::random_matrix(rng, K, d_in)};
    const auto out = risk_biased_attention(tokens, g, w);
    const auto ref = oracle::cross_attention(tokens.plan_queries, tokens.agent_tokens, w);
    for (Eigen::Index p = 0; p < P; ++p)
      for (Eigen::Index i = 0; i < d_k; ++i) worst = std::max(worst, std::abs(out.refined(p, i) - ref[p][i]));
  }
  o.require(worst <= 1e-12, "max |diff| " + fmt(worst));
  if (o.pass) o.detail = "max |diff| " + fmt(worst);
  return o;
}

Outcome sparsity_contract() {
  Outcome o;
  std::mt19937_64 rng(104);
  const std::size_t K = 20, P = 6;
  for (std::size_t m : {1, 4, 8}) {
    for (int n = 0; n < 50; ++n) {
      RiskMatrix risk{Grid<double>(P, K), true};
      for (std::size_t p = 0; p < P; ++p)
        for (std::size_t k = 0; k < K; ++k) risk.values(p, k) = oracle::uniform(rng, 0.0, 1.0);
      const SparseGameGraph g = build_sparse_game_graph(risk, m);
      const auto w = oracle::random_attention_weights(rng, 8, 8, 16);
      const TokenSet tokens{oracle::random_matrix(rng, P, 8), oracle::random_matrix(rng, K, 8)};
      const auto out = risk_biased_attention(tokens, g, w);
      for (std::size_t p = 0; p < P; ++p) {
        std::size_t nonzero = 0;
        for (std::size_t k = 0; k < K; ++k) {
          const double wt = out.weights(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(k));
          nonzero += wt != 0.0;
          if (!g.active(p, k)) o.require(wt == 0.0, "masked agent received weight");
        }
        o.require(nonzero == std::min(m, K), "row with " + std::to_string(nonzero) + " nonzero weights, M=" +
                                                  std::to_string(m));
      }
    }
  }
  return o;
}

Outcome argmax_flip() {
  Outcome o;
  Scenario s = io::load_scenario(kFixtures + "/scenarios/crossing.json");
  const AgentScript& a = s.agents.at(0);
  GroundTruthTrack truth;
  truth.states.dt = s.dt;
  truth.length = a.length;
  truth.width = a.width;
  for (std::size_t i = 0; i < s.horizon; ++i) {
    const double t = s.dt * double(i + 1);
    truth.states.samples.push_back({{a.pose.x + t * a.velocity.vx, a.pose.y + t * a.velocity.vy, a.pose.heading}, a.velocity});
  }
  const std::vector<double> full{s.dt * double(s.horizon)};
  std::vector<std::size_t> chosen;
  std::vector<double> flag;
  for (double w_risk : {1.0, 0.0}) {
    s.planner.weights.w_risk = w_risk;
    const Simulator sim(s);
    const Scene scene = sim.build_scene(sim.initial_state());
    const auto r = plan_step(scene, HistoryBuffer(s.planner.history_t), s.planner);
    chosen.push_back(r.decision.selected_index);
    flag.push_back(collision_flags(scene.candidates[r.decision.selected_index], std::vector{truth}, s.ego.length,
                                   s.ego.width, full)[0]);
  }
  // exhaustive check over every candidate, every step, with the rasterized boxes
  const Simulator sim(s);
  const Scene scene = sim.build_scene(sim.initial_state());
  for (std::size_t p = 0; p < scene.candidates.size(); ++p) {
    bool hit = false;
    for (std::size_t t = 0; t < s.horizon; ++t)
      hit = hit || oracle::raster_overlap({scene.candidates[p][t].pose, s.ego.length, s.ego.width},
                                          {truth.states[t].pose, truth.length, truth.width}, 1e-2);
    const double expect = hit ? 1.0 : 0.0;
    if (p == chosen[0]) o.require(flag[0] == expect, "risk-on flag disagrees with the raster oracle");
    if (p == chosen[1]) o.require(flag[1] == expect, "risk-off flag disagrees with the raster oracle");
  }
  o.require(chosen[0] != chosen[1], "selection does not change with w_risk");
  o.require(flag[0] == 0.0, "risk-on choice collides");
  o.require(flag[1] == 1.0, "risk-off choice does not collide");
  if (o.pass)
    o.detail = "on: " + s.templates[chosen[0]].name + " (flag 0), off: " + s.templates[chosen[1]].name + " (flag 1)";
  return o;
}

Outcome pre_properties() {
  Outcome o;
  std::mt19937_64 rng(106);
  const std::size_t T = 6;
  double hi = 0.0;
  for (int n = 0; n < 1000; ++n) {
    const Trajectory plan = oracle::random_trajectory(rng, T, 0.5, 30.0);
    std::vector<GroundTruthTrack> agents;
    const std::size_t K = 1 + rng() % 5;
    for (std::size_t k = 0; k < K; ++k) {
      // keep every agent off the ego sample so the scenario is non-degenerate
      Trajectory t = oracle::random_trajectory(rng, T, 0.5, 30.0);
      for (std::size_t i = 0; i < T; ++i) {
        const double dx = t.samples[i].pose.x - plan[i].pose.x, dy = t.samples[i].pose.y - plan[i].pose.y;
        if (std::hypot(dx, dy) < 0.5) t.samples[i].pose.x = plan[i].pose.x + 0.5;
      }
      agents.push_back({t, 0, 4.0, 1.8});
    }
    const auto r = pre(plan, agents, {}, {});
    hi = std::max(hi, r.value);
    o.require(r.value >= 0.0 && r.value < 1.0, "PRE " + fmt(r.value) + " outside [0, 1)");
  }
  const Trajectory plan = straight(0.0, 8.0);
  o.require(pre(plan, {}, {}, {}).value == 0.0, "PRE with no agents is not 0");
  const std::vector<GroundTruthTrack> same{{plan, 0, 4.0, 1.8}};
  const double coincident = pre(plan, same, {}, {}).value;
  o.require(coincident >= 0.999, "coincident PRE " + fmt(coincident));
  double prev = std::numeric_limits<double>::infinity();
  for (int level = 0; level < 20; ++level) {
    Trajectory moved = plan;
    for (auto& smp : moved.samples) smp.pose.y += 1.0 + 1.5 * level;
    const double v = pre(plan, std::vector<GroundTruthTrack>{{moved, 0, 4.0, 1.8}}, {}, {}).value;
    o.require(v <= prev, "PRE increased at displacement level " + std::to_string(level));
    prev = v;
  }
  if (o.pass) o.detail = "max random PRE " + fmt(hi) + ", coincident " + fmt(coincident);
  return o;
}

Outcome hausdorff_axioms() {
  Outcome o;
  std::mt19937_64 rng(107);
  auto pts = [&](std::size_t n) {
    std::vector<Vec2> v;
    for (std::size_t i = 0; i < n; ++i) v.push_back({oracle::uniform(rng, -20, 20), oracle::uniform(rng, -20, 20)});
    return v;
  };
  double worst_sym = 0.0, worst_tri = 0.0;
  for (int n = 0; n < 1000; ++n) {
    const auto a = pts(1 + rng() % 12), b = pts(1 + rng() % 12), c = pts(1 + rng() % 12);
    const double ab = hausdorff(a, b), ba = hausdorff(b, a), bc = hausdorff(b, c), ac = hausdorff(a, c);
    worst_sym = std::max(worst_sym, std::abs(ab - ba));
    o.require(hausdorff(a, a) == 0.0, "d(a, a) != 0");
    worst_tri = std::max(worst_tri, ac - (ab + bc));
  }
  o.require(worst_sym <= 1e-9, "asymmetry " + fmt(worst_sym));
  o.require(worst_tri <= 1e-9, "triangle violation " + fmt(worst_tri));
  double worst = 0.0;
  for (int n = 0; n < 100; ++n) {
    const auto a = pts(1 + rng() % 30), b = pts(1 + rng() % 30);
    std::vector<std::pair<double, double>> pa, pb;
    for (auto p : a) pa.emplace_back(p.x, p.y);
    for (auto p : b) pb.emplace_back(p.x, p.y);
    worst = std::max(worst, std::abs(hausdorff(a, b) - oracle::hausdorff(pa, pb)));
  }
  o.require(worst <= 1e-9, "oracle |diff| " + fmt(worst));
  return o;
}

Outcome consistency_gating() {
  Outcome o;
  std::mt19937_64 rng(108);
  const std::vector<Command> commands{Command::kGoStraight, Command::kTurnLeft, Command::kTurnRight};
  for (int n = 0; n < 200; ++n) {
    HistoryBuffer b(1 + rng() % 4);
    const Command old = commands[rng() % 3];
    Command now = commands[rng() % 3];
    if (now == old) now = commands[(static_cast<std::size_t>(now) + 1) % 3];
    const std::size_t entries = 1 + rng() % 4;
    for (std::size_t e = 0; e < entries; ++e)
      b.push({oracle::random_trajectory(rng, 6, 0.5, 20.0), old, {}, 0.5 * double(e)});
    std::vector<Trajectory> cands;
    for (int c = 0; c < 3; ++c) cands.push_back(oracle::random_trajectory(rng, 6, 0.5, 20.0));
    const auto s = consistency_scores(cands, b, now, {}, 0.5 * double(entries));
    o.require(!s.gate_open, "gate open after a command change");
    for (double v : s.scores) o.require(v == 0.0, "nonzero score after a command change");
  }

  Scenario s = io::load_scenario(kFixtures + "/scenarios/oscillation.json");
  std::vector<double> with, without;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    s.seed = seed;
    s.planner.history_t = 3;
    with.push_back(double(count_mode_switches(Simulator(s).run(s.steps))));
    s.planner.history_t = 0;
    without.push_back(double(count_mode_switches(Simulator(s).run(s.steps))));
  }
  const double m3 = median(with), m0 = median(without);
  o.require(m3 <= m0, "median switches t=3 " + fmt(m3) + " > t=0 " + fmt(m0));
  if (o.pass) o.detail = "median switches t=3: " + fmt(m3) + ", t=0: " + fmt(m0);
  return o;
}

Outcome adapter_identities() {
  Outcome o;
  std::mt19937_64 rng(109);
  for (int n = 0; n < 20; ++n) {
    const Eigen::Index C = 2 + rng() % 6;
    RtaWeights w;
    w.w_q = oracle::random_matrix(rng, C, C);
    w.w_k = oracle::random_matrix(rng, C, C);
    w.w_v = oracle::random_matrix(rng, C, C);
    w.w_mod = oracle::random_matrix(rng, C, C);
    w.b_mod = oracle::random_matrix(rng, C, 1);
    w.gate_bias = Vector::Constant(C, -std::numeric_limits<double>::infinity());
    const EmbeddingSet e{oracle::random_matrix(rng, 1 + rng() % 6, C), oracle::random_matrix(rng, 1 + rng() % 6, C)};
    const Matrix map_before = e.map_embeddings;
    const RtaOutput out = rta_gate(e, w);
    o.require(out.gated_det == e.det_embeddings, "closed gate changed detections");
    o.require(e.map_embeddings.size() == map_before.size() &&
                  std::memcmp(e.map_embeddings.data(), map_before.data(), sizeof(double) * map_before.size()) == 0,
              "map embeddings modified");
    w.gate_bias = oracle::random_matrix(rng, C, 1);
    rta_gate(e, w);
    o.require(std::memcmp(e.map_embeddings.data(), map_before.data(), sizeof(double) * map_before.size()) == 0,
              "map embeddings modified by an open gate");

    const std::size_t T = 1 + rng() % 8;
    const Eigen::Index D = 2 + rng() % 6;
    SpaWeights s;
    s.template_proj = oracle::random_matrix(rng, 2 * T, D);
    s.template_bias = oracle::random_matrix(rng, D, 1);
    s.ctx_q = oracle::random_matrix(rng, D, D);
    s.ctx_k = oracle::random_matrix(rng, D, D);
    s.ctx_v = oracle::random_matrix(rng, D, D);
    s.cross_q = oracle::random_matrix(rng, D, D);
    s.cross_k = oracle::random_matrix(rng, D, D);
    s.cross_v = oracle::random_matrix(rng, D, D);
    s.decoder = Matrix::Zero(D, 2 * T);
    s.decoder_bias = Vector::Zero(2 * T);
    std::vector<Trajectory> templates;
    for (int p = 0; p < 3; ++p) templates.push_back(oracle::random_trajectory(rng, T, 0.5, 20.0));
    const SceneContext ctx{oracle::random_matrix(rng, 1, D), oracle::random_matrix(rng, rng() % 4, D),
                           oracle::random_matrix(rng, rng() % 4, D)};
    const auto refined = spa_refine(templates, ctx, s);
    for (std::size_t p = 0; p < templates.size(); ++p)
      o.require(refined[p] == templates[p], "zero decoder changed a template");
  }
  return o;
}

Outcome collision_geometry() {
  Outcome o;
  std::mt19937_64 rng(110);
  const double h = 1e-3;
  std::size_t overlaps = 0, resolution_limited = 0;
  double thinnest_missed = 0.0;
  for (int n = 0; n < 10000; ++n) {
    const OrientedBox a{{oracle::uniform(rng, -3, 3), oracle::uniform(rng, -3, 3), oracle::uniform(rng, -std::numbers::pi, std::numbers::pi)},
                        oracle::uniform(rng, 1.0, 5.0), oracle::uniform(rng, 0.5, 2.5)};
    const OrientedBox b{{oracle::uniform(rng, -3, 3), oracle::uniform(rng, -3, 3), oracle::uniform(rng, -std::numbers::pi, std::numbers::pi)},
                        oracle::uniform(rng, 1.0, 5.0), oracle::uniform(rng, 0.5, 2.5)};
    const bool sat = box_overlap(a, b);
    const bool raster = oracle::raster_overlap(a, b, h);
    overlaps += sat;
    if (sat == raster) continue;
    // a 1 mm grid cannot see an intersection thinner than its diagonal
    const double thick = oracle::overlap_thickness(a, b);
    if (sat && !raster && thick > 0.0 && thick < h * std::numbers::sqrt2) {
      ++resolution_limited;
      thinnest_missed = std::max(thinnest_missed, thick);
      continue;
    }
    o.require(false, "pair " + std::to_string(n) + ": box_overlap " + (sat ? "true" : "false") + ", raster " +
                         (raster ? "true" : "false") + ", thickness " + fmt(thick));
  }

  const Trajectory plan = straight(0.0, 8.0);
  const double gap = 1.8 + 0.01;  // half widths 0.9 + 0.9 plus 1 cm
  std::vector<Vec2> still(6, Vec2{12.0, gap});
  const std::vector<GroundTruthTrack> side{{trajectory_from_positions(0.5, still), 0, 4.0, 1.8}};
  for (double v : collision_flags(plan, side, 4.0, 1.8, std::vector<double>{1.0, 2.0, 3.0}))
    o.require(v == 0.0, "grazing pass reported a collision");
  if (o.pass)
    o.detail = std::to_string(overlaps) + " overlapping pairs, " + std::to_string(resolution_limited) +
               " below grid resolution (max thickness " + fmt(thinnest_missed) + " m)";
  return o;
}

Outcome determinism_and_replay() {
  Outcome o;
  const fs::path dir = fs::temp_directory_path() / "riskplan_acceptance";
  fs::create_directories(dir);
  const std::string scen = kFixtures + "/scenarios/urban_refined.json";
  std::ostringstream sink, err;
  const fs::path a = dir / "run_a.jsonl", b = dir / "run_b.jsonl";
  o.require(cli_main({"simulate", scen, "--out", a.string()}, sink, err) == 0, "simulate failed: " + err.str());
  o.require(cli_main({"simulate", scen, "--out", b.string()}, sink, err) == 0, "simulate failed: " + err.str());
  o.require(slurp(a) == slurp(b), "logs differ between identical runs");

  // the report computed straight from the simulation, never serialized
  const Scenario s = io::load_scenario(scen);
  const SimulationLog log = io::make_simulator(s).run(s.steps);
  const MetricsReport original = evaluate_frames(frames_from_log(log), evaluation_settings(s));
  const std::string expected = io::to_json(original).dump(2) + "\n";

  const fs::path report = dir / "replayed_report.json";
  o.require(cli_main({"evaluate", a.string(), "--out", report.string()}, sink, err) == 0,
            "evaluate failed: " + err.str());
  o.require(slurp(report) == expected, "replayed report differs from the original");
  o.require(io::log_to_string(log) == slurp(a), "in-process log differs from the CLI log");
  return o;
}

}  // namespace

int main() {
  std::cout << "acceptance suite" << std::endl;
  criterion(1, "TTC formula fidelity", 1.0, ttc_fidelity);
  criterion(2, "minimax oracle equivalence", 5.0, minimax_equivalence);
  criterion(3, "beta=0 reduction", 5.0, beta_zero_reduction);
  criterion(4, "sparsity contract", 0.0, sparsity_contract);
  criterion(5, "risk-prior argmax flip", 1.0, argmax_flip);
  criterion(6, "PRE metric properties", 10.0, pre_properties);
  criterion(7, "Hausdorff metric axioms", 0.0, hausdorff_axioms);
  criterion(8, "consistency gating", 30.0, consistency_gating);
  criterion(9, "adapter residual identities", 0.0, adapter_identities);
  criterion(10, "collision geometry", 60.0, collision_geometry);
  criterion(11, "determinism and replay", 0.0, determinism_and_replay);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
