#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "riskplan/errors.hpp"
#include "riskplan/risk.hpp"

using namespace riskplan;

namespace {

Trajectory point_traj(std::vector<TrajectorySample> s, double dt = 0.5) { return {dt, std::move(s)}; }

}  // namespace

TEST_CASE("relative kinematics") {
  const KinematicState ego{{0, 0, 0}, {2, 0}};
  const KinematicState agent{{10, 0, 0}, {-3, 0}};
  const auto rel = relative_kinematics(ego, agent);
  CHECK(rel.p_rel == Vec2{10, 0});
  CHECK(rel.v_rel == Vec2{-5, 0});
  CHECK(rel.distance == 10.0);

  const auto back = relative_kinematics(agent, ego);
  CHECK(back.p_rel == Vec2{-10, 0});
  CHECK(back.v_rel == Vec2{5, 0});

  const auto zero = relative_kinematics(ego, ego);
  CHECK(zero.p_rel == Vec2{0, 0});
  CHECK(zero.v_rel == Vec2{0, 0});
  CHECK(zero.distance == 0.0);
}

TEST_CASE("ttc examples") {
  const RiskParams p;
  CHECK(ttc(Vec2{10, 0}, Vec2{5, 0}, 10.0, p) == 8.0);
  CHECK(ttc(Vec2{10, 0}, Vec2{-5, 0}, 10.0, p) == doctest::Approx(10.0 / 5.001).epsilon(1e-14));
  CHECK(ttc(Vec2{0, 0}, Vec2{-5, 3}, 0.0, p) == 0.0);
  // perpendicular motion has no closing component
  CHECK(ttc(Vec2{10, 0}, Vec2{0, 4}, 10.0, p) == 8.0);
}

TEST_CASE("ttc matches direct evaluation") {
  std::mt19937_64 rng(5);
  const RiskParams p;
  for (int i = 0; i < 500; ++i) {
    const Vec2 pr{oracle::uniform(rng, -40, 40), oracle::uniform(rng, -40, 40)};
    const Vec2 vr{oracle::uniform(rng, -20, 20), oracle::uniform(rng, -20, 20)};
    const double d = norm(pr);
    CHECK(std::abs(ttc(pr, vr, d, p) - oracle::ttc(pr.x, pr.y, vr.x, vr.y, 1e-3, 8.0)) <= 1e-12);
  }
}

TEST_CASE("instantaneous risk") {
  const RiskParams p;
  CHECK(instantaneous_risk(0.0, 0.0, p) == 1.0);
  CHECK(instantaneous_risk(2.0, 8.0, p) == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
  CHECK(instantaneous_risk(2.0, 8.0, p) == doctest::Approx(0.13534).epsilon(1e-4));
  double prev = 1.0;
  for (double d = 0.0; d < 200.0; d += 5.0) {
    const double r = instantaneous_risk(8.0, d, p);
    CHECK(r <= prev);
    prev = r;
  }
  CHECK(prev < 1e-10);
}

TEST_CASE("risk parameter validation") {
  RiskParams p;
  p.sigma_risk = 0.0;
  try {
    validate(p, "planner.risk_params");
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.field() == "planner.risk_params.sigma_risk");
  }
}

TEST_CASE("tensor shapes") {
  const std::vector<Trajectory> plans{point_traj({{{0, 0, 0}, {0, 0}}})};
  const RiskTensor empty = build_risk_tensor(plans, {}, RiskParams{});
  CHECK(empty.plans() == 1);
  CHECK(empty.agents() == 0);
  CHECK(minimax_reduce(empty, {}).agents() == 0);

  const std::vector<AgentPrediction> agents{{{point_traj({{{0, 0, 0}, {0, 0}}})}, 1.0}};
  const RiskTensor one = build_risk_tensor(plans, agents, RiskParams{});
  CHECK(one.at(0, 0, 0, 0) == 1.0);

  CHECK(build_risk_tensor({}, agents, RiskParams{}).plans() == 0);
}

TEST_CASE("tensor errors") {
  const std::vector<Trajectory> plans{point_traj({{{0, 0, 0}, {0, 0}}, {{1, 0, 0}, {0, 0}}})};
  std::vector<AgentPrediction> short_mode{{{point_traj({{{0, 0, 0}, {0, 0}}})}, 1.0}};
  CHECK_THROWS_AS(build_risk_tensor(plans, short_mode, RiskParams{}), HorizonMismatch);
  std::vector<AgentPrediction> other_dt{
      {{point_traj({{{0, 0, 0}, {0, 0}}, {{1, 0, 0}, {0, 0}}}, 0.1)}, 1.0}};
  CHECK_THROWS_AS(build_risk_tensor(plans, other_dt, RiskParams{}), HorizonMismatch);
  std::vector<AgentPrediction> no_modes{{{}, 1.0}};
  CHECK_THROWS_AS(build_risk_tensor(plans, no_modes, RiskParams{}), DimensionMismatch);

  const RiskTensor t = build_risk_tensor(plans, {}, RiskParams{});
  const std::vector<double> extra{1.0};
  CHECK_THROWS_AS(minimax_reduce(t, extra), DimensionMismatch);
}

TEST_CASE("quadruple-loop oracle, small random instance") {
  std::mt19937_64 rng(9);
  std::vector<Trajectory> plans;
  for (int p = 0; p < 2; ++p) plans.push_back(oracle::random_trajectory(rng, 4, 0.5, 15.0));
  std::vector<AgentPrediction> agents;
  for (int k = 0; k < 3; ++k) {
    AgentPrediction a;
    for (int m = 0; m < 2; ++m) a.modes.push_back(oracle::random_trajectory(rng, 4, 0.5, 15.0));
    a.confidence = oracle::uniform(rng, -0.2, 1.3);
    agents.push_back(a);
  }
  const RiskParams params;
  const RiskMatrix m = minimax_reduce(build_risk_tensor(plans, agents, params), confidences_of(agents));
  const auto ref = oracle::minimax(plans, agents, params);
  for (std::size_t p = 0; p < 2; ++p) {
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(std::abs(m.values(p, k) - ref[p][k]) <= 1e-12);
    }
  }
}

TEST_CASE("ragged mode axis") {
  std::mt19937_64 rng(10);
  const std::vector<Trajectory> plans{oracle::random_trajectory(rng, 3, 0.5, 10.0)};
  std::vector<AgentPrediction> agents(2);
  agents[0].modes = {oracle::random_trajectory(rng, 3, 0.5, 10.0)};
  for (int m = 0; m < 3; ++m) agents[1].modes.push_back(oracle::random_trajectory(rng, 3, 0.5, 10.0));
  const RiskTensor t = build_risk_tensor(plans, agents, RiskParams{});
  CHECK(t.modes(0) == 1);
  CHECK(t.modes(1) == 3);
  CHECK(t.block(0, 1).size() == 9);
  const auto ref = oracle::minimax(plans, agents, RiskParams{});
  const RiskMatrix m = minimax_reduce(t, confidences_of(agents));
  CHECK(std::abs(m.values(0, 1) - ref[0][1]) <= 1e-12);
}

TEST_CASE("minimax reduction") {
  const std::vector<Trajectory> plans{point_traj({{{0, 0, 0}, {0, 0}}})};
  const std::vector<AgentPrediction> agents{{{point_traj({{{3, 4, 0}, {0, 0}}})}, 1.0},
                                            {{point_traj({{{1, 0, 0}, {0, 0}}})}, 1.0}};
  const RiskTensor t = build_risk_tensor(plans, agents, RiskParams{});
  const std::vector<double> ones{1.0, 1.0};
  const RiskMatrix id = minimax_reduce(t, ones);
  CHECK(id.values(0, 0) == t.at(0, 0, 0, 0));
  CHECK(id.values(0, 1) == t.at(0, 1, 0, 0));

  const std::vector<double> conf{0.0, 1.7};
  const RiskMatrix scaled = minimax_reduce(t, conf);
  CHECK(scaled.values(0, 0) == 0.0);
  CHECK(scaled.values(0, 1) == t.at(0, 1, 0, 0));
  CHECK(scaled.confidence_applied);
}

TEST_CASE("raising one tensor entry never lowers the matrix") {
  std::mt19937_64 rng(11);
  const std::vector<Trajectory> plans{oracle::random_trajectory(rng, 4, 0.5, 10.0)};
  std::vector<AgentPrediction> agents(1);
  agents[0].modes = {oracle::random_trajectory(rng, 4, 0.5, 10.0), oracle::random_trajectory(rng, 4, 0.5, 10.0)};
  RiskTensor t = build_risk_tensor(plans, agents, RiskParams{});
  const std::vector<double> c{0.8};
  const double before = minimax_reduce(t, c).values(0, 0);
  for (std::size_t a = 0; a < 2; ++a) {
    for (std::size_t s = 0; s < 4; ++s) {
      RiskTensor u = t;
      u.at(0, 0, a, s) += 0.3;
      CHECK(minimax_reduce(u, c).values(0, 0) >= before);
    }
  }
}
