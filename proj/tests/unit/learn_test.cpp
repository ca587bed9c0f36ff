// Copyright 2026 The DIFT Game Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dift/learn.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include "dift/cli.hpp"
#include "dift/error.hpp"
#include "dift/kernels.hpp"
#include "oracles.hpp"

namespace dift::learn {
namespace {

using game::default_params;
using ifg::augment_with_source;
using ifg::make_data;

InformationFlowGraph graph_of(ifg::GraphData data) {
  return augment_with_source(InformationFlowGraph(std::move(data)));
}

// One node that is both the entry and the only destination. No rule is
// checked there, and arming the trap costs far more than detection pays.
struct Dominance {
  InformationFlowGraph graph;
  GameParams params;
};

Dominance dominance() {
  auto data = make_data(1, {}, {{1}}, {1});
  data.nodes[0].rules = {};
  GameParams params = default_params(1, 1);
  params.c2 = -1e5;
  return {graph_of(data), params};
}

InformationFlowGraph small_generated(std::uint64_t seed) {
  cli::GenGraphOptions o;
  o.nodes = 5;
  o.stages = 2;
  o.dest_per_stage = {1, 1};
  o.density = 0.3;
  o.seed = seed;
  return augment_with_source(cli::gen_graph(o));
}

Profile random_profile(std::mt19937_64& rng, const PlayerRoster& roster) {
  Profile p(roster.size());
  for (int n = 0; n < roster.size(); ++n) {
    p[n] = std::uniform_int_distribution<int>(0, roster[n].num_actions() - 1)(
        rng);
  }
  return p;
}

TEST(Roster, CountsForThreeNodesTwoStages) {
  auto data = make_data(3, {{1, 2}, {2, 3}, {1, 3}}, {{2}, {3}}, {1});
  data.nodes[0].rules = {1};
  data.nodes[1].rules = {};
  data.nodes[2].rules = {1, 2};
  const auto g = graph_of(data);
  const PlayerRoster r = build_roster(g);
  EXPECT_EQ(g.relevance_pairs(), 3);
  EXPECT_EQ(r.size(), 3 * 4 + 3 + 1);
  EXPECT_EQ(r.size(), 16);
  EXPECT_EQ(r.num_adversary(), 7);
  EXPECT_EQ(r.relevance_pairs(), 3);
}

TEST(Roster, ThirtyNodeFourStageAdversaryCount) {
  const auto g = augment_with_source(cli::gen_graph({}));
  const PlayerRoster r = build_roster(g);
  EXPECT_EQ(r.num_adversary(), 121);
  EXPECT_EQ(r.size(), 6 * 30 + g.relevance_pairs() + 1);
}

TEST(Roster, ActionSets) {
  const auto g =
      graph_of(make_data(3, {{1, 2}, {1, 3}, {2, 3}}, {{2}, {3}}, {1}));
  const PlayerRoster r = build_roster(g);
  const Player& entry = r[r.entry_player()];
  EXPECT_EQ(entry.kind, PlayerKind::kEntry);
  EXPECT_EQ(entry.actions, (std::vector<NodeId>{1, kDropAction}));
  // Node 1 has two neighbours: three actions in either stage.
  EXPECT_EQ(r[r.adversary_player(1, 1)].actions,
            (std::vector<NodeId>{2, 3, kDropAction}));
  EXPECT_EQ(r[r.adversary_player(1, 2)].num_actions(), 3);
  // Node 2 is a stage-1 destination: forced there.
  EXPECT_EQ(r[r.adversary_player(2, 1)].actions,
            std::vector<NodeId>{kForcedAction});
  EXPECT_EQ(r[r.adversary_player(2, 2)].actions,
            (std::vector<NodeId>{3, kDropAction}));
  EXPECT_EQ(r[r.adversary_player(3, 2)].actions,
            std::vector<NodeId>{kForcedAction});
}

TEST(Roster, DefenderPlayersMapToDistinctComponents) {
  std::mt19937_64 rng(51);
  testing::RandomGraphOptions o;
  o.max_nodes = 7;
  for (int t = 0; t < 20; ++t) {
    const auto g = testing::random_graph(rng, o);
    const PlayerRoster r = build_roster(g);
    std::set<std::pair<NodeId, int>> seen;
    for (int n = r.num_adversary(); n < r.size(); ++n) {
      const Player& p = r[n];
      ASSERT_EQ(p.kind, PlayerKind::kDefender);
      EXPECT_EQ(p.actions, (std::vector<NodeId>{0, 1}));
      EXPECT_TRUE(seen.insert({p.node, p.component}).second);
      EXPECT_EQ(r.defender_player(p.node, p.component), n);
    }
    EXPECT_EQ(static_cast<int>(seen.size()), 2 * g.num_nodes() +
                                                 g.relevance_pairs());
  }
}

TEST(SwapDistribution, Examples) {
  EXPECT_EQ(swap_distribution(std::vector<double>{0.5, 0.5}, 0, 1),
            (std::vector<double>{0.0, 1.0}));
  const std::vector<double> p = {0.0, 0.3, 0.7};
  EXPECT_EQ(swap_distribution(p, 0, 2), p);
  const double third = 1.0 / 3.0;
  const auto q = swap_distribution(std::vector<double>{third, third, third},
                                   0, 2);
  EXPECT_EQ(q[0], 0.0);
  EXPECT_EQ(q[1], third);
  EXPECT_DOUBLE_EQ(q[2], 2.0 / 3.0);
  EXPECT_THROW(swap_distribution(p, 1, 1), ValidationError);
}

TEST(ProfileEvaluator, AllActionUtilitiesMatchReevaluation) {
  std::mt19937_64 rng(52);
  testing::RandomGraphOptions o;
  o.max_nodes = 6;
  o.acyclic = false;
  for (int t = 0; t < 30; ++t) {
    const auto g = testing::random_graph(rng, o);
    const auto params =
        testing::random_params(rng, g.num_nodes(), g.num_stages());
    const PlayerRoster roster = build_roster(g);
    const ProfileEvaluator eval(g, params, roster);
    for (int s = 0; s < 5; ++s) {
      const Profile profile = random_profile(rng, roster);
      const auto all = eval.all_action_utilities(profile);
      for (int n = 0; n < roster.size(); ++n) {
        Profile changed = profile;
        for (int a = 0; a < roster[n].num_actions(); ++a) {
          changed[n] = a;
          const auto out = eval.evaluate(changed);
          const double want =
              roster[n].kind == PlayerKind::kDefender ? out.U_D : out.U_A;
          EXPECT_NEAR(all[n][a], want, 1e-9) << t << " " << n << " " << a;
        }
      }
    }
  }
}

TEST(ProfileEvaluator, AgreesWithPureProfileEvaluation) {
  std::mt19937_64 rng(53);
  testing::RandomGraphOptions o;
  o.max_nodes = 6;
  o.acyclic = false;
  int compared = 0;
  for (int t = 0; t < 200; ++t) {
    const auto g = testing::random_graph(rng, o);
    const auto params =
        testing::random_params(rng, g.num_nodes(), g.num_stages());
    const PlayerRoster roster = build_roster(g);
    const ProfileEvaluator eval(g, params, roster);
    const Profile profile = random_profile(rng, roster);
    const ProfileOutcome out = eval.evaluate(profile);
    if (out.looped) continue;
    const auto pure = game::evaluate_pure_profile(
        g, params, eval.defender_bits(profile), out.walk);
    EXPECT_NEAR(out.U_A, pure.U_A, 1e-9);
    EXPECT_NEAR(out.U_D, pure.U_D, 1e-9);
    EXPECT_EQ(out.detected, pure.detected_at >= 0);
    EXPECT_EQ(out.stages_completed, pure.stages_completed);
    ++compared;
  }
  EXPECT_GT(compared, 100);
}

TEST(ProfileEvaluator, UtilitySymmetry) {
  // Every adversary player sees U_A and every defender player U_D of the
  // realized profile at its own action.
  const auto g = small_generated(2);
  const auto params = default_params(g.num_nodes(), g.num_stages());
  const PlayerRoster roster = build_roster(g);
  const ProfileEvaluator eval(g, params, roster);
  std::mt19937_64 rng(54);
  for (int s = 0; s < 50; ++s) {
    const Profile profile = random_profile(rng, roster);
    const auto out = eval.evaluate(profile);
    const auto all = eval.all_action_utilities(profile);
    for (int n = 0; n < roster.size(); ++n) {
      const double own = all[n][profile[n]];
      EXPECT_EQ(own, roster[n].kind == PlayerKind::kDefender ? out.U_D
                                                             : out.U_A);
    }
  }
}

TEST(ExpectedSwapUtility, DegenerateIsPureUtility) {
  const auto g = small_generated(2);
  const auto params = default_params(g.num_nodes(), g.num_stages());
  const PlayerRoster roster = build_roster(g);
  const ProfileEvaluator eval(g, params, roster);
  std::mt19937_64 rng(55);
  const Profile profile = random_profile(rng, roster);
  for (int n = 0; n < roster.size(); ++n) {
    const int k = roster[n].num_actions();
    for (int a = 0; a < k; ++a) {
      std::vector<double> p(k, 0.0);
      p[a] = 1.0;
      Profile changed = profile;
      changed[n] = a;
      const auto out = eval.evaluate(changed);
      const double want =
          roster[n].kind == PlayerKind::kDefender ? out.U_D : out.U_A;
      EXPECT_NEAR(expected_swap_utility(eval, n, p, profile), want, 1e-9);
    }
  }
}

TEST(ExpectedSwapUtility, OffPathDefenderIgnoresDistribution) {
  // 1 -> 2 is the walk; node 3 is never entered. Its tag only adds cost,
  // but with zero cost the two actions give identical utilities.
  const auto g = graph_of(make_data(3, {{1, 2}, {1, 3}}, {{2}}, {1}));
  GameParams params = default_params(3, 1);
  params.c1 = 0.0;
  const PlayerRoster roster = build_roster(g);
  const ProfileEvaluator eval(g, params, roster);
  Profile profile(roster.size(), 0);  // entry -> 1, node 1 -> 2
  const int tag3 = roster.defender_player(3, game::kTag);
  const double a = expected_swap_utility(eval, tag3, std::vector<double>{1, 0},
                                         profile);
  const double b = expected_swap_utility(
      eval, tag3, std::vector<double>{0.2, 0.8}, profile);
  EXPECT_EQ(a, b);
}

TEST(ExpectedSwapUtility, MatchesSampling) {
  const auto g = small_generated(3);
  const auto params = default_params(g.num_nodes(), g.num_stages());
  const PlayerRoster roster = build_roster(g);
  const ProfileEvaluator eval(g, params, roster);
  std::mt19937_64 rng(56);
  const Profile profile = random_profile(rng, roster);
  for (int n = 0; n < roster.size(); ++n) {
    const int k = roster[n].num_actions();
    if (k < 2) continue;
    std::vector<double> p(k);
    for (double& x : p) x = std::uniform_real_distribution<double>(0, 1)(rng);
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    for (double& x : p) x /= total;
    const double expected = expected_swap_utility(eval, n, p, profile);
    std::discrete_distribution<int> draw(p.begin(), p.end());
    const int trials = 100000;
    double sum = 0.0, sum2 = 0.0;
    Profile changed = profile;
    for (int t = 0; t < trials; ++t) {
      changed[n] = draw(rng);
      const auto out = eval.evaluate(changed);
      const double u =
          roster[n].kind == PlayerKind::kDefender ? out.U_D : out.U_A;
      sum += u;
      sum2 += u * u;
    }
    const double mean = sum / trials;
    const double se =
        std::sqrt(std::max(0.0, sum2 / trials - mean * mean) / (trials - 1));
    EXPECT_LE(std::fabs(mean - expected), 3 * se + 1e-9) << n;
  }
}

std::vector<double> random_delta(std::mt19937_64& rng, int k) {
  std::vector<double> d(k * k, 0.0);
  std::exponential_distribution<double> e(1.0);
  double total = 0.0;
  for (int r = 0; r < k; ++r) {
    for (int s = 0; s < k; ++s) {
      if (r != s) total += d[r * k + s] = e(rng);
    }
  }
  for (double& x : d) x /= total;
  return d;
}

double residual(const std::vector<double>& p, const std::vector<double>& q,
                int k) {
  double r = 0.0;
  for (int s = 0; s < k; ++s) {
    double v = 0.0;
    for (int t = 0; t < k; ++t) v += p[t] * q[t * k + s];
    r += std::fabs(v - p[s]);
  }
  return r;
}

TEST(FixedPoint, ConcentratedSwapEmptiesSource) {
  std::vector<double> delta(9, 0.0);
  delta[0 * 3 + 2] = 1.0;  // 0 -> 2
  const auto fp = fixed_point(delta, 3);
  EXPECT_NEAR(fp.p[0], 0.0, 1e-12);
  EXPECT_NEAR(fp.p[1] + fp.p[2], 1.0, 1e-12);
}

TEST(FixedPoint, SymmetricTwoActionsIsUniform) {
  const auto fp = fixed_point(std::vector<double>{0.0, 0.5, 0.5, 0.0}, 2);
  EXPECT_NEAR(fp.p[0], 0.5, 1e-12);
  EXPECT_NEAR(fp.p[1], 0.5, 1e-12);
}

TEST(FixedPoint, SwapMatrixIsRowStochastic) {
  std::mt19937_64 rng(57);
  const auto delta = random_delta(rng, 5);
  const auto q = swap_matrix(delta, 5);
  for (int r = 0; r < 5; ++r) {
    double sum = 0.0;
    for (int s = 0; s < 5; ++s) {
      EXPECT_GE(q[r * 5 + s], 0.0);
      sum += q[r * 5 + s];
    }
    EXPECT_NEAR(sum, 1.0, 1e-15);
  }
}

TEST(FixedPoint, RandomFourActionsMatchLinearSolve) {
  std::mt19937_64 rng(58);
  for (int t = 0; t < 200; ++t) {
    const auto delta = random_delta(rng, 4);
    const auto q = swap_matrix(delta, 4);
    const auto fp = fixed_point(delta, 4);
    EXPECT_LE(residual(fp.p, q, 4), 1e-10);
    EXPECT_LE(fp.residual, 1e-10);
    const auto oracle = testing::gaussian_stationary(q, 4);
    const auto dense = fixed_point_dense(delta, 4);
    for (int a = 0; a < 4; ++a) {
      EXPECT_NEAR(fp.p[a], oracle[a], 1e-8);
      EXPECT_NEAR(dense[a], oracle[a], 1e-10);
    }
  }
}

TEST(FixedPoint, AgreesWithEigenvector) {
  std::mt19937_64 rng(59);
  const int k = 6;
  const auto delta = random_delta(rng, k);
  const auto q = swap_matrix(delta, k);
  Eigen::MatrixXd qt(k, k);
  for (int r = 0; r < k; ++r) {
    for (int s = 0; s < k; ++s) qt(s, r) = q[r * k + s];
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(qt);
  int best = 0;
  for (int i = 1; i < k; ++i) {
    if (std::abs(es.eigenvalues()[i] - 1.0) <
        std::abs(es.eigenvalues()[best] - 1.0)) {
      best = i;
    }
  }
  Eigen::VectorXd v = es.eigenvectors().col(best).real();
  v /= v.sum();
  const auto fp = fixed_point(delta, k);
  for (int a = 0; a < k; ++a) EXPECT_NEAR(fp.p[a], v[a], 1e-8);
}

TEST(FixedPoint, CapRaisesNonConvergence) {
  std::mt19937_64 rng(60);
  const auto delta = random_delta(rng, 4);
  EXPECT_THROW(fixed_point(delta, 4, 1), NonConvergence);
}

TEST(Run, DominanceSendsAdversaryIn) {
  const Dominance d = dominance();
  const auto result = run(d.graph, d.params, {.seed = 3});
  const PlayerRoster roster = build_roster(d.graph);
  ASSERT_EQ(roster.size(), 4);  // entry, forced (1, 1), tag, trap
  EXPECT_TRUE(result.converged);
  EXPECT_GT(result.distributions[roster.entry_player()][0], 0.99);
  EXPECT_LT(result.distributions[roster.defender_player(1, game::kTrap)][1],
            0.01);
}

TEST(Run, InfiniteThresholdStopsAfterOneIteration) {
  const auto g = small_generated(1);
  const auto params = default_params(g.num_nodes(), g.num_stages());
  const auto result =
      run(g, params, {.eps = std::numeric_limits<double>::infinity()});
  EXPECT_EQ(result.iterations, 1);
  EXPECT_TRUE(result.converged);
  EXPECT_EQ(result.trace.size(), 1u);
  for (const auto& p : result.distributions) {
    for (double x : p) EXPECT_DOUBLE_EQ(x, 1.0 / p.size());
  }
}

TEST(Run, DistributionsStayValidAndTraceIsComplete) {
  const auto g = small_generated(2);
  const auto params = default_params(g.num_nodes(), g.num_stages());
  for (std::int64_t iters : {1, 2, 7, 50}) {
    const auto result =
        run(g, params, {.max_iters = iters, .stop_on_convergence = false});
    EXPECT_EQ(result.iterations, iters);
    EXPECT_EQ(static_cast<std::int64_t>(result.trace.size()), iters);
    for (const auto& p : result.distributions) {
      double sum = 0.0;
      for (double x : p) {
        EXPECT_GE(x, 0.0);
        sum += x;
      }
      EXPECT_NEAR(sum, 1.0, 1e-12);
    }
    std::int64_t count = 0;
    double prob = 0.0;
    for (const auto& e : result.joint) {
      count += e.count;
      prob += e.prob;
    }
    EXPECT_EQ(count, (iters + 1) / 2);
    EXPECT_NEAR(prob, 1.0, 1e-12);
    EXPECT_EQ(result.uniform_restarts, 0);
  }
}

TEST(Run, Deterministic) {
  const auto g = small_generated(4);
  const auto params = default_params(g.num_nodes(), g.num_stages());
  const LearnerConfig config{.max_iters = 300, .seed = 8,
                             .stop_on_convergence = false};
  const auto a = run(g, params, config);
  const auto b = run(g, params, config);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t t = 0; t < a.trace.size(); ++t) {
    EXPECT_EQ(trace_csv_row(a.trace[t]), trace_csv_row(b.trace[t]));
    EXPECT_EQ(a.trace[t].U_D_avg, b.trace[t].U_D_avg);
  }
  EXPECT_EQ(a.distributions, b.distributions);
  const auto c = run(g, params, {.max_iters = 300, .seed = 9,
                                 .stop_on_convergence = false});
  EXPECT_NE(a.distributions, c.distributions);
}

TEST(Run, ScalarAndVectorKernelsGiveIdenticalRuns) {
  if (dift::simd::detected_isa() == simd::Isa::kScalar) GTEST_SKIP();
  const auto g = small_generated(2);
  const auto params = default_params(g.num_nodes(), g.num_stages());
  const LearnerConfig config{.max_iters = 200, .stop_on_convergence = false};
  const simd::Isa before = simd::active_isa();
  simd::set_active_isa(simd::Isa::kScalar);
  const auto a = run(g, params, config);
  simd::set_active_isa(simd::detected_isa());
  const auto b = run(g, params, config);
  simd::set_active_isa(before);
  EXPECT_EQ(a.distributions, b.distributions);
}

LearnResult single_profile(const Profile& profile) {
  LearnResult r;
  r.joint.push_back({profile, 1, 1.0});
  return r;
}

TEST(SwapRegret, StrictEquilibriumHasNoRegret) {
  const Dominance d = dominance();
  // Entry goes in, forced move, tag and trap off.
  const auto est =
      swap_regret(single_profile({0, 0, 0, 0}), d.graph, d.params, 100, 1);
  EXPECT_TRUE(est.exact);
  EXPECT_LE(est.regret, 0.0);
}

TEST(SwapRegret, UniformJointOnDominanceHasRegret) {
  const Dominance d = dominance();
  LearnResult r;
  for (std::uint16_t entry = 0; entry < 2; ++entry) {
    for (std::uint16_t tag = 0; tag < 2; ++tag) {
      for (std::uint16_t trap = 0; trap < 2; ++trap) {
        r.joint.push_back({{entry, 0, tag, trap}, 1, 0.125});
      }
    }
  }
  const auto est = swap_regret(r, d.graph, d.params, 100, 1);
  EXPECT_GT(est.regret, 0.0);
  // Dropping the trap saves 1e5 B whenever it is on.
  EXPECT_EQ(est.player, 3);
  EXPECT_EQ(est.from, 1);
  EXPECT_EQ(est.to, 0);
}

TEST(SwapRegret, SampledEstimateCoversExact) {
  const auto g = small_generated(2);
  const auto params = default_params(g.num_nodes(), g.num_stages());
  const auto result =
      run(g, params, {.max_iters = 400, .stop_on_convergence = false});
  const auto exact = swap_regret(result, g, params, 100000, 1);
  ASSERT_TRUE(exact.exact);
  const auto sampled = swap_regret(result, g, params, 20, 2);
  EXPECT_FALSE(sampled.exact);
  EXPECT_EQ(sampled.samples, 20);
}

TEST(SwapRegret, ConvergedFiveNodeInstance) {
  const auto g = small_generated(3);
  const auto params = default_params(g.num_nodes(), g.num_stages());
  const LearnerConfig config;
  const auto result = run(g, params, config);
  ASSERT_TRUE(result.converged);
  const auto est = swap_regret(result, g, params, 100000, 1);
  EXPECT_LE(est.regret, config.eps + 3 * est.std_error);
}

TEST(SwapRegret, DecreasesWithBudget) {
  const auto g = small_generated(2);
  const auto params = default_params(g.num_nodes(), g.num_stages());
  std::vector<double> medians;
  for (std::int64_t budget : {100, 1000, 10000}) {
    std::vector<double> regrets;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto result = run(g, params, {.max_iters = budget, .seed = seed,
                                          .stop_on_convergence = false});
      regrets.push_back(swap_regret(result, g, params, 100000, 1).regret);
    }
    medians.push_back(testing::median(regrets));
  }
  EXPECT_GE(medians[0], medians[1]);
  EXPECT_GE(medians[1], medians[2]);
}

TEST(Strategies, FromDistributions) {
  const auto g = small_generated(2);
  const auto params = default_params(g.num_nodes(), g.num_stages());
  const auto result = run(g, params, {.max_iters = 100,
                                      .stop_on_convergence = false});
  const PlayerRoster roster = build_roster(g);
  const auto [defender, adversary] =
      strategies_from_distributions(g, roster, result.distributions);
  const int n = roster.defender_player(1, game::kTag);
  EXPECT_EQ(defender.get(1, game::kTag), result.distributions[n][1]);
  const auto entry = adversary.distribution(ifg::kSource, 1);
  for (std::size_t a = 0; a < entry.size(); ++a) {
    EXPECT_EQ(entry[a], result.distributions[0][a]);
  }
  // The pair is a valid input to the evaluators.
  EXPECT_NO_THROW(game::evaluate_markov(g, params, defender, adversary,
                                        {.max_len = 200, .eps_trunc = 1.0}));
}

TEST(Trace, CsvHeader) {
  EXPECT_EQ(trace_csv_header(), "iteration,U_D_avg,U_A_avg,max_gap");
  EXPECT_EQ(trace_csv_row({3, 1.5, -2.0, 0.25}), "3,1.5,-2,0.25");
}

}  // namespace
}  // namespace dift::learn
