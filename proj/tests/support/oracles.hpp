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

// Independent reference computations for the tests. Nothing here calls the
// library routine it is used to check.

#ifndef DIFT_TESTS_SUPPORT_ORACLES_HPP_
#define DIFT_TESTS_SUPPORT_ORACLES_HPP_

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "dift/game.hpp"
#include "dift/ifg.hpp"

namespace dift::testing {

using game::AdversaryStrategy;
using game::DefenderStrategy;
using game::GameParams;
using ifg::InformationFlowGraph;
using ifg::NodeId;

struct RandomGraphOptions {
  int min_nodes = 2;
  int max_nodes = 6;
  int min_stages = 1;
  int max_stages = 2;
  double density = 0.35;
  bool acyclic = true;       // edges only from lower to higher ids
  bool random_weights = true;
  bool random_rules = true;  // each (node, rule) pair kept with prob 1/2
};

// A valid augmented graph. Stage destination sets are random nonempty
// subsets; entries are a random nonempty subset.
InformationFlowGraph random_graph(std::mt19937_64& rng,
                                  const RandomGraphOptions& options);

// Random parameters with the required signs; costs drawn from [lo, hi] * -1.
GameParams random_params(std::mt19937_64& rng, int num_rules, int num_stages,
                         double cost_lo = 1.0, double cost_hi = 100.0);

DefenderStrategy random_defender(std::mt19937_64& rng, int num_nodes);
DefenderStrategy random_pure_defender(std::mt19937_64& rng, int num_nodes,
                                      double p_one = 0.5);

// Every decision state draws Dirichlet(1) weights over moves and drop, with
// at least `min_drop` on drop.
AdversaryStrategy random_adversary(std::mt19937_64& rng,
                                   const InformationFlowGraph& graph,
                                   double min_drop = 0.0);

// Cheapest node set whose removal disconnects every entry from every
// stage-1 destination, by enumeration of all subsets. Node i costs
// |c1 + c2| B(i).
double brute_force_min_separator(const InformationFlowGraph& graph,
                                 const GameParams& params,
                                 std::vector<NodeId>* best = nullptr);

// Maximum over all stage-respecting walks from s0 and every stage j they
// complete of p(walk) (beta_A_j - alpha_A) + alpha_A, where p is the
// probability of passing every entered node undetected. Computed by
// dynamic programming over walk lengths up to N M. Returns -infinity when
// no destination is reachable.
double brute_force_adversary_value(const InformationFlowGraph& graph,
                                   const GameParams& params,
                                   const DefenderStrategy& defender);

struct Expectation {
  double U_D = 0.0;
  double U_A = 0.0;
  double alive = 0.0;  // mass still undecided at the depth bound
};

// Expected utilities by direct recursion over (node, stage, depth), summing
// each step's detection and stage rewards. Costs included in U_D.
Expectation recursive_expectation(const InformationFlowGraph& graph,
                                  const GameParams& params,
                                  const DefenderStrategy& defender,
                                  const AdversaryStrategy& adversary,
                                  int max_depth);

// Stationary distribution of a row-stochastic k x k matrix by Gaussian
// elimination with partial pivoting on (Q^T - I) p = 0, sum p = 1.
std::vector<double> gaussian_stationary(const std::vector<double>& q, int k);

// Maximum of f over all subsets of {0..n-1}.
double brute_force_max(int n,
                       const std::function<double(const std::vector<char>&)>& f);

double median(std::vector<double> values);

}  // namespace dift::testing

#endif  // DIFT_TESTS_SUPPORT_ORACLES_HPP_
