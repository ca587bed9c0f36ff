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

// Command-line driver: synthetic graphs, solvers, simulation and sweeps.
// Each command reads its inputs, writes result files plus a manifest.json
// into the output directory, and reports failures with the stage that
// raised them.

#ifndef DIFT_CLI_HPP_
#define DIFT_CLI_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dift/error.hpp"
#include "dift/game.hpp"
#include "dift/ifg.hpp"
#include "dift/learn.hpp"

namespace dift::cli {

struct GenGraphOptions {
  int nodes = 30;
  int stages = 4;
  std::vector<int> dest_per_stage = {2, 2, 2, 2};
  int entries = 1;
  double density = 0.08;
  std::uint64_t seed = 1;
  int max_attempts = 1000;
};

// Random digraph in which every destination of every stage is reachable from
// every entry by a stage-respecting path. A random arborescence hanging off
// the entries keeps it connected; every other ordered pair becomes an edge
// with probability `density`. Draws are rejected until the reachability
// requirement holds. Traffic weights are random and normalized, and the rules
// checked at a node are those of the entries that reach it (rule r belongs
// to entry node r). Throws ParamError for inconsistent sizes and
// GenerationFailed when every attempt is rejected.
ifg::InformationFlowGraph gen_graph(const GenGraphOptions& options);

// True when every destination of every stage can be reached from every entry
// at its own stage.
bool stage_reachable(const ifg::InformationFlowGraph& graph);

// Cost scale factors of the sensitivity sweep.
inline const std::vector<double> kDefaultFactors = {0.01, 0.1, 0.5, 1.0,
                                                    3.0,  6.0, 10.0};

// Parameter values given on top of game::default_params for the graph.
struct ParamOverrides {
  std::optional<double> alpha_A;
  std::optional<std::vector<double>> beta_A;
  std::optional<double> alpha_D;
  std::optional<std::vector<double>> beta_D;
  std::optional<double> c1;
  std::optional<double> c2;
  std::optional<std::vector<double>> gamma;  // one value applies to every rule
};

// default_params for the graph with the overrides applied. Throws ParamError
// when the result has the wrong shape or signs.
game::GameParams resolve_params(const ifg::InformationFlowGraph& graph,
                                const ParamOverrides& overrides);

struct RunConfig {
  std::string command;
  std::uint64_t seed = 1;
  std::filesystem::path out_dir;
  ParamOverrides params;
  learn::LearnerConfig learner;
  // The sweep learns for a fixed budget: the gap test can pass while the
  // distributions are saturated but still about to switch.
  learn::LearnerConfig sweep_learner = {.max_iters = 2000,
                                        .stop_on_convergence = false};
  int replications = 10;
  GenGraphOptions gen;
  std::vector<double> factors = kDefaultFactors;
  std::int64_t trials = 100000;  // Monte Carlo trials per estimate
  int workers = 1;
  std::string estimator = "monte-carlo";  // monte-carlo, exact or markov
  std::filesystem::path graph;
  std::filesystem::path defender;
  std::filesystem::path adversary;
  std::filesystem::path strategy;
  std::string side;  // adversary or defender
  std::vector<int> levels;  // discretization of the defender best response
};

// Raised for bad command-line values; maps to exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

// A module error tagged with the command stage that raised it.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

// Applies a JSON config file on top of `config`. Recognized keys: seed, out,
// params {alpha_A, beta_A, alpha_D, beta_D, c1, c2, gamma}, learner {eta, eps,
// max_iters}, sweep {eta, max_iters, replications}, factors, trials,
// workers.
void apply_config_file(const std::filesystem::path& path, RunConfig& config);

// Commands. Each returns the list of files written.
std::vector<std::filesystem::path> cmd_gen_graph(const RunConfig& config);
std::vector<std::filesystem::path> cmd_solve_single(const RunConfig& config);
std::vector<std::filesystem::path> cmd_solve_multi(const RunConfig& config);
std::vector<std::filesystem::path> cmd_best_response(const RunConfig& config);
std::vector<std::filesystem::path> cmd_simulate(const RunConfig& config);
std::vector<std::filesystem::path> cmd_sweep_cost(const RunConfig& config);

struct SweepRow {
  double factor = 0.0;
  double mean_U_D = 0.0;
  double mean_U_A = 0.0;
  double se_U_D = 0.0;
  double se_U_A = 0.0;
};

// For every factor (c1, c2 and gamma scaled together) runs the learner with
// seeds seed .. seed + replications - 1 and estimates the utilities of each
// learned strategy pair by Monte Carlo. A row holds the mean over
// replications and its standard error. Rows are sorted by factor.
std::vector<SweepRow> sweep_cost(const ifg::InformationFlowGraph& graph,
                                 const game::GameParams& params,
                                 const std::vector<double>& factors,
                                 const learn::LearnerConfig& learner,
                                 int replications, std::int64_t trials,
                                 std::uint64_t seed);

std::string sweep_csv(const std::vector<SweepRow>& rows);

// Parses argv, runs the command and returns the process exit code: 0 on
// success, 2 for usage errors, 1 for module errors. Diagnostics go to `err`.
int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace dift::cli

#endif  // DIFT_CLI_HPP_
