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

#include <cstdlib>
#include <functional>
#include <ostream>
#include <utility>

#include "CLI11.hpp"
#include "dift/cli.hpp"

namespace dift::cli {
namespace {

// Options parse into a scratch config; only the ones given on the command
// line are copied over the config file values afterwards.
class Flags {
 public:
  template <typename T>
  CLI::Option* add(CLI::App* app, const std::string& name,
                   T& (*field)(RunConfig&), const std::string& help) {
    CLI::Option* opt = app->add_option(name, field(scratch_), help);
    copies_.emplace_back(opt, [field](RunConfig& to, RunConfig& from) {
      field(to) = field(from);
    });
    return opt;
  }

  void apply(RunConfig& config) {
    for (auto& [opt, copy] : copies_) {
      if (opt->count() > 0) copy(config, scratch_);
    }
  }

 private:
  RunConfig scratch_;
  std::vector<std::pair<CLI::Option*,
                        std::function<void(RunConfig&, RunConfig&)>>>
      copies_;
};

}  // namespace

int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Games on information flow graphs: generation, equilibria, "
               "learning and simulation."};
  app.name("dift");
  app.require_subcommand(1);
  app.fallthrough();

  Flags flags;
  std::string config_path;
  flags.add(&app, "--seed",
            +[](RunConfig& c) -> std::uint64_t& { return c.seed; },
            "Random seed");
  flags.add(&app, "--out",
            +[](RunConfig& c) -> std::filesystem::path& { return c.out_dir; },
            "Output directory (default: $DIFT_OUT_DIR, else the current "
            "directory)");
  app.add_option("--config", config_path, "JSON file with settings")
      ->check(CLI::ExistingFile);

  auto graph_opt = [&](CLI::App* sub) {
    flags.add(sub, "--graph",
              +[](RunConfig& c) -> std::filesystem::path& { return c.graph; },
              "Graph file (dift-ifg/1)")
        ->required();
  };
  auto learner_opts = [&](CLI::App* sub) {
    flags.add(sub, "--eta",
              +[](RunConfig& c) -> double& { return c.learner.eta; },
              "Learning rate");
    flags.add(sub, "--eps",
              +[](RunConfig& c) -> double& { return c.learner.eps; },
              "Stop when no distribution moves by more than this");
    flags.add(sub, "--max-iters",
              +[](RunConfig& c) -> std::int64_t& {
                return c.learner.max_iters;
              },
              "Iteration cap");
  };

  CLI::App* gen = app.add_subcommand("gen-graph", "Generate a synthetic graph");
  flags.add(gen, "--nodes", +[](RunConfig& c) -> int& { return c.gen.nodes; },
            "Number of nodes");
  flags.add(gen, "--stages",
            +[](RunConfig& c) -> int& { return c.gen.stages; },
            "Number of attack stages");
  flags.add(gen, "--dest-per-stage",
            +[](RunConfig& c) -> std::vector<int>& {
              return c.gen.dest_per_stage;
            },
            "Destinations per stage, comma separated")
      ->delimiter(',');
  flags.add(gen, "--entries",
            +[](RunConfig& c) -> int& { return c.gen.entries; },
            "Number of entry nodes");
  flags.add(gen, "--density",
            +[](RunConfig& c) -> double& { return c.gen.density; },
            "Probability of each extra edge");

  CLI::App* single =
      app.add_subcommand("solve-single", "Solve a one-stage game exactly");
  graph_opt(single);

  CLI::App* multi =
      app.add_subcommand("solve-multi", "Learn a correlated equilibrium");
  graph_opt(multi);
  learner_opts(multi);
  bool no_early_stop = false;
  multi->add_flag("--no-early-stop", no_early_stop,
                  "Run every iteration even after convergence");

  CLI::App* br = app.add_subcommand("best-response",
                                    "Best response to a strategy file");
  graph_opt(br);
  flags.add(br, "--strategy",
            +[](RunConfig& c) -> std::filesystem::path& { return c.strategy; },
            "Strategy of the other player")
      ->required();
  flags.add(br, "--side", +[](RunConfig& c) -> std::string& { return c.side; },
            "Who responds: adversary or defender")
      ->required()
      ->check(CLI::IsMember({"adversary", "defender"}));
  flags.add(br, "--levels",
            +[](RunConfig& c) -> std::vector<int>& { return c.levels; },
            "Discretization levels per component (one value applies to all)")
      ->delimiter(',');

  CLI::App* sim = app.add_subcommand("simulate", "Estimate utilities");
  graph_opt(sim);
  flags.add(sim, "--defender",
            +[](RunConfig& c) -> std::filesystem::path& { return c.defender; },
            "Defender strategy file")
      ->required();
  flags.add(sim, "--adversary",
            +[](RunConfig& c) -> std::filesystem::path& { return c.adversary; },
            "Adversary strategy file")
      ->required();
  flags.add(sim, "--trials",
            +[](RunConfig& c) -> std::int64_t& { return c.trials; },
            "Monte Carlo trials");
  flags.add(sim, "--workers", +[](RunConfig& c) -> int& { return c.workers; },
            "Monte Carlo worker threads");
  flags.add(sim, "--estimator",
            +[](RunConfig& c) -> std::string& { return c.estimator; },
            "monte-carlo, exact or markov");

  CLI::App* sweep =
      app.add_subcommand("sweep-cost", "Defender utility against cost scale");
  graph_opt(sweep);
  flags.add(sweep, "--eta",
            +[](RunConfig& c) -> double& { return c.sweep_learner.eta; },
            "Learning rate");
  flags.add(sweep, "--max-iters",
            +[](RunConfig& c) -> std::int64_t& {
              return c.sweep_learner.max_iters;
            },
            "Learner iterations per replication");
  flags.add(sweep, "--replications",
            +[](RunConfig& c) -> int& { return c.replications; },
            "Learner runs per factor");
  flags.add(sweep, "--factors",
            +[](RunConfig& c) -> std::vector<double>& { return c.factors; },
            "Cost scale factors, comma separated")
      ->delimiter(',');
  flags.add(sweep, "--trials",
            +[](RunConfig& c) -> std::int64_t& { return c.trials; },
            "Monte Carlo trials per factor");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  RunConfig config;
  if (const char* dir = std::getenv("DIFT_OUT_DIR"); dir && *dir) {
    config.out_dir = dir;
  } else {
    config.out_dir = ".";
  }
  try {
    if (!config_path.empty()) apply_config_file(config_path, config);
  } catch (const Error& e) {
    err << "dift: error in stage 'config': " << e.what() << "\n";
    return 2;
  }
  flags.apply(config);
  if (no_early_stop) config.learner.stop_on_convergence = false;

  CLI::App* chosen = app.get_subcommands().front();
  config.command = chosen->get_name();
  try {
    std::vector<std::filesystem::path> written;
    if (chosen == gen) written = cmd_gen_graph(config);
    if (chosen == single) written = cmd_solve_single(config);
    if (chosen == multi) written = cmd_solve_multi(config);
    if (chosen == br) written = cmd_best_response(config);
    if (chosen == sim) written = cmd_simulate(config);
    if (chosen == sweep) written = cmd_sweep_cost(config);
    for (const auto& path : written) out << path.string() << "\n";
  } catch (const UsageError& e) {
    err << "dift: usage error: " << e.what() << "\n";
    return 2;
  } catch (const StageError& e) {
    err << "dift: error in stage '" << e.stage() << "': "
        << e.what() + e.stage().size() + 2 << "\n";
    return 1;
  } catch (const Error& e) {
    err << "dift: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace dift::cli
