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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "dift/cli.hpp"
#include "dift/error.hpp"
#include "dift/respond.hpp"
#include "dift/single_stage.hpp"
#include "json.hpp"

namespace dift::cli {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;
using game::GameParams;
using ifg::InformationFlowGraph;

// Runs `body`, tagging any library error with the stage name.
template <typename F>
auto stage(const char* name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const UsageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, e.what());
  } catch (const Json::exception& e) {
    throw StageError(name, e.what());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

fs::path write_file(const fs::path& dir, const std::string& name,
                    const std::string& contents) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  const fs::path path = dir / name;
  std::ofstream out(path, std::ios::binary);
  out << contents;
  out.close();
  if (!out) throw IoError("cannot write " + path.string());
  return path;
}

std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

InformationFlowGraph load_graph(const RunConfig& config) {
  if (config.graph.empty()) throw UsageError("--graph is required");
  return stage("load-graph", [&] {
    InformationFlowGraph graph = ifg::load(config.graph);
    return graph.augmented() ? graph : ifg::augment_with_source(graph);
  });
}

Json params_json(const GameParams& p) {
  return Json{{"alpha_A", p.alpha_A}, {"beta_A", p.beta_A},
              {"alpha_D", p.alpha_D}, {"beta_D", p.beta_D},
              {"c1", p.c1},           {"c2", p.c2},
              {"gamma", p.gamma}};
}

Json config_json(const RunConfig& c) {
  Json gen{{"nodes", c.gen.nodes},
           {"stages", c.gen.stages},
           {"dest_per_stage", c.gen.dest_per_stage},
           {"entries", c.gen.entries},
           {"density", c.gen.density}};
  Json learner{{"eta", c.learner.eta},
               {"eps", std::isinf(c.learner.eps) ? Json("inf")
                                                 : Json(c.learner.eps)},
               {"max_iters", c.learner.max_iters},
               {"stop_on_convergence", c.learner.stop_on_convergence}};
  Json sweep{{"eta", c.sweep_learner.eta},
             {"max_iters", c.sweep_learner.max_iters},
             {"stop_on_convergence", c.sweep_learner.stop_on_convergence},
             {"replications", c.replications}};
  return Json{{"command", c.command},
              {"seed", c.seed},
              {"out", c.out_dir.string()},
              {"graph", c.graph.string()},
              {"defender", c.defender.string()},
              {"adversary", c.adversary.string()},
              {"strategy", c.strategy.string()},
              {"side", c.side},
              {"levels", c.levels},
              {"gen", gen},
              {"learner", learner},
              {"sweep", sweep},
              {"factors", c.factors},
              {"trials", c.trials},
              {"workers", c.workers},
              {"estimator", c.estimator}};
}

// The manifest holds the resolved configuration; rerunning with it reproduces
// the outputs byte for byte.
fs::path write_manifest(const RunConfig& config, const GameParams* params,
                        const std::vector<fs::path>& outputs) {
  Json doc;
  doc["format"] = "dift-manifest/1";
  doc["config"] = config_json(config);
  if (params) doc["params"] = params_json(*params);
  Json files = Json::array();
  for (const fs::path& p : outputs) files.push_back(p.filename().string());
  doc["outputs"] = std::move(files);
  return write_file(config.out_dir, "manifest.json", doc.dump(2) + "\n");
}

std::vector<double> number_list(const Json& j, const std::string& field) {
  if (j.is_number()) return {j.get<double>()};
  if (!j.is_array()) throw ParseError(field, "expected a number or a list");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) {
      throw ParseError(field + "[" + std::to_string(i) + "]",
                       "expected a number");
    }
    out.push_back(j[i].get<double>());
  }
  return out;
}

double number(const Json& j, const std::string& field) {
  if (!j.is_number()) throw ParseError(field, "expected a number");
  return j.get<double>();
}

std::int64_t integer(const Json& j, const std::string& field) {
  if (!j.is_number_integer()) throw ParseError(field, "expected an integer");
  return j.get<std::int64_t>();
}

}  // namespace

GameParams resolve_params(const InformationFlowGraph& graph,
                          const ParamOverrides& o) {
  GameParams p = game::default_params(graph.num_nodes(), graph.num_stages());
  if (o.alpha_A) p.alpha_A = *o.alpha_A;
  if (o.beta_A) p.beta_A = *o.beta_A;
  if (o.alpha_D) p.alpha_D = *o.alpha_D;
  if (o.beta_D) p.beta_D = *o.beta_D;
  if (o.c1) p.c1 = *o.c1;
  if (o.c2) p.c2 = *o.c2;
  if (o.gamma) {
    p.gamma = o.gamma->size() == 1
                  ? std::vector<double>(graph.num_nodes(), o.gamma->front())
                  : *o.gamma;
  }
  p.require_valid(graph);
  return p;
}

void apply_config_file(const fs::path& path, RunConfig& config) {
  Json doc;
  try {
    doc = Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw ParseError(path.string(), e.what());
  }
  if (!doc.is_object()) throw ParseError("<root>", "expected an object");
  for (const auto& [key, value] : doc.items()) {
    if (key == "seed") {
      config.seed = static_cast<std::uint64_t>(integer(value, key));
    } else if (key == "out") {
      if (!value.is_string()) throw ParseError(key, "expected a string");
      config.out_dir = value.get<std::string>();
    } else if (key == "params") {
      if (!value.is_object()) throw ParseError(key, "expected an object");
      ParamOverrides& o = config.params;
      for (const auto& [name, v] : value.items()) {
        const std::string field = "params." + name;
        if (name == "alpha_A") {
          o.alpha_A = number(v, field);
        } else if (name == "alpha_D") {
          o.alpha_D = number(v, field);
        } else if (name == "c1") {
          o.c1 = number(v, field);
        } else if (name == "c2") {
          o.c2 = number(v, field);
        } else if (name == "beta_A") {
          o.beta_A = number_list(v, field);
        } else if (name == "beta_D") {
          o.beta_D = number_list(v, field);
        } else if (name == "gamma") {
          o.gamma = number_list(v, field);
        } else {
          throw ParseError(field, "unknown parameter");
        }
      }
    } else if (key == "learner") {
      if (!value.is_object()) throw ParseError(key, "expected an object");
      for (const auto& [name, v] : value.items()) {
        const std::string field = "learner." + name;
        if (name == "eta") {
          config.learner.eta = number(v, field);
        } else if (name == "eps") {
          config.learner.eps = number(v, field);
        } else if (name == "max_iters") {
          config.learner.max_iters = integer(v, field);
        } else {
          throw ParseError(field, "unknown learner setting");
        }
      }
    } else if (key == "sweep") {
      if (!value.is_object()) throw ParseError(key, "expected an object");
      for (const auto& [name, v] : value.items()) {
        const std::string field = "sweep." + name;
        if (name == "eta") {
          config.sweep_learner.eta = number(v, field);
        } else if (name == "max_iters") {
          config.sweep_learner.max_iters = integer(v, field);
        } else if (name == "replications") {
          config.replications = static_cast<int>(integer(v, field));
        } else {
          throw ParseError(field, "unknown sweep setting");
        }
      }
    } else if (key == "factors") {
      config.factors = number_list(value, key);
    } else if (key == "trials") {
      config.trials = integer(value, key);
    } else if (key == "workers") {
      config.workers = static_cast<int>(integer(value, key));
    } else {
      throw ParseError(key, "unknown setting");
    }
  }
}

std::vector<fs::path> cmd_gen_graph(const RunConfig& config) {
  GenGraphOptions options = config.gen;
  options.seed = config.seed;
  const InformationFlowGraph graph =
      stage("generate", [&] { return gen_graph(options); });
  std::vector<fs::path> out = stage("write-output", [&] {
    return std::vector<fs::path>{
        write_file(config.out_dir, "graph.json", ifg::serialize(graph)),
        write_file(config.out_dir, "graph.dot", ifg::export_dot(graph))};
  });
  out.push_back(
      stage("write-output", [&] { return write_manifest(config, nullptr, out); }));
  return out;
}

std::vector<fs::path> cmd_solve_single(const RunConfig& config) {
  const InformationFlowGraph graph = load_graph(config);
  const GameParams params =
      stage("params", [&] { return resolve_params(graph, config.params); });
  const single_stage::SingleStageEquilibrium eq =
      stage("solve-single", [&] { return single_stage::solve(graph, params); });
  const single_stage::EpsilonCheck check = stage("epsilon-check", [&] {
    return single_stage::check_epsilon_equilibrium(eq, params);
  });

  Json nodes = Json::array();
  for (const single_stage::CutNodeSolution& s : eq.nodes) {
    nodes.push_back(Json{{"node", s.node},
                         {"rules", s.rules},
                         {"cost", s.cost},
                         {"kappa", s.kappa},
                         {"component_costs", s.component_costs},
                         {"phi", s.phi},
                         {"closed_form", s.closed_form},
                         {"played", s.played},
                         {"detection", s.detection},
                         {"pi", s.pi}});
  }
  Json doc{{"format", "dift-single-stage/1"},
           {"diagnostic", single_stage::diagnostic_name(eq.diagnostic)},
           {"note", eq.note},
           {"adversary_drops", eq.adversary_drops},
           {"cut_nodes", nodes},
           {"detection_spread", eq.detection_spread},
           {"U_D", eq.U_D},
           {"U_A", eq.U_A},
           {"evaluated_U_D", eq.evaluated.U_D},
           {"evaluated_U_A", eq.evaluated.U_A},
           {"defender_deviation_gain", check.defender_gain},
           {"adversary_deviation_gain", check.adversary_gain}};
  std::vector<fs::path> out = stage("write-output", [&] {
    return std::vector<fs::path>{
        write_file(config.out_dir, "equilibrium.json", doc.dump(2) + "\n"),
        write_file(config.out_dir, "defender.json",
                   game::serialize_defender(eq.defender)),
        write_file(config.out_dir, "adversary.json",
                   game::serialize_adversary(eq.adversary))};
  });
  out.push_back(
      stage("write-output", [&] { return write_manifest(config, &params, out); }));
  return out;
}

std::vector<fs::path> cmd_solve_multi(const RunConfig& config) {
  const InformationFlowGraph graph = load_graph(config);
  const GameParams params =
      stage("params", [&] { return resolve_params(graph, config.params); });
  learn::LearnerConfig learner = config.learner;
  learner.seed = config.seed;
  const learn::LearnResult result =
      stage("learn", [&] { return learn::run(graph, params, learner); });
  const learn::RegretEstimate regret = stage("swap-regret", [&] {
    return learn::swap_regret(result, graph, params, 100000, config.seed);
  });
  const learn::PlayerRoster roster = learn::build_roster(graph);
  const auto [defender, adversary] = stage("strategies", [&] {
    return learn::strategies_from_distributions(graph, roster,
                                                result.distributions);
  });

  std::string trace = learn::trace_csv_header() + "\n";
  for (const learn::TracePoint& p : result.trace) {
    trace += learn::trace_csv_row(p) + "\n";
  }
  Json summary{{"format", "dift-learn/1"},
               {"players", roster.size()},
               {"iterations", result.iterations},
               {"converged", result.converged},
               {"final_gap", result.final_gap},
               {"joint_support", result.joint.size()},
               {"swap_regret", regret.regret},
               {"swap_regret_se", regret.std_error},
               {"swap_regret_exact", regret.exact},
               {"dense_fallbacks", result.dense_fallbacks},
               {"uniform_restarts", result.uniform_restarts}};
  std::vector<fs::path> out = stage("write-output", [&] {
    return std::vector<fs::path>{
        write_file(config.out_dir, "trace.csv", trace),
        write_file(config.out_dir, "learn.json", summary.dump(2) + "\n"),
        write_file(config.out_dir, "defender.json",
                   game::serialize_defender(defender)),
        write_file(config.out_dir, "adversary.json",
                   game::serialize_adversary(adversary))};
  });
  out.push_back(
      stage("write-output", [&] { return write_manifest(config, &params, out); }));
  return out;
}

std::vector<fs::path> cmd_best_response(const RunConfig& config) {
  if (config.side != "adversary" && config.side != "defender") {
    throw UsageError("--side must be adversary or defender");
  }
  if (config.strategy.empty()) throw UsageError("--strategy is required");
  const InformationFlowGraph graph = load_graph(config);
  const GameParams params =
      stage("params", [&] { return resolve_params(graph, config.params); });
  std::vector<fs::path> out;
  if (config.side == "adversary") {
    const game::DefenderStrategy defender = stage("load-strategy", [&] {
      return game::parse_defender(read_file(config.strategy),
                                  graph.num_nodes());
    });
    const respond::AdversaryBestResponse br = stage("best-response", [&] {
      return respond::adversary_best_response(graph, params, defender);
    });
    Json doc{{"format", "dift-best-response/1"},
             {"side", "adversary"},
             {"drop", br.drop},
             {"walk", br.walk},
             {"target_stage", br.target_stage},
             {"survival", br.survival},
             {"value", br.value},
             {"evaluated_U_A", br.evaluated_U_A}};
    out = stage("write-output", [&] {
      return std::vector<fs::path>{
          write_file(config.out_dir, "best_response.json", doc.dump(2) + "\n"),
          write_file(config.out_dir, "adversary.json",
                     game::serialize_adversary(br.strategy))};
    });
  } else {
    const game::AdversaryStrategy adversary = stage("load-strategy", [&] {
      return game::parse_adversary(read_file(config.strategy), graph);
    });
    std::vector<int> levels = config.levels;
    if (levels.empty()) levels = {1};
    if (levels.size() == 1) levels.assign(2 + graph.num_nodes(), levels[0]);
    respond::GreedyOptions options;
    options.seed = config.seed;
    const respond::DiscretizedDefenderSet br = stage("best-response", [&] {
      return respond::defender_best_response_greedy(graph, params, adversary,
                                                    levels, options);
    });
    const auto selected = std::count(br.selected.begin(), br.selected.end(), 1);
    Json doc{{"format", "dift-best-response/1"},
             {"side", "defender"},
             {"levels", levels},
             {"ground_set", br.ground.size()},
             {"selected", selected},
             {"value", br.value},
             {"evaluations", br.evaluations}};
    out = stage("write-output", [&] {
      return std::vector<fs::path>{
          write_file(config.out_dir, "best_response.json", doc.dump(2) + "\n"),
          write_file(config.out_dir, "defender.json",
                     game::serialize_defender(br.strategy))};
    });
  }
  out.push_back(
      stage("write-output", [&] { return write_manifest(config, &params, out); }));
  return out;
}

std::vector<fs::path> cmd_simulate(const RunConfig& config) {
  if (config.trials <= 0) throw UsageError("--trials must be positive");
  if (config.workers <= 0) throw UsageError("--workers must be positive");
  if (config.estimator != "monte-carlo" && config.estimator != "exact" &&
      config.estimator != "markov") {
    throw UsageError("--estimator must be monte-carlo, exact or markov");
  }
  if (config.defender.empty() || config.adversary.empty()) {
    throw UsageError("--defender and --adversary are required");
  }
  const InformationFlowGraph graph = load_graph(config);
  const GameParams params =
      stage("params", [&] { return resolve_params(graph, config.params); });
  const game::DefenderStrategy defender = stage("load-strategy", [&] {
    return game::parse_defender(read_file(config.defender), graph.num_nodes());
  });
  const game::AdversaryStrategy adversary = stage("load-strategy", [&] {
    return game::parse_adversary(read_file(config.adversary), graph);
  });
  const game::UtilityReport report = stage("simulate", [&] {
    if (config.estimator == "exact") {
      return game::evaluate_exact(graph, params, defender, adversary);
    }
    if (config.estimator == "markov") {
      return game::evaluate_markov(graph, params, defender, adversary);
    }
    game::MonteCarloOptions options;
    options.n_trials = config.trials;
    options.seed = config.seed;
    options.workers = config.workers;
    return game::evaluate_monte_carlo(graph, params, defender, adversary,
                                      options);
  });
  const std::string csv = game::csv_header(graph.num_stages()) + "\n" +
                          game::csv_row(report) + "\n";
  std::vector<fs::path> out = stage("write-output", [&] {
    return std::vector<fs::path>{write_file(config.out_dir, "utility.csv", csv)};
  });
  out.push_back(
      stage("write-output", [&] { return write_manifest(config, &params, out); }));
  return out;
}

std::vector<SweepRow> sweep_cost(const InformationFlowGraph& graph,
                                 const GameParams& params,
                                 const std::vector<double>& factors,
                                 const learn::LearnerConfig& learner,
                                 int replications, std::int64_t trials,
                                 std::uint64_t seed) {
  if (replications < 1) throw ParamError("sweep needs replications >= 1");
  std::vector<double> sorted = factors;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  const learn::PlayerRoster roster = learn::build_roster(graph);
  std::vector<SweepRow> rows;
  for (double factor : sorted) {
    const GameParams scaled = params.scaled_costs(factor);
    double sum_D = 0.0, sum_A = 0.0, sq_D = 0.0, sq_A = 0.0;
    for (int rep = 0; rep < replications; ++rep) {
      learn::LearnerConfig config = learner;
      config.seed = seed + static_cast<std::uint64_t>(rep);
      const learn::LearnResult result = learn::run(graph, scaled, config);
      const auto [defender, adversary] = learn::strategies_from_distributions(
          graph, roster, result.distributions);
      game::MonteCarloOptions options;
      options.n_trials = trials;
      options.seed = config.seed;
      const game::UtilityReport report = game::evaluate_monte_carlo(
          graph, scaled, defender, adversary, options);
      sum_D += report.U_D;
      sum_A += report.U_A;
      sq_D += report.U_D * report.U_D;
      sq_A += report.U_A * report.U_A;
    }
    const double r = replications;
    SweepRow row{factor, sum_D / r, sum_A / r, 0.0, 0.0};
    if (replications > 1) {
      auto se = [r](double sum, double sq) {
        const double mean = sum / r;
        return std::sqrt(std::max(0.0, sq / r - mean * mean) / (r - 1.0));
      };
      row.se_U_D = se(sum_D, sq_D);
      row.se_U_A = se(sum_A, sq_A);
    }
    rows.push_back(row);
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string csv = "factor,mean_U_D,mean_U_A,se_U_D,se_U_A\n";
  for (const SweepRow& r : rows) {
    csv += format_number(r.factor) + "," + format_number(r.mean_U_D) + "," +
           format_number(r.mean_U_A) + "," + format_number(r.se_U_D) + "," +
           format_number(r.se_U_A) + "\n";
  }
  return csv;
}

std::vector<fs::path> cmd_sweep_cost(const RunConfig& config) {
  if (config.factors.empty()) throw UsageError("--factors needs a value");
  for (double f : config.factors) {
    if (!(f >= 0.0) || !std::isfinite(f)) {
      throw UsageError("cost factors must be finite and nonnegative");
    }
  }
  if (config.trials <= 0) throw UsageError("--trials must be positive");
  const InformationFlowGraph graph = load_graph(config);
  const GameParams params =
      stage("params", [&] { return resolve_params(graph, config.params); });
  const std::vector<SweepRow> rows = stage("sweep-cost", [&] {
    return sweep_cost(graph, params, config.factors, config.sweep_learner,
                      config.replications, config.trials, config.seed);
  });
  std::vector<fs::path> out = stage("write-output", [&] {
    return std::vector<fs::path>{
        write_file(config.out_dir, "sweep.csv", sweep_csv(rows))};
  });
  out.push_back(
      stage("write-output", [&] { return write_manifest(config, &params, out); }));
  return out;
}

}  // namespace dift::cli
