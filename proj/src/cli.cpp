#include "subshrink/cli.hpp"

#include "subshrink/binary.hpp"
#include "subshrink/error.hpp"
#include "subshrink/estimators.hpp"
#include "subshrink/evaluation.hpp"
#include "subshrink/forest_plot.hpp"
#include "subshrink/parallel.hpp"
#include "subshrink/report.hpp"
#include "subshrink/simulation.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace subshrink {

using nlohmann::json;
namespace fs = std::filesystem;

#define SUBSHRINK_FIELDS(X)                                                   \
  X(data) X(schema) X(estimators) X(outcome) X(truth) X(scenario)             \
  X(runs) X(n) X(events) X(seed) X(jobs) X(n_large) X(reps) X(limit)          \
  X(lambda) X(cv_folds) X(n_lambda) X(chains) X(warmup) X(draws)              \
  X(target_accept) X(leapfrog) X(hs_global_scale) X(hs_slab_df)              \
  X(hs_slab_scale) X(spline_degree) X(ahr_draws) X(literal_scenario45_formula)

json RunConfig::to_json() const {
  json j;
  // The output directory is not part of the configuration so that identical
  // runs written to different places produce identical files.
  j["command"] = command;
#define X(f) j[#f] = f;
  SUBSHRINK_FIELDS(X)
#undef X
  return j;
}

void RunConfig::merge_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config file: expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "out") {
      out = value.get<std::string>();
      continue;
    }
    bool known = key == "command";
    try {
#define X(f)                              \
  if (key == #f) {                        \
    f = value.get<decltype(f)>();         \
    known = true;                         \
  }
      SUBSHRINK_FIELDS(X)
#undef X
    } catch (const json::exception& e) {
      throw ConfigError("config file: bad value for '" + key + "': " + e.what());
    }
    if (!known) throw ConfigError("config file: unknown key '" + key + "'");
  }
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
}

void validate(const RunConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(c.jobs >= 1, "--jobs must be >= 1");
  require(c.runs >= 1, "--runs must be >= 1");
  require(c.n >= 2, "--n must be >= 2");
  require(c.events >= 1 && c.events <= c.n, "--events must be in [1, n]");
  require(c.scenario >= 1 && c.scenario <= 6, "--scenario must be in 1..6");
  require(c.outcome == "survival" || c.outcome == "binary",
          "--outcome must be survival or binary");
  require(c.cv_folds >= 2, "--cv-folds must be >= 2");
  require(c.n_lambda >= 1, "--n-lambda must be >= 1");
  require(c.chains >= 1 && c.draws >= 1 && c.warmup >= 0,
          "invalid MCMC sizes");
  require(c.target_accept > 0.0 && c.target_accept < 1.0,
          "--target-accept must be in (0, 1)");
  require(c.leapfrog >= 1, "--leapfrog must be >= 1");
  require(c.ahr_draws >= 1, "--ahr-draws must be >= 1");
  require(c.reps >= 1 && c.n_large >= 10000, "oracle needs reps >= 1, n_large >= 1e4");
}

EstimatorConfig estimator_config(const RunConfig& c, std::uint64_t run_index) {
  EstimatorConfig e;
  e.seed = c.seed;
  e.run_index = run_index;
  e.penalized.cv.n_folds = c.cv_folds;
  e.penalized.cv.n_lambda = c.n_lambda;
  if (c.lambda >= 0.0) e.penalized.lambda = c.lambda;
  if (c.limit > 0.0) {
    e.penalized.limit = c.limit;
    e.bayes.limit = c.limit;
  }
  e.bayes.hmc.chains = c.chains;
  e.bayes.hmc.warmup = c.warmup;
  e.bayes.hmc.draws = c.draws;
  e.bayes.hmc.target_accept = c.target_accept;
  e.bayes.hmc.leapfrog = c.leapfrog;
  e.bayes.hmc.jobs = c.jobs;
  e.bayes.prior.global_scale = c.hs_global_scale;
  e.bayes.prior.slab_df = c.hs_slab_df;
  e.bayes.prior.slab_scale = c.hs_slab_scale;
  e.bayes.spline_degree = c.spline_degree;
  e.bayes.ahr_draws = c.ahr_draws;
  return e;
}

std::vector<EstimatorOutcome> run_all(const std::vector<EstimatorTag>& tags,
                                      const TrialDataset& data,
                                      const SubgroupSchema& schema,
                                      const EstimatorConfig& config) {
  std::vector<EstimatorOutcome> out;
  for (auto tag : tags) {
    EstimatorOutcome o;
    o.tag = tag;
    try {
      o.result = run_estimator(tag, data, schema, config);
    } catch (const std::exception& e) {
      o.error = e.what();
    }
    out.push_back(std::move(o));
  }
  return out;
}

const char* series_color(EstimatorTag tag) {
  switch (tag) {
    case EstimatorTag::naive: return "#1b1b1b";
    case EstimatorTag::population: return "#777777";
    case EstimatorTag::lasso: return "#1f77b4";
    case EstimatorTag::ridge: return "#2ca02c";
    case EstimatorTag::horseshoe: return "#d62728";
    case EstimatorTag::model_averaging: return "#9467bd";
  }
  return "#000000";
}

std::string forest_for(const std::vector<EstimatorOutcome>& outcomes,
                       const TrialDataset& data, const SubgroupSchema& schema) {
  ForestPlot plot;
  plot.title = "Subgroup treatment effects";
  plot.rows = schema.subgroup_labels();
  const auto pop = estimate_population(data, schema);
  if (!pop.subgroups.empty() && !pop.subgroups[0].missing)
    plot.reference = std::exp(pop.subgroups[0].log_effect);
  for (const auto& o : outcomes) {
    if (!o.result || o.tag == EstimatorTag::population) continue;
    ForestSeries s;
    s.name = to_string(o.tag);
    s.color = series_color(o.tag);
    for (const auto& e : o.result->subgroups) {
      ForestPoint p;
      p.missing = e.missing;
      if (!e.missing) {
        p.effect = std::exp(e.log_effect);
        if (e.interval)
          p.interval = std::make_pair(std::exp(e.interval->first),
                                      std::exp(e.interval->second));
      }
      s.points.push_back(p);
    }
    plot.series.push_back(std::move(s));
  }
  return render_forest_svg(plot);
}

int cmd_analyze(const RunConfig& c, std::ostream& out) {
  if (c.data.empty() || c.schema.empty())
    throw ConfigError("analyze needs --data and --schema");
  const auto schema = SubgroupSchema::from_json(read_file(c.schema));
  const auto text = read_file(c.data);
  fs::create_directories(c.out);
  const json config = c.to_json();
  if (c.outcome == "binary") {
    const auto data = parse_binary_dataset(text, schema);
    const auto design = build_design(data.covariates(), data.treatment(), schema);
    std::vector<BinaryOutcome> outcomes;
    auto add = [&](const std::string& name, PenaltyKind kind, double lambda) {
      BinaryOutcome o;
      o.estimator = name;
      try {
        const auto fit = fit_global_logistic(design, schema, data, kind, lambda);
        o.effects = standardize_binary(fit, design, data, schema);
        o.equivalence_discrepancy = check_equivalence(fit, design, data, schema);
      } catch (const std::exception& e) {
        o.error = e.what();
      }
      outcomes.push_back(std::move(o));
    };
    add("global", PenaltyKind::none, 0.0);
    for (auto tag : parse_estimator_list(c.estimators)) {
      if (tag != EstimatorTag::lasso && tag != EstimatorTag::ridge) continue;
      if (c.lambda < 0.0)
        throw ConfigError("binary lasso/ridge needs --lambda");
      add(to_string(tag),
          tag == EstimatorTag::lasso ? PenaltyKind::lasso : PenaltyKind::ridge,
          c.lambda);
    }
    write_file(fs::path(c.out) / "report.json",
               binary_report_json(data, schema, outcomes, config).dump(2) + "\n");
    out << "wrote " << (fs::path(c.out) / "report.json").string() << "\n";
    return 0;
  }
  const auto data = parse_dataset(text, schema);
  const auto tags = parse_estimator_list(c.estimators);
  const auto outcomes = run_all(tags, data, schema, estimator_config(c, 0));
  write_file(fs::path(c.out) / "report.json",
             analysis_report_json(data, schema, outcomes, config).dump(2) + "\n");
  write_file(fs::path(c.out) / "forest.svg", forest_for(outcomes, data, schema));
  for (const auto& o : outcomes)
    if (!o.result) out << "estimator " << to_string(o.tag) << " failed: " << o.error << "\n";
  out << "wrote " << (fs::path(c.out) / "report.json").string() << " and forest.svg\n";
  return 0;
}

std::string run_file(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "run_%04d.csv", index + 1);
  return buf;
}

int cmd_simulate(const RunConfig& c, std::ostream& out) {
  const auto spec = scenario_coeffs(c.scenario, kScenarioMasterSeed,
                                    c.literal_scenario45_formula);
  const auto schema = simulation_schema();
  fs::create_directories(c.out);
  const json config = c.to_json();
  std::vector<json> entries(static_cast<std::size_t>(c.runs));
  parallel_for(entries.size(), c.jobs, [&](std::size_t r) {
    const auto seed = derive_seed(c.seed, r, "simulate");
    const auto data = simulate_trial(spec, static_cast<std::size_t>(c.n),
                                     static_cast<std::size_t>(c.events), seed);
    const auto file = run_file(static_cast<int>(r));
    write_file(fs::path(c.out) / file, serialize_dataset(data, schema));
    entries[r] = {{"index", r},       {"seed", seed},
                  {"file", file},     {"n", data.size()},
                  {"events", data.num_events()}};
  });
  write_file(fs::path(c.out) / "schema.json", schema.to_json());
  json manifest;
  manifest["schema_version"] = kSchemaVersion;
  manifest["command"] = "simulate";
  manifest["config_hash"] = config_hash(config);
  manifest["seed"] = c.seed;
  manifest["config"] = config;
  manifest["scenario"] = c.scenario;
  manifest["scenario_master_seed"] = kScenarioMasterSeed;
  manifest["interaction_coefficients"] =
      std::vector<double>(spec.beta.data(), spec.beta.data() + spec.beta.size());
  manifest["schema_file"] = "schema.json";
  manifest["runs"] = entries;
  write_file(fs::path(c.out) / "manifest.json", manifest.dump(2) + "\n");
  out << "wrote " << c.runs << " datasets to " << c.out << "\n";
  return 0;
}

int cmd_oracle(const RunConfig& c, std::ostream& out) {
  const auto spec = scenario_coeffs(c.scenario, kScenarioMasterSeed,
                                    c.literal_scenario45_formula);
  const auto table = true_ahr_oracle(spec, static_cast<std::size_t>(c.n_large),
                                     c.reps, c.seed, c.jobs);
  fs::create_directories(c.out);
  const auto path = fs::path(c.out) / "oracle.json";
  write_file(path, oracle_json(table, c.to_json()).dump(2) + "\n");
  out << "scenario " << c.scenario << " overall AHR " << table.overall()
      << "; wrote " << path.string() << "\n";
  return 0;
}

int cmd_report(const RunConfig& c, std::ostream& out) {
  if (c.data.empty()) throw ConfigError("report needs --data <simulate output>");
  const fs::path dir(c.data);
  const json manifest = json::parse(read_file((dir / "manifest.json").string()));
  const auto schema =
      SubgroupSchema::from_json(read_file((dir / "schema.json").string()));
  const int scenario = manifest.at("scenario").get<int>();
  TrueAhrTable truth;
  if (!c.truth.empty()) {
    truth = oracle_from_json(json::parse(read_file(c.truth)));
  } else {
    truth = true_ahr_oracle(scenario_coeffs(scenario), static_cast<std::size_t>(c.n_large),
                            c.reps, c.seed, c.jobs);
  }
  if (truth.subgroup_log.size() != schema.num_subgroups())
    throw DataError("report: truth table does not match the schema");
  const auto tags = parse_estimator_list(c.estimators);
  const auto& entries = manifest.at("runs");
  std::vector<std::vector<EstimatorResult>> per_tag(
      tags.size(), std::vector<EstimatorResult>(entries.size()));
  auto one_run = [&](std::size_t r) {
    const auto file = entries[r].at("file").get<std::string>();
    const auto data = parse_dataset(read_file((dir / file).string()), schema);
    auto cfg = estimator_config(c, r);
    cfg.bayes.hmc.jobs = 1;
    for (std::size_t t = 0; t < tags.size(); ++t) {
      try {
        per_tag[t][r] = run_estimator(tags[t], data, schema, cfg);
      } catch (const NumericalError& e) {
        // The whole run counts as missing for this estimator.
        per_tag[t][r].tag = tags[t];
        for (std::size_t k = 0; k < schema.num_subgroups(); ++k) {
          SubgroupEstimate s;
          s.subgroup = k;
          s.missing = true;
          s.note = e.what();
          per_tag[t][r].subgroups.push_back(s);
        }
      }
    }
  };
  parallel_for(entries.size(), c.jobs, one_run);
  std::vector<EstimatorRuns> runs;
  for (std::size_t t = 0; t < tags.size(); ++t)
    runs.push_back(collect_runs(tags[t], per_tag[t], schema.num_subgroups()));
  Eigen::VectorXd truths = Eigen::Map<const Eigen::VectorXd>(
      truth.subgroup_log.data(), static_cast<Eigen::Index>(truth.subgroup_log.size()));
  std::optional<std::size_t> null_subgroup;
  if (scenario == 2) null_subgroup = schema.subgroup_index(3, 0);
  const auto report = evaluate(runs, truths, truth.overall_log, null_subgroup);
  json config = c.to_json();
  config["manifest_hash"] = manifest.at("config_hash");
  fs::create_directories(c.out);
  write_file(fs::path(c.out) / "eval_report.json",
             eval_report_json(report, schema.subgroup_labels(), config).dump(2) + "\n");
  write_file(fs::path(c.out) / "metrics.csv",
             eval_metrics_csv(report, schema.subgroup_labels()));
  for (const auto& e : report.estimators)
    out << to_string(e.tag) << ": overall RMSE " << e.overall.rmse << "\n";
  return 0;
}

void add_common(CLI::App* app, RunConfig& c) {
  app->add_option("--seed", c.seed, "master seed");
  app->add_option("--jobs", c.jobs, "worker threads");
  app->add_option("--out", c.out, "output directory");
  app->add_option("--config", "JSON config file (flags override it)");
}

void add_estimation(CLI::App* app, RunConfig& c) {
  app->add_option("--estimators", c.estimators,
                  "comma list of naive,population,lasso,ridge,horseshoe,avg");
  app->add_option("--limit", c.limit, "AHR integration limit (0: auto)");
  app->add_option("--lambda", c.lambda, "fixed penalty (skip CV)");
  app->add_option("--cv-folds", c.cv_folds);
  app->add_option("--n-lambda", c.n_lambda);
  app->add_option("--chains", c.chains);
  app->add_option("--warmup", c.warmup);
  app->add_option("--draws", c.draws);
  app->add_option("--target-accept", c.target_accept);
  app->add_option("--leapfrog", c.leapfrog);
  app->add_option("--hs-global-scale", c.hs_global_scale);
  app->add_option("--hs-slab-df", c.hs_slab_df);
  app->add_option("--hs-slab-scale", c.hs_slab_scale);
  app->add_option("--spline-degree", c.spline_degree);
  app->add_option("--ahr-draws", c.ahr_draws);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  RunConfig c;
  try {
    // A config file seeds the defaults so explicit flags win.
    for (int i = 1; i + 1 < argc; ++i)
      if (std::string(argv[i]) == "--config")
        c.merge_json(json::parse(read_file(argv[i + 1])));
    for (int i = 1; i < argc; ++i) {
      const std::string a = argv[i];
      if (a.rfind("--config=", 0) == 0)
        c.merge_json(json::parse(read_file(a.substr(9))));
    }
  } catch (const json::exception& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  }

  CLI::App app{"Shrinkage estimation of treatment effects in overlapping subgroups"};
  app.require_subcommand(1);
  auto* analyze = app.add_subcommand("analyze", "estimate subgroup effects for a dataset");
  analyze->add_option("--data", c.data, "dataset CSV");
  analyze->add_option("--schema", c.schema, "subgroup schema JSON");
  analyze->add_option("--outcome", c.outcome, "survival or binary");
  add_common(analyze, c);
  add_estimation(analyze, c);

  auto* simulate = app.add_subcommand("simulate", "simulate trial datasets");
  simulate->add_option("--scenario", c.scenario);
  simulate->add_option("--runs", c.runs);
  simulate->add_option("--n", c.n);
  simulate->add_option("--events", c.events);
  simulate->add_flag("--literal-scenario45-formula", c.literal_scenario45_formula);
  add_common(simulate, c);

  auto* oracle = app.add_subcommand("oracle", "true subgroup AHRs for a scenario");
  oracle->add_option("--scenario", c.scenario);
  oracle->add_option("--n-large", c.n_large);
  oracle->add_option("--reps", c.reps);
  oracle->add_flag("--literal-scenario45-formula", c.literal_scenario45_formula);
  add_common(oracle, c);

  auto* report = app.add_subcommand("report", "evaluate estimators on simulated runs");
  report->add_option("--data", c.data, "simulate output directory");
  report->add_option("--truth", c.truth, "oracle JSON (computed when absent)");
  report->add_option("--n-large", c.n_large);
  report->add_option("--reps", c.reps);
  add_common(report, c);
  add_estimation(report, c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    c.command = app.get_subcommands().front()->get_name();
    validate(c);
    if (c.command == "analyze") return cmd_analyze(c, out);
    if (c.command == "simulate") return cmd_simulate(c, out);
    if (c.command == "oracle") return cmd_oracle(c, out);
    return cmd_report(c, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace subshrink
