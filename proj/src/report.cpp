#include "subshrink/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace subshrink {

using nlohmann::json;

std::uint64_t fnv1a(std::string_view bytes) { return tag_hash(bytes); }

std::string config_hash(const json& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(config.dump())));
  return buf;
}

namespace {

json header(const std::string& command, const json& config) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = command;
  j["config_hash"] = config_hash(config);
  j["seed"] = config.value("seed", std::uint64_t{0});
  j["config"] = config;
  return j;
}

json number_or_null(double v) {
  return std::isfinite(v) ? json(v) : json(nullptr);
}

}  // namespace

json analysis_report_json(const TrialDataset& dataset,
                          const SubgroupSchema& schema,
                          const std::vector<EstimatorOutcome>& outcomes,
                          const json& config) {
  json j = header("analyze", config);
  j["outcome"] = "survival";
  j["n"] = dataset.size();
  j["events"] = dataset.num_events();
  const auto members = subgroup_members(dataset, schema);
  std::vector<std::size_t> events(members.size(), 0);
  json subgroups = json::array();
  for (std::size_t k = 0; k < members.size(); ++k) {
    for (auto i : members[k]) events[k] += dataset.event()[i] != 0;
    subgroups.push_back({{"id", k},
                         {"label", schema.subgroup_label(k)},
                         {"n", members[k].size()},
                         {"events", events[k]}});
  }
  j["subgroups"] = subgroups;
  json ests = json::array();
  for (const auto& o : outcomes) {
    json e;
    e["estimator"] = to_string(o.tag);
    if (!o.result) {
      e["status"] = "failed";
      e["error"] = o.error;
      e["estimates"] = json::array();
      ests.push_back(e);
      continue;
    }
    const auto& r = *o.result;
    e["status"] = "ok";
    json meta = json::object();
    if (r.limit > 0.0) meta["ahr_limit"] = r.limit;
    if (r.lambda) meta["lambda"] = *r.lambda;
    if (r.cv) {
      meta["lambda_max"] = r.cv->lambda_max;
      meta["cv_selection_rule"] = r.cv->selection_rule;
      meta["cv_points"] = r.cv->path.size();
    }
    if (r.iterations > 0) meta["iterations"] = r.iterations;
    if (r.mcmc) {
      meta["max_rhat_main"] = r.mcmc->max_rhat_main;
      meta["max_rhat"] = r.mcmc->max_rhat;
      meta["divergences"] = r.mcmc->divergences;
      meta["mean_accept"] = r.mcmc->mean_accept;
      meta["rhat_gate_passed"] = r.mcmc->rhat_gate_passed;
      meta["ahr_draws"] = r.mcmc->ahr_draws;
      meta["ahr_grid"] = "uniform";
    }
    if (!r.model_weights.empty()) meta["bic_weights"] = r.model_weights;
    meta["missing"] = r.missing_count();
    meta["warnings"] = r.warnings;
    meta["effect_measure"] =
        r.tag == EstimatorTag::naive || r.tag == EstimatorTag::population ||
                r.tag == EstimatorTag::model_averaging
            ? "hazard_ratio"
            : "average_hazard_ratio";
    e["metadata"] = meta;
    json list = json::array();
    for (const auto& s : r.subgroups) {
      json x;
      x["subgroup"] = s.subgroup;
      x["label"] = schema.subgroup_label(s.subgroup);
      x["n"] = members[s.subgroup].size();
      x["events"] = events[s.subgroup];
      x["missing"] = s.missing;
      if (s.missing) {
        x["effect"] = nullptr;
        x["log_effect"] = nullptr;
        x["interval"] = nullptr;
        x["note"] = s.note;
      } else {
        x["effect"] = std::exp(s.log_effect);
        x["log_effect"] = s.log_effect;
        x["interval"] = s.interval
                            ? json::array({std::exp(s.interval->first),
                                           std::exp(s.interval->second)})
                            : json(nullptr);
      }
      x["interval_kind"] = to_string(s.interval_kind);
      list.push_back(x);
    }
    e["estimates"] = list;
    ests.push_back(e);
  }
  j["estimators"] = ests;
  return j;
}

json binary_report_json(const BinaryDataset& dataset,
                        const SubgroupSchema& schema,
                        const std::vector<BinaryOutcome>& outcomes,
                        const json& config) {
  json j = header("analyze", config);
  j["outcome"] = "binary";
  j["n"] = dataset.size();
  j["events"] = std::count(dataset.outcome().begin(), dataset.outcome().end(), 1);
  json ests = json::array();
  for (const auto& o : outcomes) {
    json e;
    e["estimator"] = o.estimator;
    e["status"] = o.error.empty() ? "ok" : "failed";
    if (!o.error.empty()) e["error"] = o.error;
    if (o.equivalence_discrepancy)
      e["equivalence_discrepancy"] = *o.equivalence_discrepancy;
    json list = json::array();
    for (const auto& b : o.effects) {
      list.push_back({{"subgroup", b.subgroup},
                      {"label", schema.subgroup_label(b.subgroup)},
                      {"p_control", b.p_control},
                      {"p_intervention", b.p_intervention},
                      {"risk_difference", b.risk_difference},
                      {"odds_ratio", b.odds_ratio ? json(*b.odds_ratio) : json(nullptr)},
                      {"risk_ratio", b.risk_ratio ? json(*b.risk_ratio) : json(nullptr)}});
    }
    e["estimates"] = list;
    ests.push_back(e);
  }
  j["estimators"] = ests;
  return j;
}

json oracle_json(const TrueAhrTable& t, const json& config) {
  json j = header("oracle", config);
  j["scenario"] = t.scenario;
  j["n_large"] = t.n_large;
  j["repetitions"] = t.repetitions;
  j["quantile"] = t.quantile;
  j["overall_ahr"] = t.overall();
  j["overall_log_ahr"] = t.overall_log;
  json sg = json::array();
  for (std::size_t k = 0; k < t.subgroup_log.size(); ++k)
    sg.push_back({{"label", t.labels[k]},
                  {"ahr", t.subgroup(k)},
                  {"log_ahr", t.subgroup_log[k]}});
  j["subgroups"] = sg;
  return j;
}

TrueAhrTable oracle_from_json(const json& j) {
  TrueAhrTable t;
  t.scenario = j.at("scenario").get<int>();
  t.n_large = j.at("n_large").get<std::size_t>();
  t.repetitions = j.at("repetitions").get<int>();
  t.quantile = j.at("quantile").get<double>();
  t.overall_log = j.at("overall_log_ahr").get<double>();
  for (const auto& s : j.at("subgroups")) {
    t.labels.push_back(s.at("label").get<std::string>());
    t.subgroup_log.push_back(s.at("log_ahr").get<double>());
  }
  return t;
}

json eval_report_json(const EvalReport& report,
                      const std::vector<std::string>& labels,
                      const json& config) {
  json j = header("report", config);
  j["n_sim"] = report.n_sim;
  j["overall_truth_log"] = report.overall_truth;
  json truths = json::array();
  for (Eigen::Index k = 0; k < report.truths.size(); ++k)
    truths.push_back({{"label", labels[static_cast<std::size_t>(k)]},
                      {"log_ahr", report.truths(k)},
                      {"heterogeneous", static_cast<bool>(report.heterogeneous[static_cast<std::size_t>(k)])}});
  j["truths"] = truths;
  if (report.null_subgroup)
    j["null_subgroup"] = labels[*report.null_subgroup];
  json ests = json::array();
  for (const auto& e : report.estimators) {
    json x;
    x["estimator"] = to_string(e.tag);
    x["overall_rmse"] = e.overall.rmse;
    x["missing"] = e.overall.missing;
    if (e.identification_max)
      x["identification"] = {{"weakest_effect", *e.identification_max},
                             {"strongest_effect", *e.identification_min}};
    json sg = json::array();
    for (std::size_t k = 0; k < e.subgroups.size(); ++k) {
      const auto& m = e.subgroups[k];
      sg.push_back({{"label", labels[k]},
                    {"rmse", number_or_null(m.rmse)},
                    {"bias", number_or_null(m.bias)},
                    {"coverage", m.coverage ? json(*m.coverage) : json(nullptr)},
                    {"missing", m.missing}});
    }
    x["subgroups"] = sg;
    ests.push_back(x);
  }
  j["estimators"] = ests;
  j["notes"] = json::array(
      {"effects compared on the log scale; naive, population and model "
       "averaging estimate hazard ratios, truths are average hazard ratios",
       "identification.weakest_effect: null subgroup has the largest log "
       "effect; strongest_effect: the smallest"});
  return j;
}

std::string eval_metrics_csv(const EvalReport& report,
                             const std::vector<std::string>& labels) {
  std::ostringstream csv;
  csv.precision(10);
  csv << "estimator,subgroup,truth_log_ahr,heterogeneous,rmse,bias,coverage,missing\n";
  for (const auto& e : report.estimators)
    for (std::size_t k = 0; k < e.subgroups.size(); ++k) {
      const auto& m = e.subgroups[k];
      csv << to_string(e.tag) << ',' << labels[k] << ','
          << report.truths(static_cast<Eigen::Index>(k)) << ','
          << (report.heterogeneous[k] ? 1 : 0) << ',' << m.rmse << ',' << m.bias
          << ',';
      if (m.coverage) csv << *m.coverage;
      csv << ',' << m.missing << '\n';
    }
  return csv.str();
}

}  // namespace subshrink
