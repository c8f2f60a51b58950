#pragma once

#include "subshrink/binary.hpp"
#include "subshrink/estimators.hpp"
#include "subshrink/evaluation.hpp"
#include "subshrink/simulation.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace subshrink {

inline constexpr const char* kSchemaVersion = "1.0.0";

std::uint64_t fnv1a(std::string_view bytes);
// 16 hex digits of FNV-1a over the compact dump of `config`.
std::string config_hash(const nlohmann::json& config);

// Failed estimators carry an error message instead of estimates.
struct EstimatorOutcome {
  EstimatorTag tag = EstimatorTag::naive;
  std::optional<EstimatorResult> result;
  std::string error;
};

nlohmann::json analysis_report_json(const TrialDataset& dataset,
                                    const SubgroupSchema& schema,
                                    const std::vector<EstimatorOutcome>& outcomes,
                                    const nlohmann::json& config);

struct BinaryOutcome {
  std::string estimator;  // "global", "lasso", "ridge", "naive"
  std::vector<BinaryEffect> effects;
  std::optional<double> equivalence_discrepancy;
  std::string error;
};

nlohmann::json binary_report_json(const BinaryDataset& dataset,
                                  const SubgroupSchema& schema,
                                  const std::vector<BinaryOutcome>& outcomes,
                                  const nlohmann::json& config);

nlohmann::json oracle_json(const TrueAhrTable& table, const nlohmann::json& config);
TrueAhrTable oracle_from_json(const nlohmann::json& j);

nlohmann::json eval_report_json(const EvalReport& report,
                                const std::vector<std::string>& labels,
                                const nlohmann::json& config);
std::string eval_metrics_csv(const EvalReport& report,
                             const std::vector<std::string>& labels);

}  // namespace subshrink
