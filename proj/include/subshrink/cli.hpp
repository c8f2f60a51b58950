#pragma once

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>

namespace subshrink {

// Effective configuration of one CLI invocation. A JSON config file may set
// any field by name; explicit flags override it.
struct RunConfig {
  std::string command;
  std::string data;
  std::string schema;
  std::string estimators = "naive,population,lasso,ridge";
  std::string outcome = "survival";
  std::string truth;
  std::string out = "out";
  int scenario = 1;
  int runs = 100;
  int n = 1000;
  int events = 247;
  std::uint64_t seed = 1;
  int jobs = 1;
  int n_large = 200000;
  int reps = 3;
  double limit = 0.0;    // 0: largest uncensored event time
  double lambda = -1.0;  // < 0: cross-validation
  int cv_folds = 10;
  int n_lambda = 100;
  int chains = 4;
  int warmup = 1000;
  int draws = 1000;
  double target_accept = 0.8;
  int leapfrog = 32;
  double hs_global_scale = 1.0;
  double hs_slab_df = 4.0;
  double hs_slab_scale = 2.0;
  int spline_degree = 3;
  int ahr_draws = 400;
  bool literal_scenario45_formula = false;

  nlohmann::json to_json() const;
  void merge_json(const nlohmann::json& j);
};

// Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
// failure.
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

}  // namespace subshrink
