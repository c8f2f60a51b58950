#include "subshrink/cli.hpp"
#include "subshrink/forest_plot.hpp"
#include "subshrink/report.hpp"
#include "test_util.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <regex>
#include <sstream>

using namespace subshrink;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args, std::string* err_text = nullptr) {
  args.insert(args.begin(), "subshrink");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (err_text) *err_text = err.str();
  return code;
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("subshrink_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("forest axis ticks sit at log-proportional positions") {
  ForestPlot plot;
  plot.rows = {"a", "b"};
  plot.series.push_back({"naive", "#000", {{false, 0.6, std::make_pair(0.4, 0.9)},
                                          {false, 1.2, std::make_pair(0.8, 1.8)}}});
  plot.reference = 0.7;
  const auto axis = forest_axis(plot);
  CHECK(axis.ticks == std::vector<double>{0.25, 0.5, 1, 2});
  const auto svg = render_forest_svg(plot);
  const std::regex tick(R"re(<text class="tick" x="([0-9.]+)"[^>]*>([0-9.]+)</text>)re");
  std::vector<std::pair<double, double>> found;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), tick); it != std::sregex_iterator(); ++it)
    found.emplace_back(std::stod((*it)[2]), std::stod((*it)[1]));
  REQUIRE(found.size() == 4);
  const double unit = (found[3].second - found[0].second) / std::log(8.0);
  for (const auto& [value, x] : found)
    CHECK(x == doctest::Approx(found[0].second + unit * std::log(value / 0.25)).epsilon(1e-3));
  CHECK(svg.find("class=\"reference\"") != std::string::npos);
}

TEST_CASE("config hash is stable and sensitive") {
  nlohmann::json a = {{"seed", 1}, {"runs", 3}};
  nlohmann::json b = {{"runs", 3}, {"seed", 1}};
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  b["seed"] = 2;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("simulate is reproducible") {
  const auto a = scratch("sim_a"), b = scratch("sim_b");
  REQUIRE(run({"simulate", "--scenario", "1", "--runs", "3", "--seed", "7", "--out", a.string()}) == 0);
  REQUIRE(run({"simulate", "--scenario", "1", "--runs", "3", "--seed", "7", "--out", b.string()}) == 0);
  for (const char* f : {"run_0001.csv", "run_0002.csv", "run_0003.csv", "schema.json", "manifest.json"})
    CHECK(slurp(a / f) == slurp(b / f));
  CHECK(slurp(a / "run_0001.csv") != slurp(a / "run_0002.csv"));
}

TEST_CASE("analyze writes a deterministic report and forest plot") {
  const auto sim = scratch("an_sim");
  REQUIRE(run({"simulate", "--runs", "1", "--seed", "3", "--out", sim.string()}) == 0);
  const auto o1 = scratch("an_1"), o2 = scratch("an_2");
  for (const auto& o : {o1, o2})
    REQUIRE(run({"analyze", "--data", (sim / "run_0001.csv").string(), "--schema",
                 (sim / "schema.json").string(), "--estimators", "naive,lasso", "--out",
                 o.string()}) == 0);
  CHECK(slurp(o1 / "report.json") == slurp(o2 / "report.json"));
  const auto report = nlohmann::json::parse(slurp(o1 / "report.json"));
  CHECK(report["schema_version"] == "1.0.0");
  CHECK(report["estimators"].size() == 2);
  CHECK(report["estimators"][0]["estimates"].size() == 25);
  CHECK(slurp(o1 / "forest.svg").find("<svg") != std::string::npos);
}

TEST_CASE("config file values are overridden by flags") {
  const auto dir = scratch("cfg");
  fs::create_directories(dir);
  std::ofstream(dir / "c.json") << R"({"runs": 2, "seed": 5})";
  REQUIRE(run({"simulate", "--config", (dir / "c.json").string(), "--runs", "1", "--out",
               (dir / "out").string()}) == 0);
  const auto manifest = nlohmann::json::parse(slurp(dir / "out" / "manifest.json"));
  CHECK(manifest["runs"].size() == 1);
  CHECK(manifest["seed"] == 5);
}

TEST_CASE("exit codes") {
  std::string err;
  CHECK(run({"simulate", "--bogus"}, &err) == 2);
  CHECK(run({"simulate", "--scenario", "9", "--out", scratch("bad").string()}, &err) == 2);
  CHECK(err.find("scenario") != std::string::npos);
  CHECK(run({"analyze", "--data", "/nonexistent.csv", "--schema", "/nonexistent.json"}) == 2);

  const auto dir = scratch("bad_data");
  fs::create_directories(dir);
  std::ofstream(dir / "s.json") << R"({"variables":[{"name":"V1","levels":["a","b"]}]})";
  std::ofstream(dir / "d.csv") << "time,event,treatment,V1\n1,1,0,a\n-2,1,1,b\n";
  CHECK(run({"analyze", "--data", (dir / "d.csv").string(), "--schema",
             (dir / "s.json").string(), "--out", (dir / "o").string()}, &err) == 3);
  CHECK(err.find("row 2") != std::string::npos);
}

}
