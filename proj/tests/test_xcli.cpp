#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "centroidkit/error.hpp"
#include "centroidkit/experiments.hpp"

using namespace centroidkit;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("centroidkit_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " \"" CENTROIDKIT_CLI "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Json make_z2(double rel) {
  Json doc = Json::parse(R"({"seed": 5, "distributions": [{"family": "ExponentialProduct"}],
                            "grid": {"n": [4]}, "budgets": {"outer": 200}})");
  doc["tolerances"] = Json{{"rel", rel}};
  return doc;
}

}  // namespace

TEST_CASE("experiment registry") {
  const auto& names = experiment_names();
  CHECK(names.size() == 14);
  CHECK(std::find(names.begin(), names.end(), "sudakov-sparse") != names.end());
  CHECK_THROWS_AS(run(make_config(Json{{"seed", 1}}, "no-such-experiment", std::nullopt, 1)), ConfigError);
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(make_config(Json::object(), "verify-z2", std::nullopt, 1), ConfigError);
  CHECK(make_config(Json::object(), "verify-z2", 9, 1).seed == 9);
  CHECK(make_config(Json{{"seed", 3}}, "verify-z2", 9, 1).seed == 9);
  CHECK_THROWS_AS(make_config(Json{{"seed", 3}, {"experiment", "hitczenko"}}, "verify-z2", std::nullopt, 1),
                  ConfigError);

  CHECK_THROWS_AS(spec_from_json(Json{{"family", "Cauchy"}, {"n", 3}}), ConfigError);
  CHECK_THROWS_AS(spec_from_json(Json{{"family", "GaussianIsotropic"}}), ConfigError);
  CHECK(spec_from_json(Json{{"family", "SparseIsotropic"}, {"n", 5}}) == DistributionSpec::sparse(5));

  Json bad = make_z2(0.25);
  bad["budgets"]["outer"] = 10;
  CHECK_THROWS_AS(run(make_config(bad, "verify-z2", std::nullopt, 1)), ConfigError);
  Json wrong_type = make_z2(0.25);
  wrong_type["grid"]["n"] = "sixteen";
  CHECK_THROWS_AS(run(make_config(wrong_type, "verify-z2", std::nullopt, 1)), ConfigError);
}

TEST_CASE("shipped configs parse") {
  int seen = 0;
  for (const auto& entry : fs::directory_iterator(CENTROIDKIT_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    const std::string name = entry.path().stem().string();
    INFO(name);
    const auto cfg = load_config(entry.path(), name, std::nullopt, 1);
    CHECK(cfg.experiment == name);
    ++seen;
  }
  CHECK(seen == 14);
}

TEST_CASE("replay determinism across runs and jobs") {
  const auto a = run(make_config(make_z2(0.25), "verify-z2", std::nullopt, 1));
  const auto b = run(make_config(make_z2(0.25), "verify-z2", std::nullopt, 3));
  CHECK(a.passed());
  CHECK(a.to_json().dump(2) == b.to_json().dump(2));

  const auto hz = load_config(fs::path(CENTROIDKIT_CONFIG_DIR) / "hitczenko.json", "hitczenko", std::nullopt, 1);
  auto hz2 = hz;
  hz2.jobs = 4;
  CHECK(run(hz).to_json().dump() == run(hz2).to_json().dump());

  // The embedded config replays to the same report.
  const Json echoed = a.to_json()["config"];
  const auto c = run(make_config(echoed, "verify-z2", std::nullopt, 2));
  CHECK(c.to_json().dump() == a.to_json().dump());
}

TEST_CASE("report files") {
  const auto dir = scratch("report");
  const auto rep = run(make_config(make_z2(0.25), "verify-z2", std::nullopt, 1));
  write_report(rep, dir);
  emit_plots(rep, dir);
  CHECK(fs::exists(dir / "report.json"));
  CHECK(fs::exists(dir / "timing.json"));
  CHECK(slurp(dir / "report.json") == rep.to_json().dump(2) + "\n");
  CHECK(slurp(dir / "report.json").find("wall") == std::string::npos);
  for (const auto& t : rep.tables) CHECK(slurp(dir / "tables" / (t.name() + ".csv")) == t.to_csv());

  ExperimentReport empty;
  empty.experiment = "empty";
  const auto edir = scratch("empty");
  emit_plots(empty, edir);
  CHECK(fs::is_empty(edir));
}

TEST_CASE("tables and svg") {
  Table t("demo", {"name", "value", "flag"});
  t.add({"a,b", 0.5, true});
  t.add({std::string("plain"), 3, false});
  CHECK(t.to_csv() == "name,value,flag\n\"a,b\",0.5,true\nplain,3,false\n");
  const auto col = t.numeric_column("value");
  CHECK(col[0] == 0.5);
  CHECK(col[1] == 3.0);
  CHECK_THROWS(t.add({1.0}));

  Plot plot;
  plot.title = "ratio";
  plot.log_x = true;
  plot.series.push_back({"s", {1.0, 2.0, 4.0, -1.0}, {0.5, NAN, 0.7, 0.8}, true, false});
  const auto svg = render_svg(plot);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg == render_svg(plot));
  CHECK(svg.find("nan") == std::string::npos);
  CHECK(render_svg(Plot{}).find("<svg") != std::string::npos);
}

TEST_CASE("command line exit codes") {
  const auto dir = scratch("cli");
  const fs::path good = dir / "z2.json";
  const fs::path failing = dir / "z2_strict.json";
  const fs::path broken = dir / "broken.json";
  std::ofstream(good) << make_z2(0.25).dump();
  std::ofstream(failing) << make_z2(1e-12).dump();
  std::ofstream(broken) << "{ \"seed\": ";
  const std::string out = " --out \"" + (dir / "out").string() + "\"";

  CHECK(run_cli("verify-z2 --config \"" + good.string() + "\"" + out) == 0);
  CHECK(fs::exists(dir / "out" / "report.json"));
  CHECK(run_cli("verify-z2 --config \"" + failing.string() + "\"" + out) == 1);
  CHECK(run_cli("verify-z2 --config \"" + broken.string() + "\"" + out) == 2);
  CHECK(run_cli("verify-z2 --config \"" + (dir / "missing.json").string() + "\"" + out) == 2);
  CHECK(run_cli("no-such --config \"" + good.string() + "\"" + out) == 2);
  CHECK(run_cli("verify-z2 --config \"" + good.string() + "\" --jobs 0" + out) == 2);
  CHECK(run_cli("verify-z2 --config \"" + good.string() + "\"" + out, "CENTROIDKIT_JOBS=abc") == 2);
  CHECK(run_cli("verify-z2 --config \"" + good.string() + "\"" + out, "CENTROIDKIT_JOBS=2") == 0);
  CHECK(run_cli("verify-z2 --config \"" + good.string() + "\" --seed 77" + out) == 0);
  CHECK(slurp(dir / "out" / "report.json").find("77") != std::string::npos);
}
