#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <map>

#include "gainloss/experiments.hpp"
#include "gainloss/io.hpp"

using namespace gainloss;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("gainloss_exp_" + name);
  fs::remove_all(dir);
  return dir;
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file() || e.path().filename() == "run.log") continue;
    files[fs::relative(e.path(), root).string()] = io::read_file(e.path());
  }
  return files;
}

CovarianceRunOptions short_run(double t_end = 200) {
  CovarianceRunOptions o;
  o.t_end = t_end;
  o.dt_out = 1;
  return o;
}

}  // namespace

TEST_CASE("manifest parsing") {
  const json doc = json::parse(R"({
    "schema_version": 1, "output_dir": "x", "seed": 4,
    "scenarios": [{"name": "s", "kind": "stability_scan", "params": {"drive": 1}, "options": {"drives": [0, 10]}}]
  })");
  const auto m = parse_manifest(doc);
  CHECK(m.output_dir == "x");
  CHECK(m.seed == 4);
  REQUIRE(m.scenarios.size() == 1);
  CHECK(m.scenarios[0].kind == ScenarioKind::stability_scan);
  CHECK(parse_manifest(manifest_to_json(m)).scenarios[0].options == m.scenarios[0].options);

  CHECK_THROWS_AS(parse_manifest(json::parse(R"({"schema_version": 1, "scenarioz": []})")), ManifestError);
  CHECK_THROWS_AS(parse_manifest(json::parse(R"({"schema_version": 1, "scenarios": [{"name": "a", "kind": "nope"}]})")),
                  ManifestError);
  CHECK_THROWS_AS(
      parse_manifest(json::parse(R"({"schema_version": 1, "scenarios": [{"name": "a", "kind": "covariance", "extra": 1}]})")),
      ManifestError);
  CHECK_THROWS_AS(load_manifest("/nonexistent/manifest.json"), ManifestError);
  CHECK(scenario_kind_from_string("thermal_sweep") == ScenarioKind::thermal_sweep);
  CHECK(std::string(to_string(ScenarioKind::wigner_panel)) == "wigner_panel");
}

TEST_CASE("empty manifest runs successfully") {
  RunManifest m;
  const fs::path out = scratch("empty");
  RunOptions opt;
  opt.output_dir = out;
  const auto report = run(m, opt);
  CHECK(report.ok());
  CHECK(report.scenarios.empty());
  const auto doc = json::parse(io::read_file(out / "report.json"));
  CHECK(doc["log_base"] == "e");
  CHECK(doc["scenarios"].empty());
  CHECK(fs::exists(out / "run.log"));
}

TEST_CASE("invalid parameters fail the scenario by name") {
  RunManifest m;
  m.scenarios.push_back({"bad", ScenarioKind::stability_scan, json{{"kappa", -0.1}}, json{{"drives", {0}}}, ""});
  m.scenarios.push_back({"good", ScenarioKind::stability_scan, json::object(), json{{"drives", {0, 50}}}, ""});
  RunOptions opt;
  opt.output_dir = scratch("invalid");
  const auto report = run(m, opt);
  CHECK_FALSE(report.ok());
  REQUIRE(report.scenarios.size() == 2);
  CHECK(report.scenarios[0].name == "bad");
  CHECK_FALSE(report.scenarios[0].ok);
  CHECK(report.scenarios[0].error.find("kappa") != std::string::npos);
  CHECK(report.scenarios[1].ok);
  const auto doc = json::parse(io::read_file(*opt.output_dir / "report.json"));
  CHECK(doc["scenarios"][0]["status"] == "failed");
  CHECK(doc["scenarios"][1]["status"] == "ok");

  const auto problems = validate_manifest(m);
  REQUIRE(problems.size() == 1);
  CHECK(problems[0].scenario == "bad");
  CHECK(problems[0].field == "kappa");
  CHECK(problems[0].is_error);
}

TEST_CASE("unknown options and overrides are reported") {
  RunManifest m;
  m.scenarios.push_back({"s", ScenarioKind::stability_scan, json::object(), json{{"drives", {0}}, {"typo", 1}}, ""});
  RunOptions opt;
  opt.output_dir = scratch("typo");
  const auto report = run(m, opt);
  CHECK_FALSE(report.ok());
  CHECK(report.scenarios[0].error.find("typo") != std::string::npos);
  CHECK_THROWS_AS(scenario_params(m.scenarios[0], {"nope=1"}), std::invalid_argument);
  CHECK(scenario_params(m.scenarios[0], {"drive=7"}).drive == 7.0);
}

TEST_CASE("runs are byte-reproducible") {
  RunManifest m;
  m.scenarios.push_back({"cov", ScenarioKind::covariance, json::object(),
                         json{{"drives", {100, 450}}, {"t_end", 60}, {"dt_out", 2}}, ""});
  m.scenarios.push_back({"stab", ScenarioKind::stability_scan, json::object(),
                         json{{"drives", json{{"start", 0}, {"stop", 100}, {"step", 25}}}}, ""});
  m.scenarios.push_back({"cl", ScenarioKind::classical, json::object(),
                         json{{"drives", {100}}, {"t_end", 90}, {"window", 30}, {"dt_out", 0.5}}, ""});
  RunOptions a, b;
  a.output_dir = scratch("repro_a");
  b.output_dir = scratch("repro_b");
  a.workers = 1;
  b.workers = 3;
  REQUIRE(run(m, a).ok());
  REQUIRE(run(m, b).ok());
  const auto ta = read_tree(*a.output_dir), tb = read_tree(*b.output_dir);
  CHECK(ta.size() > 4);
  CHECK(ta == tb);
  const auto csv = io::parse_csv(ta.at("stab/stability.csv"));
  CHECK(csv.rows.size() == 5);
}

TEST_CASE("zero-interval counting") {
  CHECK(count_zero_intervals({}) == 0);
  CHECK(count_zero_intervals({0, 0, 0}) == 0);
  CHECK(count_zero_intervals({0, 0.1, 0.2}) == 0);
  CHECK(count_zero_intervals({0, 0.1, 0, 0, 0.3, 0}) == 2);
  CHECK(count_zero_intervals({0.1, 0, 0.1, 0, 0.1}) == 2);
}

TEST_CASE("bundled manifests") {
  const auto names = bundled_names();
  const std::vector<std::string> expected{"fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9"};
  CHECK(names == expected);
  for (const auto& n : names) {
    const auto m = bundled_manifest(n);
    CHECK_FALSE(m.scenarios.empty());
    CHECK_FALSE(bundled_description(n).empty());
    CHECK(validate_manifest(m).empty());
    CHECK(parse_manifest(manifest_to_json(m)).scenarios.size() == m.scenarios.size());
  }
  CHECK_THROWS(bundled_manifest("fig1"));
}

TEST_CASE("zero thermal occupancy matches the plain covariance run") {
  SystemParams p;
  p.drive = 500;
  const auto opt = short_run();
  const auto thermal = thermal_sweep(p, {0.0}, opt, 1);
  const auto direct = power_sweep(p, {500.0}, opt, 1);
  REQUIRE(thermal.size() == 1);
  REQUIRE(thermal[0].error.empty());
  CHECK(thermal[0].s_p_avg == direct[0].s_p_avg);
  CHECK(thermal[0].e_n_avg == direct[0].e_n_avg);
  CHECK(thermal[0].min_symplectic == direct[0].min_symplectic);
}

TEST_CASE("hot bath destroys entanglement") {
  SystemParams p;
  p.drive = 600;
  const auto res = thermal_sweep(p, {1000.0}, short_run(), 1);
  REQUIRE(res[0].error.empty());
  for (double e : res[0].series.e_n()) CHECK(e == 0.0);
}

TEST_CASE("sweep rows below threshold carry no entanglement") {
  SystemParams p;
  const auto rows = power_sweep(p, {100.0, 200.0}, short_run(), 2);
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) {
    CHECK(r.error.empty());
    REQUIRE(r.e_n_avg);
    CHECK(*r.e_n_avg == 0.0);
    REQUIRE(r.s_p_avg);
    CHECK(*r.s_p_avg > 0);
  }
}

TEST_CASE("mismatch sweep including the degenerate case") {
  SystemParams p;
  const auto rows = mismatch_sweep(p, {0.0, 0.004}, {300.0}, short_run(100), 2);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].mismatch == 0.0);
  CHECK(rows[0].row.error.empty());
  CHECK(rows[1].row.error.empty());
  CHECK(rows[0].row.s_p_avg != rows[1].row.s_p_avg);
}

TEST_CASE("Wigner panel shares one propagation per drive") {
  SystemParams p;
  WignerPanelOptions opt;
  opt.grid_points = 21;
  const auto panels = wigner_panel(p, {100.0}, {20.0, 40.0}, opt, 1);
  REQUIRE(panels.size() == 2);
  CHECK(panels[0].time == 20.0);
  CHECK(panels[1].time == 40.0);
  CHECK(panels[0].grid1.values.rows() == 21);
  CHECK(panels[0].grid1.spec.q_max == panels[1].grid2.spec.q_max);
  const double total = panels[1].grid1.values.sum() * panels[1].grid1.dq() * panels[1].grid1.dp();
  CHECK(total == doctest::Approx(1.0).epsilon(0.02));
}
