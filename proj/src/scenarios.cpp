#include <stdexcept>

#include "gainloss/experiments.hpp"

namespace gainloss {

namespace {

using nlohmann::json;

struct Bundled {
  const char* name;
  const char* description;
  std::vector<Scenario> (*build)();
};

json range(double start, double stop, double step) { return {{"start", start}, {"stop", stop}, {"step", step}}; }

std::vector<Scenario> fig2() {
  return {
      {"fig2_decaying", ScenarioKind::classical, json::object(),
       {{"drives", {100.0}}, {"t_end", 2000.0}, {"window", 500.0}}, "E = 100: decaying beats"},
      {"fig2_limit_cycle", ScenarioKind::classical, json::object(),
       {{"drives", {500.0}}, {"t_end", 5000.0}, {"window", 500.0}}, "E = 500: self-sustained oscillation"},
      {"fig2_amplitude_scan", ScenarioKind::amplitude_scan, json::object(),
       {{"drives", range(300, 700, 10)}, {"t_end", 5000.0}, {"window", 500.0}}, "amplitudes against drive"},
  };
}

std::vector<Scenario> fig3() {
  return {
      {"fig3_ratio_100", ScenarioKind::stability_scan, json::object(), {{"drives", range(0, 800, 10)}},
       "gamma_m1 / gamma_m2 = 100"},
      {"fig3_ratio_1", ScenarioKind::stability_scan, {{"gamma_m1", 1e-4}, {"gamma_m2", 1e-4}},
       {{"drives", range(0, 800, 10)}}, "gamma_m1 = gamma_m2 = 1e-4"},
  };
}

std::vector<Scenario> fig4() {
  return {{"fig4_dynamics", ScenarioKind::covariance, json::object(),
           {{"drives", {100.0, 500.0, 600.0}}, {"t_end", 5000.0}, {"dt_out", 1.0}},
           "S_p and E_n time series"}};
}

std::vector<Scenario> fig5() {
  return {{"fig5_wigner", ScenarioKind::wigner_panel, json::object(),
           {{"drives", {100.0, 400.0, 500.0, 600.0, 700.0, 800.0}}, {"times", {5000.0}}},
           "Wigner surfaces at t = 5000 across drives"}};
}

std::vector<Scenario> fig6() {
  return {{"fig6_wigner_time", ScenarioKind::wigner_panel, json::object(),
           {{"drives", {600.0}}, {"times", {3000.0, 4000.0, 5000.0}}}, "Wigner surfaces at E = 600 over time"}};
}

std::vector<Scenario> fig7() {
  return {{"fig7_fidelity", ScenarioKind::covariance, json::object(),
           {{"drives", {400.0, 500.0, 600.0}}, {"t_end", 5000.0}, {"dt_out", 1.0}, {"write_covariance", false}},
           "fidelity between the mechanical modes"}};
}

std::vector<Scenario> fig8() {
  return {{"fig8_mismatch", ScenarioKind::mismatch_sweep, json::object(),
           {{"mismatches", {0.002, 0.004, 0.006, 0.008}}, {"drives", range(500, 800, 25)}, {"t_end", 5000.0}},
           "time-averaged S_p and E_n against drive and frequency mismatch"}};
}

std::vector<Scenario> fig9() {
  return {{"fig9_thermal", ScenarioKind::thermal_sweep, json::object(),
           {{"n_thermal", {0.0, 10.0, 20.0}}, {"drive", 600.0}, {"t_end", 5000.0}},
           "thermal phonon occupancy at E = 600"}};
}

const Bundled kBundled[] = {
    {"fig2", "classical dynamics and amplitude scan", fig2},
    {"fig3", "drift-matrix stability scans for two damping ratios", fig3},
    {"fig4", "phase synchronization and entanglement dynamics", fig4},
    {"fig5", "Wigner distributions across drive", fig5},
    {"fig6", "Wigner distributions over time", fig6},
    {"fig7", "Gaussian fidelity dynamics", fig7},
    {"fig8", "frequency-mismatch sweep", fig8},
    {"fig9", "thermal-noise sweep", fig9},
};

const Bundled& find(const std::string& name) {
  for (const auto& b : kBundled)
    if (name == b.name) return b;
  throw std::invalid_argument("unknown bundled scenario '" + name + "'");
}

}  // namespace

std::vector<std::string> bundled_names() {
  std::vector<std::string> out;
  for (const auto& b : kBundled) out.emplace_back(b.name);
  return out;
}

std::string bundled_description(const std::string& name) { return find(name).description; }

RunManifest bundled_manifest(const std::string& name) {
  RunManifest m;
  m.output_dir = "out/" + name;
  m.scenarios = find(name).build();
  return m;
}

}  // namespace gainloss
