#pragma once

// Scenario orchestration: sweeps built on the simulation modules, run
// manifests, and persisted outputs.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gainloss/classical.hpp"
#include "gainloss/fluctuations.hpp"
#include "gainloss/metrics.hpp"
#include "gainloss/model.hpp"

namespace gainloss {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr int kManifestSchemaVersion = 1;
inline constexpr int kReportSchemaVersion = 1;

/// Settings shared by every covariance-based sweep.
struct CovarianceRunOptions {
  double t_end = 5000.0;
  double dt_out = 1.0;
  double average_fraction = 0.5;  // trailing share of samples entering time averages
  PropagateOptions propagate{};
};

struct SweepRow {
  double drive = 0.0;
  std::optional<double> s_p_avg;  // empty when the point failed
  std::optional<double> e_n_avg;
  std::optional<double> min_symplectic;
  std::string error;
};

/// Time-averaged S_p and E_n per drive; failed points become gaps.
std::vector<SweepRow> power_sweep(const SystemParams& params, const std::vector<double>& drives,
                                  const CovarianceRunOptions& options = {}, unsigned workers = 0);

struct MismatchRow {
  double mismatch = 0.0;  // omega_m2 = omega_m1 (1 + mismatch)
  SweepRow row;
};

std::vector<MismatchRow> mismatch_sweep(const SystemParams& params, const std::vector<double>& mismatches,
                                        const std::vector<double>& drives, const CovarianceRunOptions& options = {},
                                        unsigned workers = 0);

struct ThermalResult {
  double n_thermal = 0.0;
  MetricSeries series;
  std::optional<double> s_p_avg;
  std::optional<double> e_n_avg;
  std::optional<double> min_symplectic;
  std::string error;
};

std::vector<ThermalResult> thermal_sweep(const SystemParams& params, const std::vector<double>& n_thermal,
                                         const CovarianceRunOptions& options = {}, unsigned workers = 0);

struct WignerPanel {
  double drive = 0.0;
  double time = 0.0;
  Mat2 v1 = Mat2::Zero(), v2 = Mat2::Zero();
  WignerGrid grid1, grid2;
  SqueezeRotation squeeze1, squeeze2;
};

struct WignerPanelOptions {
  int grid_points = 101;
  double extent = 0.0;  // half-width of the (q, p) window; 0 = six sigma of the widest panel state
  PropagateOptions propagate{};
};

/// One propagation per drive up to the latest snapshot time; Wigner surfaces
/// of both mechanical modes at every requested time.
std::vector<WignerPanel> wigner_panel(const SystemParams& params, const std::vector<double>& drives,
                                      const std::vector<double>& times, const WignerPanelOptions& options = {},
                                      unsigned workers = 0);

/// Number of maximal runs of consecutive samples with E_n == 0, counted after
/// the first sample with E_n > 0.
std::size_t count_zero_intervals(const std::vector<double>& e_n);

enum class ScenarioKind {
  classical,
  covariance,
  stability_scan,
  amplitude_scan,
  power_sweep,
  mismatch_sweep,
  thermal_sweep,
  wigner_panel
};

const char* to_string(ScenarioKind kind);
ScenarioKind scenario_kind_from_string(const std::string& name);

struct Scenario {
  std::string name;
  ScenarioKind kind = ScenarioKind::classical;
  nlohmann::json params = nlohmann::json::object();   // overrides on top of the defaults
  nlohmann::json options = nlohmann::json::object();  // kind-specific settings
  std::string description;
};

struct RunManifest {
  int schema_version = kManifestSchemaVersion;
  std::string output_dir = "out";
  std::uint64_t seed = 0;
  std::string tool_version = kToolVersion;
  std::vector<Scenario> scenarios;
};

/// Malformed manifest (bad JSON, unknown keys, wrong types). Distinct from
/// physics validation failures, which are reported per scenario.
class ManifestError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

RunManifest parse_manifest(const nlohmann::json& doc);
RunManifest load_manifest(const std::filesystem::path& path);
nlohmann::json manifest_to_json(const RunManifest& manifest);

struct ManifestProblem {
  std::string scenario;
  std::string field;
  std::string message;
  bool is_error = true;
};

/// Duplicate names, parameter validation findings and option errors.
std::vector<ManifestProblem> validate_manifest(const RunManifest& manifest,
                                               const std::vector<std::string>& overrides = {});

/// Effective parameters of a scenario after applying command-line overrides.
SystemParams scenario_params(const Scenario& scenario, const std::vector<std::string>& overrides = {});

struct ScenarioResult {
  std::string name;
  ScenarioKind kind = ScenarioKind::classical;
  bool ok = false;
  std::string error;
  std::vector<std::string> outputs;  // relative to the output directory
  nlohmann::json summary = nlohmann::json::object();
  double wall_seconds = 0.0;
};

struct RunReport {
  std::vector<ScenarioResult> scenarios;
  bool ok() const;
  /// Machine-readable report; wall times are excluded to keep it reproducible.
  nlohmann::json to_json(const RunManifest& manifest) const;
};

struct RunOptions {
  std::optional<std::filesystem::path> output_dir;  // overrides the manifest's
  std::vector<std::string> overrides;               // key=value parameter overrides
  unsigned workers = 0;
};

/// Executes every scenario, writes `<out>/<scenario>/...`, `<out>/report.json`
/// and `<out>/run.log` (timings).
RunReport run(const RunManifest& manifest, const RunOptions& options = {});

/// Bundled figure manifests fig2 ... fig9.
std::vector<std::string> bundled_names();
RunManifest bundled_manifest(const std::string& name);
std::string bundled_description(const std::string& name);

}  // namespace gainloss
