#pragma once

// Physical parameters of the two coupled gain-loss optomechanical cavities.
//
// Every quantity is expressed in units of the mechanical frequency scale
// omega_m (omega_m1 = 1 by convention); time is measured in tau = 1/omega_m.
// hbar = 1 and the bath enters only through the phonon occupancy n_thermal.

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace gainloss {

struct SystemParams {
  double omega_m1 = 1.0;
  double omega_m2 = 1.008;
  double delta1 = -1.0;  // red detuned: optomechanical damping
  double delta2 = 1.0;   // blue detuned: optomechanical gain
  double kappa = 0.1;
  double gamma_m1 = 1e-2;
  double gamma_m2 = 1e-4;
  double g0 = 1e-4;
  double j_coupling = 0.03;
  double drive = 0.0;
  double n_thermal = 0.0;

  friend bool operator==(const SystemParams&, const SystemParams&) = default;
};

/// Parameter set used throughout the reference study; `drive` is chosen per run.
inline constexpr SystemParams kPaperDefaults{};

inline SystemParams paper_defaults() { return kPaperDefaults; }

enum class Severity { error, warning };

struct Finding {
  Severity severity;
  std::string field;
  std::string message;
};

struct ValidationReport {
  std::vector<Finding> findings;

  bool ok() const;
  std::size_t error_count() const;
  std::size_t warning_count() const;
  bool has(Severity s, std::string_view field) const;
};

ValidationReport validate(const SystemParams& params);

/// Names of all fields, in serialization order.
const std::vector<std::string>& param_names();

/// Sets a single field by name; throws std::invalid_argument on unknown keys.
void set_param(SystemParams& params, std::string_view key, double value);
double get_param(const SystemParams& params, std::string_view key);

/// Applies a `key=value` override as accepted by the command line.
void apply_override(SystemParams& params, std::string_view assignment);

nlohmann::json to_json(const SystemParams& params);

/// Overlays the keys present in `j` onto `base`. Unknown keys and non-numeric
/// values are rejected with std::invalid_argument.
SystemParams params_from_json(const nlohmann::json& j, SystemParams base = kPaperDefaults);

/// Standalone parameter document: {"schema_version": 1, "params": {...}}.
inline constexpr int kParamsSchemaVersion = 1;
std::string serialize(const SystemParams& params);
SystemParams parse(std::string_view text);

}  // namespace gainloss
