#include "gainloss/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace gainloss {
namespace {

struct FieldRef {
  const char* name;
  double SystemParams::*member;
};

constexpr FieldRef kFields[] = {
    {"omega_m1", &SystemParams::omega_m1},
    {"omega_m2", &SystemParams::omega_m2},
    {"delta1", &SystemParams::delta1},
    {"delta2", &SystemParams::delta2},
    {"kappa", &SystemParams::kappa},
    {"gamma_m1", &SystemParams::gamma_m1},
    {"gamma_m2", &SystemParams::gamma_m2},
    {"g0", &SystemParams::g0},
    {"j_coupling", &SystemParams::j_coupling},
    {"drive", &SystemParams::drive},
    {"n_thermal", &SystemParams::n_thermal},
};

const FieldRef* find_field(std::string_view key) {
  for (const auto& f : kFields) {
    if (key == f.name) return &f;
  }
  return nullptr;
}

}  // namespace

bool ValidationReport::ok() const { return error_count() == 0; }

std::size_t ValidationReport::error_count() const {
  return static_cast<std::size_t>(std::count_if(findings.begin(), findings.end(), [](const Finding& f) {
    return f.severity == Severity::error;
  }));
}

std::size_t ValidationReport::warning_count() const { return findings.size() - error_count(); }

bool ValidationReport::has(Severity s, std::string_view field) const {
  return std::any_of(findings.begin(), findings.end(),
                     [&](const Finding& f) { return f.severity == s && f.field == field; });
}

ValidationReport validate(const SystemParams& p) {
  ValidationReport report;
  auto error = [&](const char* field, std::string msg) {
    report.findings.push_back({Severity::error, field, std::move(msg)});
  };
  auto warning = [&](const char* field, std::string msg) {
    report.findings.push_back({Severity::warning, field, std::move(msg)});
  };

  for (const auto& f : kFields) {
    if (!std::isfinite(p.*f.member)) error(f.name, std::string(f.name) + " must be finite");
  }
  if (!(p.kappa > 0)) error("kappa", "kappa must be positive");
  if (!(p.gamma_m1 > 0)) error("gamma_m1", "gamma_m1 must be positive");
  if (!(p.gamma_m2 > 0)) error("gamma_m2", "gamma_m2 must be positive");
  if (!(p.g0 >= 0)) error("g0", "g0 must be non-negative");
  if (!(p.drive >= 0)) error("drive", "drive must be non-negative");
  if (!(p.n_thermal >= 0)) error("n_thermal", "n_thermal must be non-negative");
  if (!(p.omega_m1 > 0)) error("omega_m1", "omega_m1 must be positive");
  if (!(p.omega_m2 > 0)) error("omega_m2", "omega_m2 must be positive");

  if (p.omega_m1 > 0) {
    if (std::abs(p.j_coupling) > 0.1 * p.omega_m1) {
      warning("j_coupling", "J not small relative to omega_m1");
    }
    if (std::abs(p.omega_m1 - p.omega_m2) > 0.05 * p.omega_m1) {
      warning("omega_m2", "frequency mismatch exceeds 5% of omega_m1");
    }
  }
  return report;
}

const std::vector<std::string>& param_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& f : kFields) out.emplace_back(f.name);
    return out;
  }();
  return names;
}

void set_param(SystemParams& params, std::string_view key, double value) {
  const FieldRef* f = find_field(key);
  if (f == nullptr) throw std::invalid_argument("unknown parameter '" + std::string(key) + "'");
  params.*f->member = value;
}

double get_param(const SystemParams& params, std::string_view key) {
  const FieldRef* f = find_field(key);
  if (f == nullptr) throw std::invalid_argument("unknown parameter '" + std::string(key) + "'");
  return params.*f->member;
}

void apply_override(SystemParams& params, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw std::invalid_argument("expected key=value, got '" + std::string(assignment) + "'");
  }
  const auto key = assignment.substr(0, eq);
  const auto text = assignment.substr(eq + 1);
  double value = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    throw std::invalid_argument("value for '" + std::string(key) + "' is not a number: '" +
                                std::string(text) + "'");
  }
  set_param(params, key, value);
}

nlohmann::json to_json(const SystemParams& params) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& f : kFields) j[f.name] = params.*f.member;
  return j;
}

SystemParams params_from_json(const nlohmann::json& j, SystemParams base) {
  if (!j.is_object()) throw std::invalid_argument("params must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!value.is_number()) throw std::invalid_argument("parameter '" + key + "' must be a number");
    set_param(base, key, value.get<double>());
  }
  return base;
}

std::string serialize(const SystemParams& params) {
  nlohmann::json doc;
  doc["schema_version"] = kParamsSchemaVersion;
  doc["params"] = to_json(params);
  return doc.dump(2);
}

SystemParams parse(std::string_view text) {
  const auto doc = nlohmann::json::parse(text);
  if (!doc.is_object()) throw std::invalid_argument("parameter document must be an object");
  for (const auto& [key, value] : doc.items()) {
    if (key != "schema_version" && key != "params") {
      throw std::invalid_argument("unknown key '" + key + "'");
    }
  }
  if (!doc.contains("schema_version") || doc["schema_version"] != kParamsSchemaVersion) {
    throw std::invalid_argument("unsupported or missing schema_version");
  }
  return params_from_json(doc.value("params", nlohmann::json::object()));
}

}  // namespace gainloss
