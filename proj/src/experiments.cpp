#include "gainloss/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include "gainloss/effective.hpp"
#include "gainloss/io.hpp"
#include "gainloss/parallel.hpp"

namespace gainloss {

namespace {

using nlohmann::json;

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

struct CovarianceSummary {
  double s_p_avg = 0.0;
  double e_n_avg = 0.0;
  double min_symplectic = 0.0;
};

CovarianceSummary summarize(const CovarianceTrajectory& traj, const MetricSeries& series, double fraction) {
  CovarianceSummary s;
  const auto t = series.times();
  s.s_p_avg = trailing_average(t, series.s_p(), fraction);
  s.e_n_avg = trailing_average(t, series.e_n(), fraction);
  s.min_symplectic = *std::min_element(traj.min_symplectic.begin(), traj.min_symplectic.end());
  return s;
}

SweepRow sweep_point(const SystemParams& params, const CovarianceRunOptions& options) {
  SweepRow row;
  row.drive = params.drive;
  try {
    const auto traj = propagate(params, options.t_end, options.dt_out, options.propagate);
    if (traj.divergent) throw std::runtime_error("mean-field trajectory diverged");
    const auto series = compute_metric_series(traj);
    const auto s = summarize(traj, series, options.average_fraction);
    row.s_p_avg = s.s_p_avg;
    row.e_n_avg = s.e_n_avg;
    row.min_symplectic = s.min_symplectic;
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  return row;
}

}  // namespace

std::vector<SweepRow> power_sweep(const SystemParams& params, const std::vector<double>& drives,
                                  const CovarianceRunOptions& options, unsigned workers) {
  std::vector<SweepRow> rows(drives.size());
  parallel_for(drives.size(), workers, [&](std::size_t i) {
    SystemParams p = params;
    p.drive = drives[i];
    rows[i] = sweep_point(p, options);
  });
  return rows;
}

std::vector<MismatchRow> mismatch_sweep(const SystemParams& params, const std::vector<double>& mismatches,
                                        const std::vector<double>& drives, const CovarianceRunOptions& options,
                                        unsigned workers) {
  std::vector<MismatchRow> rows(mismatches.size() * drives.size());
  parallel_for(rows.size(), workers, [&](std::size_t k) {
    const double mismatch = mismatches[k / drives.size()];
    SystemParams p = params;
    p.omega_m2 = params.omega_m1 * (1.0 + mismatch);
    p.drive = drives[k % drives.size()];
    rows[k].mismatch = mismatch;
    rows[k].row = sweep_point(p, options);
  });
  return rows;
}

std::vector<ThermalResult> thermal_sweep(const SystemParams& params, const std::vector<double>& n_thermal,
                                         const CovarianceRunOptions& options, unsigned workers) {
  std::vector<ThermalResult> out(n_thermal.size());
  parallel_for(n_thermal.size(), workers, [&](std::size_t i) {
    ThermalResult& r = out[i];
    r.n_thermal = n_thermal[i];
    SystemParams p = params;
    p.n_thermal = n_thermal[i];
    try {
      const auto traj = propagate(p, options.t_end, options.dt_out, options.propagate);
      if (traj.divergent) throw std::runtime_error("mean-field trajectory diverged");
      r.series = compute_metric_series(traj);
      const auto s = summarize(traj, r.series, options.average_fraction);
      r.s_p_avg = s.s_p_avg;
      r.e_n_avg = s.e_n_avg;
      r.min_symplectic = s.min_symplectic;
    } catch (const std::exception& e) {
      r.error = e.what();
    }
  });
  return out;
}

std::vector<WignerPanel> wigner_panel(const SystemParams& params, const std::vector<double>& drives,
                                      const std::vector<double>& times, const WignerPanelOptions& options,
                                      unsigned workers) {
  if (drives.empty() || times.empty()) throw std::invalid_argument("wigner_panel: drives and times required");
  if (!std::is_sorted(times.begin(), times.end()) || !(times.front() > 0)) {
    throw std::invalid_argument("wigner_panel: times must be positive and ascending");
  }
  std::vector<WignerPanel> panels(drives.size() * times.size());
  parallel_for(drives.size(), workers, [&](std::size_t d) {
    SystemParams p = params;
    p.drive = drives[d];
    PropagateOptions prop = options.propagate;
    prop.sample_times = {0.0};
    prop.sample_times.insert(prop.sample_times.end(), times.begin(), times.end());
    const auto traj = propagate(p, times.back(), times.back(), prop);
    if (traj.divergent) throw std::runtime_error("wigner_panel: mean-field trajectory diverged");
    for (std::size_t k = 0; k < times.size(); ++k) {
      const std::size_t idx = k + 1;
      WignerPanel& panel = panels[d * times.size() + k];
      panel.drive = drives[d];
      panel.time = traj.t[idx];
      panel.v1 = mode_block(traj.covariances[idx], quad::q1);
      panel.v2 = mode_block(traj.covariances[idx], quad::q2);
      panel.squeeze1 = squeeze_rotation(panel.v1);
      panel.squeeze2 = squeeze_rotation(panel.v2);
    }
  });
  // A shared window keeps the panels comparable.
  double half = options.extent;
  if (!(half > 0)) {
    for (const auto& panel : panels)
      for (const Mat2* v : {&panel.v1, &panel.v2})
        half = std::max(half, 6.0 * std::sqrt(sym_eig_2x2(*v).eigvals(1)));
  }
  WignerSpec spec;
  spec.q_min = spec.p_min = -half;
  spec.q_max = spec.p_max = half;
  spec.nq = spec.np = options.grid_points;
  for (auto& panel : panels) {
    panel.grid1 = wigner(panel.v1, spec);
    panel.grid2 = wigner(panel.v2, spec);
  }
  return panels;
}

std::size_t count_zero_intervals(const std::vector<double>& e_n) {
  std::size_t count = 0;
  bool seen_positive = false, in_zero = false;
  for (double v : e_n) {
    if (v > 0) {
      seen_positive = true;
      in_zero = false;
    } else if (seen_positive && !in_zero) {
      ++count;
      in_zero = true;
    }
  }
  return count;
}

// ---------------------------------------------------------------------------
// Manifests

namespace {

constexpr std::pair<ScenarioKind, const char*> kKindNames[] = {
    {ScenarioKind::classical, "classical"},           {ScenarioKind::covariance, "covariance"},
    {ScenarioKind::stability_scan, "stability_scan"}, {ScenarioKind::amplitude_scan, "amplitude_scan"},
    {ScenarioKind::power_sweep, "power_sweep"},       {ScenarioKind::mismatch_sweep, "mismatch_sweep"},
    {ScenarioKind::thermal_sweep, "thermal_sweep"},   {ScenarioKind::wigner_panel, "wigner_panel"},
};

void require_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw ManifestError(where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }) == allowed.end()) {
      throw ManifestError(where + ": unknown key '" + key + "'");
    }
  }
}

// Typed access to a scenario's options; every key must be consumed.
class Options {
 public:
  Options(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw std::invalid_argument(where_ + ": options must be an object");
  }

  double number(const char* key, double fallback) {
    used_.insert(key);
    if (!j_.contains(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number()) throw std::invalid_argument(where_ + "." + key + ": expected a number");
    return v.get<double>();
  }

  bool boolean(const char* key, bool fallback) {
    used_.insert(key);
    if (!j_.contains(key)) return fallback;
    if (!j_.at(key).is_boolean()) throw std::invalid_argument(where_ + "." + key + ": expected true or false");
    return j_.at(key).get<bool>();
  }

  std::string text(const char* key, const std::string& fallback) {
    used_.insert(key);
    if (!j_.contains(key)) return fallback;
    if (!j_.at(key).is_string()) throw std::invalid_argument(where_ + "." + key + ": expected a string");
    return j_.at(key).get<std::string>();
  }

  /// A list of numbers, or {"start", "stop", "step"} expanded inclusively.
  std::vector<double> list(const char* key, const std::vector<double>& fallback) {
    used_.insert(key);
    if (!j_.contains(key)) return fallback;
    const auto& v = j_.at(key);
    std::vector<double> out;
    if (v.is_array()) {
      for (const auto& x : v) {
        if (!x.is_number()) throw std::invalid_argument(where_ + "." + key + ": expected numbers");
        out.push_back(x.get<double>());
      }
    } else if (v.is_object()) {
      require_keys(v, {"start", "stop", "step"}, where_ + "." + key);
      if (!v.contains("start") || !v.contains("stop") || !v.contains("step")) {
        throw std::invalid_argument(where_ + "." + key + ": range needs start, stop and step");
      }
      const double start = v.at("start").get<double>(), stop = v.at("stop").get<double>(),
                   step = v.at("step").get<double>();
      if (!(step > 0) || stop < start) throw std::invalid_argument(where_ + "." + key + ": invalid range");
      const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
      for (long k = 0; k <= n; ++k) out.push_back(start + static_cast<double>(k) * step);
    } else {
      throw std::invalid_argument(where_ + "." + key + ": expected a list or a range");
    }
    if (out.empty()) throw std::invalid_argument(where_ + "." + key + ": empty list");
    return out;
  }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!used_.count(key)) throw std::invalid_argument(where_ + ": unknown option '" + key + "'");
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> used_;
};

void require_positive(double v, const char* name) {
  if (!(v > 0)) throw std::invalid_argument(std::string(name) + " must be positive");
}

OdeTolerances read_tolerances(Options& o) {
  OdeTolerances tol;
  tol.rel = o.number("rtol", tol.rel);
  tol.abs = o.number("atol", tol.abs);
  require_positive(tol.rel, "rtol");
  require_positive(tol.abs, "atol");
  return tol;
}

PropagateOptions read_propagate(Options& o) {
  PropagateOptions p;
  p.tol = read_tolerances(o);
  p.convention = drift_convention_from_string(o.text("convention", "jacobian"));
  p.physicality_tolerance = o.number("physicality_tolerance", p.physicality_tolerance);
  require_positive(p.physicality_tolerance, "physicality_tolerance");
  return p;
}

CovarianceRunOptions read_covariance(Options& o) {
  CovarianceRunOptions c;
  c.t_end = o.number("t_end", c.t_end);
  c.dt_out = o.number("dt_out", c.dt_out);
  c.average_fraction = o.number("average_fraction", c.average_fraction);
  require_positive(c.t_end, "t_end");
  require_positive(c.dt_out, "dt_out");
  if (!(c.average_fraction > 0 && c.average_fraction <= 1)) {
    throw std::invalid_argument("average_fraction must lie in (0, 1]");
  }
  c.propagate = read_propagate(o);
  return c;
}

std::string tag(const char* prefix, double v) { return prefix + io::format_double(v); }

struct Context {
  std::filesystem::path out_dir;
  const Scenario& scenario;
  SystemParams params;
  unsigned workers;
  ScenarioResult& result;

  void write(const std::string& artifact, std::string_view contents) {
    const std::string rel = scenario.name + "/" + artifact;
    io::write_atomic(out_dir / rel, contents);
    result.outputs.push_back(rel);
  }
};

std::string trajectory_csv(const ClassicalTrajectory& traj) {
  io::CsvTable table({"t", "re_a1", "im_a1", "q1", "p1", "re_a2", "im_a2", "q2", "p2"});
  for (std::size_t k = 0; k < traj.size(); ++k) {
    std::vector<io::Cell> row{traj.t[k]};
    for (int i = 0; i < 8; ++i) row.emplace_back(traj.states[k](i));
    table.add_row(std::move(row));
  }
  return table.str();
}

std::string covariance_csv(const CovarianceTrajectory& traj) {
  std::vector<std::string> header{"t"};
  for (auto& l : packed_labels()) header.push_back(l);
  io::CsvTable table(header);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    std::vector<io::Cell> row{traj.t[k]};
    for (double v : pack(traj.covariances[k])) row.emplace_back(v);
    table.add_row(std::move(row));
  }
  return table.str();
}

std::string metrics_csv(const MetricSeries& series) {
  io::CsvTable table({"t", "S_p", "E_n", "nu_minus", "r1", "phi1", "r2", "phi2", "f"});
  for (const auto& m : series.samples) {
    table.add_row({m.t, m.s_p, m.e_n, m.nu_minus, m.r1, m.phi1, m.r2, m.phi2, m.fidelity});
  }
  return table.str();
}

void run_classical(Context& ctx, Options& o) {
  const auto drives = o.list("drives", {100.0, 500.0});
  const double t_end = o.number("t_end", 2000.0);
  const double dt_out = o.number("dt_out", 0.1);
  const double window = o.number("window", 500.0);
  IntegrateOptions io_opts;
  io_opts.tol = read_tolerances(o);
  o.finish();
  json rows = json::array();
  for (double e : drives) {
    SystemParams p = ctx.params;
    p.drive = e;
    const auto traj = integrate(p, t_end, dt_out, io_opts);
    ctx.write(tag("trajectory_E", e) + ".csv", trajectory_csv(traj));
    json row{{"drive", e}, {"steps", traj.stats.steps}, {"rejected", traj.stats.rejected}};
    if (traj.t.back() - traj.t.front() >= 3 * window || traj.divergent) {
      const auto rep = classify(traj, window);
      row["regime"] = to_string(rep.regime);
      row["amplitude1"] = rep.amplitude1;
      row["amplitude2"] = rep.amplitude2;
      row["decay_rate"] = opt_json(rep.decay_rate);
      row["locked_phase"] = opt_json(rep.locked_phase);
    }
    rows.push_back(row);
  }
  ctx.result.summary["runs"] = rows;
}

void run_covariance(Context& ctx, Options& o) {
  const auto drives = o.list("drives", {500.0, 600.0});
  const auto cov = read_covariance(o);
  const bool write_cov = o.boolean("write_covariance", true);
  o.finish();
  struct Item {
    CovarianceTrajectory traj;
    MetricSeries series;
  };
  std::vector<Item> items(drives.size());
  parallel_for(drives.size(), ctx.workers, [&](std::size_t i) {
    SystemParams p = ctx.params;
    p.drive = drives[i];
    items[i].traj = propagate(p, cov.t_end, cov.dt_out, cov.propagate);
    if (items[i].traj.divergent) throw std::runtime_error("mean-field trajectory diverged");
    items[i].series = compute_metric_series(items[i].traj);
  });
  json rows = json::array();
  for (std::size_t i = 0; i < drives.size(); ++i) {
    const auto& [traj, series] = items[i];
    if (write_cov) ctx.write(tag("covariance_E", drives[i]) + ".csv", covariance_csv(traj));
    ctx.write(tag("metrics_E", drives[i]) + ".csv", metrics_csv(series));
    io::Snapshot snap;
    snap.time = traj.t.back();
    snap.data = traj.covariances.back();
    ctx.write(tag("covariance_final_E", drives[i]) + ".bin", io::encode_snapshot(snap));
    const auto s = summarize(traj, series, cov.average_fraction);
    const auto e_n = series.e_n();
    const auto entangled = std::count_if(e_n.begin(), e_n.end(), [](double v) { return v > 0; });
    double max_asym = 0;
    for (double a : traj.max_asymmetry) max_asym = std::max(max_asym, a);
    rows.push_back({{"drive", drives[i]},
                    {"s_p_avg", s.s_p_avg},
                    {"e_n_avg", s.e_n_avg},
                    {"fraction_entangled", static_cast<double>(entangled) / static_cast<double>(e_n.size())},
                    {"zero_intervals", count_zero_intervals(e_n)},
                    {"min_symplectic", s.min_symplectic},
                    {"max_asymmetry", max_asym},
                    {"convention", to_string(cov.propagate.convention)}});
  }
  ctx.result.summary["runs"] = rows;
}

void run_stability(Context& ctx, Options& o) {
  const auto drives = o.list("drives", {});
  StabilityOptions opts;
  opts.convention = drift_convention_from_string(o.text("convention", "jacobian"));
  opts.workers = ctx.workers;
  o.finish();
  if (drives.empty()) throw std::invalid_argument("stability_scan needs drives");
  const auto points = stability_scan(ctx.params, drives, opts);
  io::CsvTable table({"E", "max_re_eig", "stable"});
  std::optional<double> first_unstable;
  std::size_t unstable = 0, failed = 0;
  for (const auto& pt : points) {
    if (!pt.converged || !pt.error.empty()) {
      ++failed;
      table.add_row({pt.drive, std::nullopt, std::nullopt});
      continue;
    }
    table.add_row({pt.drive, pt.max_re_eig, pt.stable ? 1.0 : 0.0});
    if (!pt.stable) {
      ++unstable;
      if (!first_unstable) first_unstable = pt.drive;
    }
  }
  ctx.write("stability.csv", table.str());
  ctx.result.summary = {{"first_unstable", opt_json(first_unstable)},
                        {"unstable_points", unstable},
                        {"failed_points", failed},
                        {"points", points.size()}};
}

void run_amplitude(Context& ctx, Options& o) {
  const auto drives = o.list("drives", {});
  const double t_end = o.number("t_end", 5000.0);
  const double window = o.number("window", 500.0);
  ScanOptions opts;
  opts.dt_out = o.number("dt_out", opts.dt_out);
  opts.refine = o.boolean("refine", false);
  opts.tol = read_tolerances(o);
  opts.workers = ctx.workers;
  o.finish();
  if (drives.empty()) throw std::invalid_argument("amplitude_scan needs drives");
  const auto scan = amplitude_scan(ctx.params, drives, t_end, window, opts);
  io::CsvTable table({"E", "regime", "A1", "A2", "decay_rate", "locked_phase"});
  std::size_t failed = 0;
  for (const auto& pt : scan.points) {
    if (!pt.report) {
      ++failed;
      table.add_row({pt.drive, "", std::nullopt, std::nullopt, std::nullopt, std::nullopt});
      continue;
    }
    const auto& r = *pt.report;
    table.add_row({pt.drive, to_string(r.regime), r.amplitude1, r.amplitude2, r.decay_rate, r.locked_phase});
  }
  ctx.write("amplitude_scan.csv", table.str());
  ctx.result.summary = {{"e_p", opt_json(scan.e_p)}, {"e_lc", opt_json(scan.e_lc)}, {"failed_points", failed}};
  if (scan.e_p) {
    // Effective-mode discriminant at E_p from the steady intracavity fields.
    SystemParams p = ctx.params;
    p.drive = *scan.e_p;
    try {
      const auto rates = rates_at_drive(p, FieldSource::steady_state);
      ctx.result.summary["discriminant_at_e_p"] = spectrum(rates, p.j_coupling).discriminant;
    } catch (const std::exception&) {
      ctx.result.summary["discriminant_at_e_p"] = nullptr;
    }
  }
}

json sweep_row_json(const SweepRow& r) {
  json j{{"drive", r.drive},
         {"s_p_avg", opt_json(r.s_p_avg)},
         {"e_n_avg", opt_json(r.e_n_avg)},
         {"min_symplectic", opt_json(r.min_symplectic)}};
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

void run_power(Context& ctx, Options& o) {
  const auto drives = o.list("drives", {});
  const auto cov = read_covariance(o);
  o.finish();
  if (drives.empty()) throw std::invalid_argument("power_sweep needs drives");
  const auto rows = power_sweep(ctx.params, drives, cov, ctx.workers);
  io::CsvTable table({"E", "S_p_avg", "E_n_avg"});
  json summary = json::array();
  for (const auto& r : rows) {
    table.add_row({r.drive, r.s_p_avg, r.e_n_avg});
    summary.push_back(sweep_row_json(r));
  }
  ctx.write("power_sweep.csv", table.str());
  ctx.result.summary["rows"] = summary;
}

void run_mismatch(Context& ctx, Options& o) {
  const auto mismatches = o.list("mismatches", {0.002, 0.004, 0.006, 0.008});
  const auto drives = o.list("drives", {});
  const auto cov = read_covariance(o);
  o.finish();
  if (drives.empty()) throw std::invalid_argument("mismatch_sweep needs drives");
  const auto rows = mismatch_sweep(ctx.params, mismatches, drives, cov, ctx.workers);
  io::CsvTable table({"mismatch", "E", "S_p_avg", "E_n_avg"});
  json per = json::array();
  for (double m : mismatches) {
    std::optional<double> best_sp, best_en;
    std::size_t entangled = 0;
    for (const auto& r : rows) {
      if (r.mismatch != m) continue;
      if (r.row.s_p_avg) best_sp = std::max(best_sp.value_or(-INFINITY), *r.row.s_p_avg);
      if (r.row.e_n_avg) {
        best_en = std::max(best_en.value_or(-INFINITY), *r.row.e_n_avg);
        if (*r.row.e_n_avg > 0) ++entangled;
      }
    }
    per.push_back({{"mismatch", m},
                   {"max_s_p_avg", opt_json(best_sp)},
                   {"max_e_n_avg", opt_json(best_en)},
                   {"entangled_drives", entangled}});
  }
  for (const auto& r : rows) table.add_row({r.mismatch, r.row.drive, r.row.s_p_avg, r.row.e_n_avg});
  ctx.write("mismatch_sweep.csv", table.str());
  ctx.result.summary["per_mismatch"] = per;
}

void run_thermal(Context& ctx, Options& o) {
  const auto n_list = o.list("n_thermal", {0.0, 10.0, 20.0});
  ctx.params.drive = o.number("drive", ctx.params.drive);
  const auto cov = read_covariance(o);
  o.finish();
  const auto results = thermal_sweep(ctx.params, n_list, cov, ctx.workers);
  io::CsvTable table({"n_thermal", "S_p_avg", "E_n_avg"});
  json rows = json::array();
  for (const auto& r : results) {
    table.add_row({r.n_thermal, r.s_p_avg, r.e_n_avg});
    if (r.error.empty()) ctx.write(tag("metrics_n", r.n_thermal) + ".csv", metrics_csv(r.series));
    json row{{"n_thermal", r.n_thermal},
             {"s_p_avg", opt_json(r.s_p_avg)},
             {"e_n_avg", opt_json(r.e_n_avg)},
             {"min_symplectic", opt_json(r.min_symplectic)}};
    if (!r.error.empty()) row["error"] = r.error;
    rows.push_back(row);
  }
  ctx.write("thermal_sweep.csv", table.str());
  ctx.result.summary = {{"drive", ctx.params.drive}, {"rows", rows}};
}

void run_wigner(Context& ctx, Options& o) {
  const auto drives = o.list("drives", {100.0, 400.0, 600.0, 800.0});
  const auto times = o.list("times", {5000.0});
  WignerPanelOptions opts;
  opts.grid_points = static_cast<int>(o.number("grid_points", opts.grid_points));
  opts.extent = o.number("extent", 0.0);
  opts.propagate = read_propagate(o);
  o.finish();
  if (opts.grid_points < 2) throw std::invalid_argument("grid_points must be at least 2");
  const auto panels = wigner_panel(ctx.params, drives, times, opts, ctx.workers);
  io::CsvTable table({"E", "t", "r1", "phi1", "n_eff1", "r2", "phi2", "n_eff2"});
  for (const auto& panel : panels) {
    table.add_row({panel.drive, panel.time, panel.squeeze1.r, panel.squeeze1.phi, panel.squeeze1.n_eff,
                   panel.squeeze2.r, panel.squeeze2.phi, panel.squeeze2.n_eff});
    const std::string stem = tag("wigner_E", panel.drive) + tag("_t", panel.time);
    int mode = 1;
    for (const WignerGrid* g : {&panel.grid1, &panel.grid2}) {
      const std::string base = stem + "_m" + std::to_string(mode++);
      std::string csv;
      for (Eigen::Index i = 0; i < g->values.rows(); ++i) {
        for (Eigen::Index k = 0; k < g->values.cols(); ++k) {
          if (k) csv += ',';
          csv += io::format_double(g->values(i, k));
        }
        csv += '\n';
      }
      ctx.write(base + ".csv", csv);
      const json sidecar{{"rows_axis", "q"},
                         {"cols_axis", "p"},
                         {"q_min", g->spec.q_min},
                         {"q_max", g->spec.q_max},
                         {"q_step", g->dq()},
                         {"p_min", g->spec.p_min},
                         {"p_max", g->spec.p_max},
                         {"p_step", g->dp()},
                         {"drive", panel.drive},
                         {"time", panel.time}};
      ctx.write(base + ".json", sidecar.dump(2) + "\n");
      io::Snapshot snap;
      snap.kind = io::SnapshotKind::wigner;
      snap.time = panel.time;
      snap.q_min = g->spec.q_min;
      snap.q_max = g->spec.q_max;
      snap.p_min = g->spec.p_min;
      snap.p_max = g->spec.p_max;
      snap.data = g->values;
      ctx.write(base + ".bin", io::encode_snapshot(snap));
    }
  }
  ctx.write("wigner_panel.csv", table.str());
  json rows = json::array();
  for (const auto& panel : panels) {
    rows.push_back({{"drive", panel.drive},
                    {"time", panel.time},
                    {"r1", panel.squeeze1.r},
                    {"phi1", panel.squeeze1.phi},
                    {"r2", panel.squeeze2.r},
                    {"phi2", panel.squeeze2.phi}});
  }
  ctx.result.summary["panels"] = rows;
}

void dispatch(Context& ctx) {
  Options o(ctx.scenario.options, ctx.scenario.name + ".options");
  switch (ctx.scenario.kind) {
    case ScenarioKind::classical: return run_classical(ctx, o);
    case ScenarioKind::covariance: return run_covariance(ctx, o);
    case ScenarioKind::stability_scan: return run_stability(ctx, o);
    case ScenarioKind::amplitude_scan: return run_amplitude(ctx, o);
    case ScenarioKind::power_sweep: return run_power(ctx, o);
    case ScenarioKind::mismatch_sweep: return run_mismatch(ctx, o);
    case ScenarioKind::thermal_sweep: return run_thermal(ctx, o);
    case ScenarioKind::wigner_panel: return run_wigner(ctx, o);
  }
}

}  // namespace

const char* to_string(ScenarioKind kind) {
  for (const auto& [k, name] : kKindNames)
    if (k == kind) return name;
  return "unknown";
}

ScenarioKind scenario_kind_from_string(const std::string& name) {
  for (const auto& [k, n] : kKindNames)
    if (name == n) return k;
  throw std::invalid_argument("unknown scenario kind '" + name + "'");
}

RunManifest parse_manifest(const json& doc) {
  require_keys(doc, {"schema_version", "output_dir", "seed", "tool_version", "scenarios"}, "manifest");
  RunManifest m;
  try {
    if (!doc.contains("schema_version")) throw ManifestError("manifest: missing schema_version");
    m.schema_version = doc.at("schema_version").get<int>();
    if (m.schema_version != kManifestSchemaVersion) {
      throw ManifestError("manifest: unsupported schema_version " + std::to_string(m.schema_version));
    }
    if (doc.contains("output_dir")) m.output_dir = doc.at("output_dir").get<std::string>();
    if (doc.contains("seed")) m.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("tool_version")) m.tool_version = doc.at("tool_version").get<std::string>();
    if (doc.contains("scenarios")) {
      const auto& list = doc.at("scenarios");
      if (!list.is_array()) throw ManifestError("manifest: scenarios must be a list");
      for (std::size_t i = 0; i < list.size(); ++i) {
        const auto& s = list[i];
        const std::string where = "scenarios[" + std::to_string(i) + "]";
        require_keys(s, {"name", "kind", "params", "options", "description"}, where);
        Scenario sc;
        if (!s.contains("name") || !s.contains("kind")) throw ManifestError(where + ": name and kind are required");
        sc.name = s.at("name").get<std::string>();
        if (sc.name.empty() || sc.name.find_first_of("/\\") != std::string::npos || sc.name == "." ||
            sc.name == "..") {
          throw ManifestError(where + ": invalid scenario name '" + sc.name + "'");
        }
        try {
          sc.kind = scenario_kind_from_string(s.at("kind").get<std::string>());
        } catch (const std::invalid_argument& e) {
          throw ManifestError(where + ": " + e.what());
        }
        if (s.contains("params")) {
          sc.params = s.at("params");
          try {
            (void)params_from_json(sc.params);
          } catch (const std::invalid_argument& e) {
            throw ManifestError(where + ".params: " + e.what());
          }
        }
        if (s.contains("options")) {
          sc.options = s.at("options");
          if (!sc.options.is_object()) throw ManifestError(where + ".options: expected an object");
        }
        if (s.contains("description")) sc.description = s.at("description").get<std::string>();
        m.scenarios.push_back(std::move(sc));
      }
    }
  } catch (const json::exception& e) {
    throw ManifestError(std::string("manifest: ") + e.what());
  }
  return m;
}

RunManifest load_manifest(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(io::read_file(path));
  } catch (const json::parse_error& e) {
    throw ManifestError(path.string() + ": " + e.what());
  } catch (const std::runtime_error& e) {
    throw ManifestError(e.what());
  }
  return parse_manifest(doc);
}

json manifest_to_json(const RunManifest& m) {
  json scenarios = json::array();
  for (const auto& s : m.scenarios) {
    json j{{"name", s.name}, {"kind", to_string(s.kind)}, {"params", s.params}, {"options", s.options}};
    if (!s.description.empty()) j["description"] = s.description;
    scenarios.push_back(j);
  }
  return {{"schema_version", m.schema_version},
          {"output_dir", m.output_dir},
          {"seed", m.seed},
          {"tool_version", m.tool_version},
          {"scenarios", scenarios}};
}

SystemParams scenario_params(const Scenario& scenario, const std::vector<std::string>& overrides) {
  SystemParams p = params_from_json(scenario.params);
  for (const auto& o : overrides) apply_override(p, o);
  return p;
}

std::vector<ManifestProblem> validate_manifest(const RunManifest& manifest, const std::vector<std::string>& overrides) {
  std::vector<ManifestProblem> problems;
  std::set<std::string> names;
  for (const auto& s : manifest.scenarios) {
    if (!names.insert(s.name).second) problems.push_back({s.name, "name", "duplicate scenario name", true});
    try {
      const auto report = validate(scenario_params(s, overrides));
      for (const auto& f : report.findings) {
        problems.push_back({s.name, f.field, f.message, f.severity == Severity::error});
      }
    } catch (const std::exception& e) {
      problems.push_back({s.name, "params", e.what(), true});
    }
  }
  return problems;
}

bool RunReport::ok() const {
  return std::all_of(scenarios.begin(), scenarios.end(), [](const ScenarioResult& r) { return r.ok; });
}

json RunReport::to_json(const RunManifest& manifest) const {
  json list = json::array();
  for (const auto& r : scenarios) {
    list.push_back({{"name", r.name},
                    {"kind", gainloss::to_string(r.kind)},
                    {"status", r.ok ? "ok" : "failed"},
                    {"error", r.ok ? json(nullptr) : json(r.error)},
                    {"outputs", r.outputs},
                    {"summary", r.summary}});
  }
  return {{"schema_version", kReportSchemaVersion},
          {"tool_version", manifest.tool_version},
          {"seed", manifest.seed},
          {"log_base", "e"},
          {"scenarios", list}};
}

RunReport run(const RunManifest& manifest, const RunOptions& options) {
  namespace fs = std::filesystem;
  const fs::path out_dir = options.output_dir.value_or(fs::path(manifest.output_dir));
  fs::create_directories(out_dir);

  RunReport report;
  report.scenarios.resize(manifest.scenarios.size());

  // Duplicate names would make outputs collide; fail those scenarios up front.
  std::set<std::string> seen, duplicates;
  for (const auto& s : manifest.scenarios)
    if (!seen.insert(s.name).second) duplicates.insert(s.name);

  const unsigned cap = options.workers ? options.workers : default_workers();
  const auto n = manifest.scenarios.size();
  const unsigned outer = static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(cap, n)));
  const unsigned inner = std::max(1u, cap / outer);

  parallel_for(n, outer, [&](std::size_t i) {
    const Scenario& sc = manifest.scenarios[i];
    ScenarioResult& res = report.scenarios[i];
    res.name = sc.name;
    res.kind = sc.kind;
    const auto start = std::chrono::steady_clock::now();
    try {
      if (duplicates.count(sc.name)) throw std::invalid_argument("duplicate scenario name");
      const SystemParams params = scenario_params(sc, options.overrides);
      const auto validation = validate(params);
      if (!validation.ok()) {
        std::string msg;
        for (const auto& f : validation.findings) {
          if (f.severity != Severity::error) continue;
          if (!msg.empty()) msg += "; ";
          msg += f.field + ": " + f.message;
        }
        throw std::invalid_argument("invalid parameters: " + msg);
      }
      Context ctx{out_dir, sc, params, inner, res};
      dispatch(ctx);
      res.ok = true;
    } catch (const std::exception& e) {
      res.ok = false;
      res.error = e.what();
    }
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });

  io::write_atomic(out_dir / "report.json", report.to_json(manifest).dump(2) + "\n");

  std::ostringstream log;
  const std::time_t now = std::time(nullptr);
  char stamp[64];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  log << "finished " << stamp << " workers " << cap << "\n";
  for (const auto& r : report.scenarios) {
    log << r.name << " " << (r.ok ? "ok" : "failed") << " " << r.wall_seconds << "s\n";
  }
  io::write_atomic(out_dir / "run.log", log.str());
  return report;
}

}  // namespace gainloss
