#include "gainloss/classical.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "gainloss/parallel.hpp"

namespace gainloss {

Mat8 rhs_jacobian(const ClassicalState& s, const SystemParams& p) {
  Mat8 jac = Mat8::Zero();
  const double omega[2] = {p.omega_m1, p.omega_m2};
  const double delta[2] = {p.delta1, p.delta2};
  const double gamma[2] = {p.gamma_m1, p.gamma_m2};
  for (int j = 0; j < 2; ++j) {
    const int o = 4 * j;
    const int other = 4 * (1 - j);
    const double re = s(o), im = s(o + 1), q = s(o + 2);
    const double detuning = delta[j] + p.g0 * q;
    jac(o, o) = -p.kappa;
    jac(o, o + 1) = -detuning;
    jac(o, o + 2) = -p.g0 * im;
    jac(o + 1, o) = detuning;
    jac(o + 1, o + 1) = -p.kappa;
    jac(o + 1, o + 2) = p.g0 * re;
    jac(o + 2, o + 3) = omega[j];
    jac(o + 3, o) = 2.0 * p.g0 * re;
    jac(o + 3, o + 1) = 2.0 * p.g0 * im;
    jac(o + 3, o + 2) = -omega[j];
    jac(o + 3, o + 3) = -gamma[j];
    jac(o + 3, other + 2) = p.j_coupling;
  }
  return jac;
}

ClassicalTrajectory integrate(const SystemParams& params, double t_end, double dt_out,
                              const IntegrateOptions& options) {
  const auto grid = uniform_grid(t_end, dt_out);
  ClassicalTrajectory traj;
  traj.t.reserve(grid.size());
  traj.states.reserve(grid.size());

  using Array = std::array<double, 8>;
  Array x0;
  Eigen::Map<ClassicalState>(x0.data()) = options.init;

  auto system = [&params](const Array& x, Array& dxdt, double) {
    Eigen::Map<ClassicalState>(dxdt.data()) = rhs<double>(Eigen::Map<const ClassicalState>(x.data()), params);
  };
  auto observer = [&traj](double t, const Array& x) {
    traj.t.push_back(t);
    traj.states.emplace_back(Eigen::Map<const ClassicalState>(x.data()));
  };

  const auto outcome = integrate_sampled<8>(system, x0, grid, options.tol, observer);
  traj.stats = outcome.stats;
  traj.divergent = outcome.status == OdeStatus::diverged;
  traj.t_halt = outcome.t_last;
  return traj;
}

const char* to_string(Regime r) {
  switch (r) {
    case Regime::decaying: return "decaying";
    case Regime::growing: return "growing";
    case Regime::limit_cycle: return "limit_cycle";
    case Regime::divergent: return "divergent";
  }
  return "unknown";
}

namespace {

struct Envelope {
  std::vector<double> t;
  std::vector<double> value;
};

// Half the excursion between successive turning points, stamped at their midpoint.
Envelope extract_envelope(const std::vector<double>& t, const std::vector<double>& x) {
  std::vector<std::size_t> turns;
  for (std::size_t k = 1; k + 1 < x.size(); ++k) {
    const double left = x[k] - x[k - 1];
    const double right = x[k + 1] - x[k];
    if (left * right < 0) turns.push_back(k);
  }
  Envelope env;
  for (std::size_t i = 0; i + 1 < turns.size(); ++i) {
    env.t.push_back(0.5 * (t[turns[i]] + t[turns[i + 1]]));
    env.value.push_back(0.5 * std::abs(x[turns[i + 1]] - x[turns[i]]));
  }
  return env;
}

EnvelopeFit log_linear_fit(const std::vector<double>& t, const std::vector<double>& v, double t_from) {
  double n = 0, st = 0, sy = 0, stt = 0, sty = 0;
  std::vector<std::pair<double, double>> pts;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k] <= t_from || !(v[k] > 0)) continue;
    pts.emplace_back(t[k], std::log(v[k]));
  }
  EnvelopeFit fit;
  fit.points = pts.size();
  if (pts.size() < 3) return fit;
  for (const auto& [tk, yk] : pts) {
    n += 1;
    st += tk;
    sy += yk;
  }
  const double t_mean = st / n, y_mean = sy / n;
  for (const auto& [tk, yk] : pts) {
    stt += (tk - t_mean) * (tk - t_mean);
    sty += (tk - t_mean) * (yk - y_mean);
  }
  if (stt == 0) return fit;
  const double slope = sty / stt;
  double ss_res = 0, ss_tot = 0;
  for (const auto& [tk, yk] : pts) {
    const double r = yk - (y_mean + slope * (tk - t_mean));
    ss_res += r * r;
    ss_tot += (yk - y_mean) * (yk - y_mean);
  }
  fit.rate = -slope;
  fit.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

double half_peak_to_peak(const ClassicalTrajectory& traj, int index, double lo, double hi) {
  double mn = INFINITY, mx = -INFINITY;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (traj.t[k] <= lo || traj.t[k] > hi) continue;
    mn = std::min(mn, traj.states[k](index));
    mx = std::max(mx, traj.states[k](index));
  }
  return mx >= mn ? 0.5 * (mx - mn) : 0.0;
}

std::vector<double> component(const ClassicalTrajectory& traj, int index) {
  std::vector<double> out(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) out[k] = traj.states[k](index);
  return out;
}

double interp(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  if (xs.empty()) return 0.0;
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const auto k = static_cast<std::size_t>(it - xs.begin());
  const double w = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
  return ys[k - 1] + w * (ys[k] - ys[k - 1]);
}

}  // namespace

EnvelopeFit fit_envelope(const std::vector<double>& t, const std::vector<double>& x, double t_from) {
  const auto env = extract_envelope(t, x);
  return log_linear_fit(env.t, env.value, t_from);
}

RegimeReport classify(const ClassicalTrajectory& traj, double window, const ClassifyOptions& options) {
  if (!(window > 0)) throw std::invalid_argument("classify: window must be positive");
  RegimeReport report;
  if (traj.divergent) {
    report.regime = Regime::divergent;
    return report;
  }
  if (traj.size() < 2 || traj.t.back() - traj.t.front() < 3.0 * window * (1 - 1e-12)) {
    throw std::invalid_argument("classify: window longer than trajectory allows (needs three windows)");
  }

  const double t_end = traj.t.back();
  double last[2], prev[2];
  for (int j = 1; j <= 2; ++j) {
    const int q = slot::base(j) + 2;
    last[j - 1] = half_peak_to_peak(traj, q, t_end - window, t_end);
    prev[j - 1] = half_peak_to_peak(traj, q, t_end - 2 * window, t_end - window);
  }
  report.amplitude1 = last[0];
  report.amplitude2 = last[1];

  bool stationary = true;
  for (int j = 0; j < 2; ++j) {
    if (!(last[j] > options.amplitude_floor)) stationary = false;
    else if (std::abs(last[j] - prev[j]) >= options.stationarity * last[j]) stationary = false;
  }
  if (stationary) {
    report.regime = Regime::limit_cycle;
    double sx = 0, sy = 0;
    for (std::size_t k = 0; k < traj.size(); ++k) {
      if (traj.t[k] <= t_end - window) continue;
      const double d = mean_phase(traj.states[k], 2) - mean_phase(traj.states[k], 1);
      sx += std::cos(d);
      sy += std::sin(d);
    }
    double locked = std::atan2(sy, sx);
    if (locked < 0) locked += 2 * std::numbers::pi;
    report.locked_phase = locked;
    return report;
  }

  // Combined envelope sqrt(A1^2 + A2^2) removes the slow energy exchange
  // between the coupled oscillators; the first window is skipped as transient.
  const auto env1 = extract_envelope(traj.t, component(traj, slot::q1));
  const auto env2 = extract_envelope(traj.t, component(traj, slot::q2));
  Envelope combined;
  for (std::size_t k = 0; k < env1.t.size(); ++k) {
    const double a2 = interp(env2.t, env2.value, env1.t[k]);
    combined.t.push_back(env1.t[k]);
    combined.value.push_back(std::hypot(env1.value[k], a2));
  }
  const auto fit = log_linear_fit(combined.t, combined.value, traj.t.front() + window);

  if (fit.points >= 3) {
    report.decay_rate = fit.rate;
    report.fit_r2 = fit.r2;
    if (fit.r2 > options.min_r2) {
      report.regime = fit.rate > 0 ? Regime::decaying : Regime::growing;
      return report;
    }
  }
  // No clean exponential: fall back on the trend between the trailing windows.
  const double now = std::hypot(last[0], last[1]);
  const double before = std::hypot(prev[0], prev[1]);
  report.regime = now > before ? Regime::growing : Regime::decaying;
  return report;
}

double mean_phase(const ClassicalState& s, int j) {
  const double q = s(slot::base(j) + 2);
  const double p = s(slot::base(j) + 3);
  if (std::abs(q) < 1e-15 && std::abs(p) < 1e-15) return 0.0;
  double phi = std::atan2(p, q);
  if (phi < 0) phi += 2 * std::numbers::pi;
  if (phi >= 2 * std::numbers::pi) phi = 0.0;
  return phi;
}

FixedPoint steady_state(const SystemParams& params, const std::optional<ClassicalState>& guess) {
  FixedPoint fp;
  ClassicalState x;
  if (guess) {
    x = *guess;
  } else {
    // Linear-cavity estimate, then the static radiation-pressure displacement.
    x.setZero();
    const double delta[2] = {params.delta1, params.delta2};
    for (int j = 0; j < 2; ++j) {
      const std::complex<double> a = params.drive / std::complex<double>(params.kappa, -delta[j]);
      x(4 * j) = a.real();
      x(4 * j + 1) = a.imag();
    }
    Eigen::Matrix2d k;
    k << params.omega_m1, -params.j_coupling, -params.j_coupling, params.omega_m2;
    Eigen::Vector2d force(params.g0 * std::norm(std::complex<double>(x(0), x(1))),
                          params.g0 * std::norm(std::complex<double>(x(4), x(5))));
    const Eigen::Vector2d q = k.partialPivLu().solve(force);
    x(slot::q1) = q(0);
    x(slot::q2) = q(1);
  }

  auto residual = [&](const ClassicalState& s) { return rhs<double>(s, params).norm(); };
  double r = residual(x);
  const double scale = 1.0 + params.drive;
  for (fp.iterations = 0; fp.iterations < 100 && r > 1e-12 * scale; ++fp.iterations) {
    const ClassicalState f = rhs<double>(x, params);
    const ClassicalState step = rhs_jacobian(x, params).partialPivLu().solve(-f);
    double lambda = 1.0;
    ClassicalState trial = x + step;
    double r_trial = residual(trial);
    while (r_trial > r && lambda > 1e-6) {
      lambda *= 0.5;
      trial = x + lambda * step;
      r_trial = residual(trial);
    }
    if (!(r_trial < r) && r_trial > 1e-12 * scale) break;
    x = trial;
    r = r_trial;
  }
  fp.state = x;
  fp.residual = r;
  fp.converged = std::isfinite(r) && r <= 1e-9 * scale;
  return fp;
}

AmplitudeScan amplitude_scan(const SystemParams& params, const std::vector<double>& drives, double t_end,
                             double window, const ScanOptions& options) {
  if (drives.empty()) throw std::invalid_argument("amplitude_scan: no drives");
  if (!std::is_sorted(drives.begin(), drives.end())) {
    throw std::invalid_argument("amplitude_scan: drives must be ascending");
  }

  auto run_point = [&](double drive) {
    ScanPoint point;
    point.drive = drive;
    SystemParams p = params;
    p.drive = drive;
    try {
      IntegrateOptions io;
      io.tol = options.tol;
      const auto traj = integrate(p, t_end, options.dt_out, io);
      point.report = classify(traj, window, options.classify);
    } catch (const std::exception& e) {
      point.error = e.what();
    }
    return point;
  };

  AmplitudeScan scan;
  scan.points.resize(drives.size());
  parallel_for(drives.size(), options.workers, [&](std::size_t i) { scan.points[i] = run_point(drives[i]); });

  std::optional<double> last_decaying;
  for (const auto& pt : scan.points) {
    if (!pt.report) continue;
    if (pt.report->regime == Regime::decaying) {
      if (!scan.e_p) last_decaying = pt.drive;
      continue;
    }
    if (!scan.e_p) scan.e_p = pt.drive;
    if (!scan.e_lc && pt.report->regime == Regime::limit_cycle) scan.e_lc = pt.drive;
  }

  if (options.refine && scan.e_p && last_decaying) {
    double lo = *last_decaying, hi = *scan.e_p;
    while (hi - lo > 1.0) {
      const double mid = 0.5 * (lo + hi);
      const auto pt = run_point(mid);
      const bool decaying = pt.report && pt.report->regime == Regime::decaying;
      (decaying ? lo : hi) = mid;
    }
    scan.e_p = hi;
  }
  return scan;
}

}  // namespace gainloss
