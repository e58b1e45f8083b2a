#include "gainloss/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gainloss {

Mat4 mechanical_submatrix(const Mat8& v) {
  static constexpr int idx[4] = {quad::q1, quad::p1, quad::q2, quad::p2};
  Mat4 out;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) out(i, j) = v(idx[i], idx[j]);
  return out;
}

PhaseSync phase_sync(const Mat4& vp, double phi1, double phi2) {
  // (dq', dp') = R(phi)^T-style frame change: dq' = c dq + s dp, dp' = c dp - s dq.
  Mat4 frame = Mat4::Zero();
  const double phi[2] = {phi1, phi2};
  for (int j = 0; j < 2; ++j) {
    const double c = std::cos(phi[j]), s = std::sin(phi[j]);
    frame.block<2, 2>(2 * j, 2 * j) << c, s, -s, c;
  }
  const Mat4 w = frame * vp * frame.transpose();
  PhaseSync out;
  out.p_minus_var = 0.5 * (w(1, 1) + w(3, 3) - 2.0 * w(1, 3));
  out.q_minus_var = 0.5 * (w(0, 0) + w(2, 2) - 2.0 * w(0, 2));
  if (!(out.p_minus_var >= 1e-15)) {
    throw std::domain_error("phase_sync: momentum-difference variance collapsed");
  }
  out.s_p = 0.5 / out.p_minus_var;
  return out;
}

Negativity log_negativity(const Mat4& vp) {
  const double sigma = det(Mat2(vp.block<2, 2>(0, 0))) + det(Mat2(vp.block<2, 2>(2, 2))) -
                      2.0 * det(Mat2(vp.block<2, 2>(0, 2)));
  const double d = det(vp);
  double disc = sigma * sigma - 4.0 * d;
  if (disc < -1e-12 * std::max(1.0, sigma * sigma)) {
    throw std::domain_error("log_negativity: complex symplectic eigenvalue (unphysical covariance)");
  }
  disc = std::max(0.0, disc);
  const double inner = 0.5 * (sigma - std::sqrt(disc));
  if (inner < 0) throw std::domain_error("log_negativity: negative squared symplectic eigenvalue");
  Negativity out;
  out.nu_minus = std::sqrt(inner);
  out.e_n = std::max(0.0, -std::log(2.0 * out.nu_minus));
  return out;
}

double WignerGrid::dq() const { return spec.nq > 1 ? (spec.q_max - spec.q_min) / (spec.nq - 1) : 0.0; }
double WignerGrid::dp() const { return spec.np > 1 ? (spec.p_max - spec.p_min) / (spec.np - 1) : 0.0; }
double WignerGrid::q(int i) const { return spec.q_min + i * dq(); }
double WignerGrid::p(int k) const { return spec.p_min + k * dp(); }

namespace {

void require_positive_definite(const Mat2& v, const char* who) {
  if (std::abs(v(0, 1) - v(1, 0)) > 1e-10 * std::max(1.0, v.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument(std::string(who) + ": covariance not symmetric");
  }
  if (!(v(0, 0) > 0) || !(det(v) > 0)) {
    throw std::invalid_argument(std::string(who) + ": covariance not positive definite");
  }
}

}  // namespace

double wigner_at(const Mat2& vm, double q, double p) {
  require_positive_definite(vm, "wigner");
  const Vec2 u(q, p);
  const double quad_form = u.dot(vm.inverse() * u);
  return std::exp(-0.5 * quad_form) / (2.0 * std::numbers::pi * std::sqrt(det(vm)));
}

WignerGrid wigner(const Mat2& vm, const WignerSpec& spec) {
  require_positive_definite(vm, "wigner");
  if (spec.nq < 1 || spec.np < 1 || !(spec.q_max >= spec.q_min) || !(spec.p_max >= spec.p_min)) {
    throw std::invalid_argument("wigner: bad grid");
  }
  WignerGrid g;
  g.spec = spec;
  g.values.resize(spec.nq, spec.np);
  const Mat2 inv = vm.inverse();
  const double norm = 1.0 / (2.0 * std::numbers::pi * std::sqrt(det(vm)));
  for (int i = 0; i < spec.nq; ++i)
    for (int k = 0; k < spec.np; ++k) {
      const Vec2 u(g.q(i), g.p(k));
      g.values(i, k) = norm * std::exp(-0.5 * u.dot(inv * u));
    }
  return g;
}

WignerSpec covering_grid(const Mat2& vm, double n_sigma, int points) {
  const double half = n_sigma * std::sqrt(std::max(vm(0, 0), vm(1, 1)));
  WignerSpec spec;
  spec.q_min = spec.p_min = -half;
  spec.q_max = spec.p_max = half;
  spec.nq = spec.np = points;
  return spec;
}

double fidelity(const Mat2& v1, const Mat2& v2, const Vec2& u1, const Vec2& u2) {
  require_positive_definite(v1, "fidelity");
  require_positive_definite(v2, "fidelity");
  const Mat2 sum = v1 + v2;
  const double big_delta = det(sum);
  const double small_delta = std::max(0.0, 4.0 * (det(v1) - 0.25) * (det(v2) - 0.25));
  const Vec2 du = u1 - u2;
  const double expo = std::exp(-0.5 * du.dot(sum.inverse() * du));
  return expo / (std::sqrt(big_delta + small_delta) - std::sqrt(small_delta));
}

SqueezeRotation squeeze_rotation(const Mat2& vm) {
  const auto eig = sym_eig_2x2(vm);
  const double l1 = eig.eigvals(0), l2 = eig.eigvals(1);
  if (!(l1 > 0)) throw std::invalid_argument("squeeze_rotation: covariance not positive definite");
  SqueezeRotation out;
  out.n_eff = 0.5 * (2.0 * std::sqrt(l1 * l2) - 1.0);
  out.r = 0.25 * std::log(l2 / l1);
  out.phi = eig.angle;
  return out;
}

Mat2 compose_squeezed(const SqueezeRotation& s) {
  const Mat2 rot = rotation(s.phi);
  Mat2 d = Mat2::Zero();
  d(0, 0) = std::exp(-2.0 * s.r);
  d(1, 1) = std::exp(2.0 * s.r);
  return 0.5 * (2.0 * s.n_eff + 1.0) * rot * d * rot.transpose();
}

namespace {

double interpolate(const std::vector<double>& t, const std::vector<double>& y, double x) {
  const auto it = std::lower_bound(t.begin(), t.end(), x);
  const auto k = static_cast<std::size_t>(it - t.begin());
  if (k == 0) return y.front();
  if (k == t.size()) return y.back();
  const double w = (x - t[k - 1]) / (t[k] - t[k - 1]);
  return y[k - 1] + w * (y[k] - y[k - 1]);
}

}  // namespace

double time_average(const std::vector<double>& t, const std::vector<double>& y, double t_start, double t_end) {
  if (t.size() != y.size()) throw std::invalid_argument("time_average: size mismatch");
  if (t.size() < 2 || !(t_start < t_end) || t_start < t.front() - 1e-12 || t_end > t.back() + 1e-12) {
    throw std::invalid_argument("time_average: empty or out-of-range window");
  }
  double area = 0.0;
  double t_prev = t_start;
  double y_prev = interpolate(t, y, t_start);
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k] <= t_start) continue;
    if (t[k] >= t_end) break;
    area += 0.5 * (y_prev + y[k]) * (t[k] - t_prev);
    t_prev = t[k];
    y_prev = y[k];
  }
  area += 0.5 * (y_prev + interpolate(t, y, t_end)) * (t_end - t_prev);
  return area / (t_end - t_start);
}

double trailing_average(const std::vector<double>& t, const std::vector<double>& y, double fraction) {
  if (t.size() < 2) throw std::invalid_argument("trailing_average: series too short");
  if (!(fraction > 0) || fraction > 1) throw std::invalid_argument("trailing_average: fraction outside (0, 1]");
  const double span = t.back() - t.front();
  return time_average(t, y, t.back() - fraction * span, t.back());
}

std::vector<double> MetricSeries::times() const {
  std::vector<double> out;
  for (const auto& s : samples) out.push_back(s.t);
  return out;
}

std::vector<double> MetricSeries::s_p() const {
  std::vector<double> out;
  for (const auto& s : samples) out.push_back(s.s_p.value_or(0.0));
  return out;
}

std::vector<double> MetricSeries::e_n() const {
  std::vector<double> out;
  for (const auto& s : samples) out.push_back(s.e_n);
  return out;
}

MetricSeries compute_metric_series(const CovarianceTrajectory& traj) {
  MetricSeries series;
  series.samples.reserve(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    MetricSample m;
    m.t = traj.t[k];
    const Mat8& v = traj.covariances[k];
    const Mat4 vp = mechanical_submatrix(v);
    const auto& s = traj.states[k];
    try {
      const auto sync = phase_sync(vp, mean_phase(s, 1), mean_phase(s, 2));
      m.s_p = sync.s_p;
      m.sync_ratio = sync.q_minus_var / sync.p_minus_var;
    } catch (const std::domain_error&) {
    }
    const auto neg = log_negativity(vp);
    m.e_n = neg.e_n;
    m.nu_minus = neg.nu_minus;
    const Mat2 v1 = mode_block(v, quad::q1), v2 = mode_block(v, quad::q2);
    const auto sq1 = squeeze_rotation(v1), sq2 = squeeze_rotation(v2);
    m.r1 = sq1.r;
    m.phi1 = sq1.phi;
    m.r2 = sq2.r;
    m.phi2 = sq2.phi;
    m.fidelity = fidelity(v1, v2);
    m.amplitude1 = std::hypot(s(slot::q1), s(slot::p1));
    m.amplitude2 = std::hypot(s(slot::q2), s(slot::p2));
    series.samples.push_back(m);
  }
  return series;
}

}  // namespace gainloss
