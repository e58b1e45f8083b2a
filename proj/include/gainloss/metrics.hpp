#pragma once

// Diagnostics of the mechanical Gaussian state: phase synchronization,
// logarithmic negativity, Wigner surfaces, fidelity, squeezing.

#include <optional>
#include <vector>

#include "gainloss/classical.hpp"
#include "gainloss/fluctuations.hpp"
#include "gainloss/smallmat.hpp"

namespace gainloss {

/// Rows/columns (dq1, dp1, dq2, dp2) of the full covariance.
Mat4 mechanical_submatrix(const Mat8& v);

struct PhaseSync {
  double s_p = 0.0;
  double p_minus_var = 0.0;  // <dp'_-^2>
  double q_minus_var = 0.0;  // <dq'_-^2>, diagnostic only
};

/// Rotates each mechanical sector into the frame of its mean phase and
/// returns S_p = 1 / (2 <dp'_-^2>). Throws when <dp'_-^2> < 1e-15.
PhaseSync phase_sync(const Mat4& vp, double phi1, double phi2);

struct Negativity {
  double e_n = 0.0;       // natural log
  double nu_minus = 0.0;  // smallest symplectic eigenvalue of the partial transpose
};

/// Throws std::domain_error when the input yields a complex nu_minus.
Negativity log_negativity(const Mat4& vp);

struct WignerSpec {
  double q_min = -5, q_max = 5;
  double p_min = -5, p_max = 5;
  int nq = 201, np = 201;
};

struct WignerGrid {
  WignerSpec spec;
  Eigen::MatrixXd values;  // values(i, k) at (q_i, p_k)

  double q(int i) const;
  double p(int k) const;
  double dq() const;
  double dp() const;
};

/// Zero-mean single-mode Gaussian Wigner function on a grid.
double wigner_at(const Mat2& vm, double q, double p);
WignerGrid wigner(const Mat2& vm, const WignerSpec& spec);
/// Square grid covering +-n_sigma standard deviations of the wider axis.
WignerSpec covering_grid(const Mat2& vm, double n_sigma = 6.0, int points = 201);

/// Single-mode Gaussian fidelity.
double fidelity(const Mat2& v1, const Mat2& v2, const Vec2& u1 = Vec2::Zero(), const Vec2& u2 = Vec2::Zero());

struct SqueezeRotation {
  double r = 0.0;
  double phi = 0.0;  // [0, pi), angle of the squeezed axis
  double n_eff = 0.0;
};

/// Decomposes vm = (2 n_eff + 1) R(phi) diag(e^{-2r}, e^{2r}) R(phi)^T / 2.
SqueezeRotation squeeze_rotation(const Mat2& vm);
Mat2 compose_squeezed(const SqueezeRotation& s);

/// Trapezoidal mean of y over [t_start, t_end], interpolating at the edges.
double time_average(const std::vector<double>& t, const std::vector<double>& y, double t_start, double t_end);
/// Mean over the trailing fraction of the series (default: last half).
double trailing_average(const std::vector<double>& t, const std::vector<double>& y, double fraction = 0.5);

struct MetricSample {
  double t = 0.0;
  std::optional<double> s_p;
  double e_n = 0.0;
  double nu_minus = 0.0;
  double r1 = 0.0, phi1 = 0.0, r2 = 0.0, phi2 = 0.0;
  double fidelity = 0.0;  // between the two mechanical modes
  double sync_ratio = 0.0;  // <dq'_-^2> / <dp'_-^2>
  double amplitude1 = 0.0, amplitude2 = 0.0;  // |(q_j, p_j)| of the mean
};

struct MetricSeries {
  std::vector<MetricSample> samples;

  std::vector<double> times() const;
  std::vector<double> s_p() const;  // gaps (failed S_p) are skipped by callers via has_s_p
  std::vector<double> e_n() const;
};

MetricSeries compute_metric_series(const CovarianceTrajectory& traj);

}  // namespace gainloss
