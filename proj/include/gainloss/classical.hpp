#pragma once

// Mean-field dynamics of the two driven cavities and their mechanical modes.

#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gainloss/model.hpp"
#include "gainloss/ode.hpp"
#include "gainloss/smallmat.hpp"

namespace gainloss {

/// Slot layout of the mean-field state vector.
namespace slot {
inline constexpr int re_a1 = 0;
inline constexpr int im_a1 = 1;
inline constexpr int q1 = 2;
inline constexpr int p1 = 3;
inline constexpr int re_a2 = 4;
inline constexpr int im_a2 = 5;
inline constexpr int q2 = 6;
inline constexpr int p2 = 7;

/// Offset of oscillator j (1 or 2) within the state.
constexpr int base(int j) { return 4 * (j - 1); }
}  // namespace slot

template <typename Scalar>
using StateT = Eigen::Matrix<Scalar, 8, 1>;
using ClassicalState = StateT<double>;

inline std::complex<double> cavity_field(const ClassicalState& s, int j) {
  return {s(slot::base(j) + 0), s(slot::base(j) + 1)};
}

/// Time derivative of the mean-field equations:
///   d<a_j>/dt = -(kappa - i Delta_j) <a_j> + i g0 <q_j><a_j> + E
///   d<q_j>/dt = omega_mj <p_j>
///   d<p_j>/dt = -omega_mj <q_j> - gamma_mj <p_j> + J <q_{3-j}> + g0 |<a_j>|^2
template <typename Scalar>
StateT<Scalar> rhs(const StateT<Scalar>& s, const SystemParams& p) {
  StateT<Scalar> d;
  const double omega[2] = {p.omega_m1, p.omega_m2};
  const double delta[2] = {p.delta1, p.delta2};
  const double gamma[2] = {p.gamma_m1, p.gamma_m2};
  for (int j = 0; j < 2; ++j) {
    const int o = 4 * j;
    const int other = 4 * (1 - j);
    const Scalar& re = s(o + 0);
    const Scalar& im = s(o + 1);
    const Scalar& q = s(o + 2);
    const Scalar& mom = s(o + 3);
    // -(kappa - i Delta) a + i g0 q a, split into real and imaginary parts.
    const Scalar detuning = delta[j] + p.g0 * q;
    d(o + 0) = -p.kappa * re - detuning * im + p.drive;
    d(o + 1) = -p.kappa * im + detuning * re;
    d(o + 2) = omega[j] * mom;
    d(o + 3) = -omega[j] * q - gamma[j] * mom + p.j_coupling * s(other + 2) + p.g0 * (re * re + im * im);
  }
  return d;
}

/// Analytic Jacobian of rhs with respect to the state.
Mat8 rhs_jacobian(const ClassicalState& s, const SystemParams& p);

struct ClassicalTrajectory {
  std::vector<double> t;
  std::vector<ClassicalState> states;
  OdeStats stats;
  bool divergent = false;
  double t_halt = 0.0;  // last accepted time when divergent

  std::size_t size() const { return t.size(); }
};

struct IntegrateOptions {
  OdeTolerances tol{};
  ClassicalState init = ClassicalState::Zero();
};

/// Samples the trajectory on uniform_grid(t_end, dt_out). Throws
/// IntegrationError on step-size collapse.
ClassicalTrajectory integrate(const SystemParams& params, double t_end, double dt_out,
                              const IntegrateOptions& options = {});

enum class Regime { decaying, growing, limit_cycle, divergent };

const char* to_string(Regime r);

struct RegimeReport {
  Regime regime = Regime::decaying;
  double amplitude1 = 0.0;  // half peak-to-peak of q1 over the trailing window
  double amplitude2 = 0.0;
  std::optional<double> decay_rate;   // envelope rate (positive = decaying)
  std::optional<double> fit_r2;       // worst R^2 of the two envelope fits
  std::optional<double> locked_phase; // mean phase difference phi2 - phi1, limit cycle only
};

struct ClassifyOptions {
  double amplitude_floor = 1e-3;
  double stationarity = 0.02;  // relative amplitude change between trailing windows
  double min_r2 = 0.9;
};

/// Regime of a trajectory judged over its trailing windows. Throws
/// std::invalid_argument when the trajectory spans less than three windows.
RegimeReport classify(const ClassicalTrajectory& traj, double window, const ClassifyOptions& options = {});

/// Envelope fit helper exposed for testing: log-linear least squares on the
/// half peak-to-peak excursions between successive extrema of `x`.
struct EnvelopeFit {
  std::size_t points = 0;
  double rate = 0.0;  // positive = decaying
  double r2 = 0.0;
};
EnvelopeFit fit_envelope(const std::vector<double>& t, const std::vector<double>& x, double t_from = -1e300);

/// atan2(<p_j>, <q_j>) mapped to [0, 2 pi); 0 at the origin.
double mean_phase(const ClassicalState& s, int j);

/// Fixed point of the mean-field equations by damped Newton iteration.
struct FixedPoint {
  ClassicalState state = ClassicalState::Zero();
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
};
FixedPoint steady_state(const SystemParams& params, const std::optional<ClassicalState>& guess = std::nullopt);

struct ScanPoint {
  double drive = 0.0;
  std::optional<RegimeReport> report;
  std::string error;  // non-empty when the integration failed
};

struct AmplitudeScan {
  std::vector<ScanPoint> points;
  std::optional<double> e_p;   // smallest drive not classified as decaying
  std::optional<double> e_lc;  // smallest drive classified as a limit cycle
};

struct ScanOptions {
  double dt_out = 0.05;
  OdeTolerances tol{};
  ClassifyOptions classify{};
  bool refine = false;  // bisect E_p down to 1 omega_m
  unsigned workers = 0; // 0 = default worker count
};

AmplitudeScan amplitude_scan(const SystemParams& params, const std::vector<double>& drives, double t_end,
                             double window, const ScanOptions& options = {});

}  // namespace gainloss
