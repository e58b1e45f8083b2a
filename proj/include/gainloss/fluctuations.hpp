#pragma once

// Linearized quadrature fluctuations: drift and diffusion matrices, covariance
// propagation along the mean-field trajectory, and fixed-point stability.

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "gainloss/classical.hpp"
#include "gainloss/model.hpp"
#include "gainloss/ode.hpp"
#include "gainloss/smallmat.hpp"

namespace gainloss {

/// Fluctuation vector order: (dq1, dp1, dx1, dy1, dq2, dp2, dx2, dy2).
namespace quad {
inline constexpr int q1 = 0, p1 = 1, x1 = 2, y1 = 3, q2 = 4, p2 = 5, x2 = 6, y2 = 7;
}

using CovarianceMatrix = Mat8;

/// Sign of the dq_j -> dx_j coupling. `jacobian` is the linearization of the
/// mean-field equations (-sqrt2 g0 Im<a_j>). `flipped_sign` uses
/// +sqrt2 g0 Im<a_j>, which does not follow from those equations; comparison
/// runs only.
enum class DriftConvention { jacobian, flipped_sign };

const char* to_string(DriftConvention c);
DriftConvention drift_convention_from_string(const std::string& name);

template <typename Scalar>
Mat<Scalar, 8> drift_matrix(const StateT<Scalar>& s, const SystemParams& p,
                            DriftConvention convention = DriftConvention::jacobian) {
  const double r2 = std::sqrt(2.0);
  const double omega[2] = {p.omega_m1, p.omega_m2};
  const double gamma[2] = {p.gamma_m1, p.gamma_m2};
  const double delta[2] = {p.delta1, p.delta2};
  const double im_sign = convention == DriftConvention::jacobian ? -1.0 : 1.0;
  Mat<Scalar, 8> a = Mat<Scalar, 8>::Zero();
  for (int j = 0; j < 2; ++j) {
    const int o = 4 * j;
    const Scalar re = s(o), im = s(o + 1), q = s(o + 2);
    const Scalar detuning = delta[j] + p.g0 * q;
    a(o, o + 1) = Scalar(omega[j]);
    a(o + 1, o) = Scalar(-omega[j]);
    a(o + 1, o + 1) = Scalar(-gamma[j]);
    a(o + 1, o + 2) = r2 * p.g0 * re;
    a(o + 1, o + 3) = r2 * p.g0 * im;
    a(o + 2, o) = im_sign * r2 * p.g0 * im;
    a(o + 2, o + 2) = Scalar(-p.kappa);
    a(o + 2, o + 3) = -detuning;
    a(o + 3, o) = r2 * p.g0 * re;
    a(o + 3, o + 2) = detuning;
    a(o + 3, o + 3) = Scalar(-p.kappa);
  }
  a(quad::p1, quad::q2) = Scalar(p.j_coupling);
  a(quad::p2, quad::q1) = Scalar(p.j_coupling);
  return a;
}

/// Diagonal diffusion: gamma_mj (2 n + 1) on dp_j, kappa on both optical quadratures.
Mat8 noise_matrix(const SystemParams& p);

/// 36 upper-triangle entries, row-major.
inline constexpr int kPackedSize = 36;
using PackedCov = std::array<double, kPackedSize>;
PackedCov pack(const Mat8& v);
Mat8 unpack(const PackedCov& packed);
/// Column labels V_<ab><jk> for the packed entries, e.g. V_qp11, V_qq12.
std::vector<std::string> packed_labels();

Mat2 mode_block(const Mat8& v, int first_index);

struct PropagateOptions {
  OdeTolerances tol{};
  ClassicalState init = ClassicalState::Zero();
  std::optional<Mat8> v0;  // default 1/2 identity
  DriftConvention convention = DriftConvention::jacobian;
  /// Abort when the smallest symplectic eigenvalue drops below
  /// 0.5 - physicality_tolerance at an output sample.
  double physicality_tolerance = 5e-2;
  /// Explicit output times (ascending, starting at 0); overrides the uniform grid.
  std::vector<double> sample_times;
};

/// Thrown when the covariance stops describing a quantum state.
class PhysicalityError : public std::runtime_error {
 public:
  PhysicalityError(const std::string& what, double t, double nu_min)
      : std::runtime_error(what), t_(t), nu_min_(nu_min) {}
  double t() const { return t_; }
  double nu_min() const { return nu_min_; }

 private:
  double t_, nu_min_;
};

struct CovarianceTrajectory {
  std::vector<double> t;
  std::vector<ClassicalState> states;
  std::vector<Mat8> covariances;      // symmetrized at output
  std::vector<double> min_symplectic; // smallest symplectic eigenvalue per sample
  std::vector<double> max_asymmetry;  // max |V - V^T| before symmetrization
  OdeStats stats;
  bool divergent = false;

  std::size_t size() const { return t.size(); }
};

CovarianceTrajectory propagate(const SystemParams& params, double t_end, double dt_out,
                               const PropagateOptions& options = {});

/// Right-hand side dV/dt = A V + V A^T + N, exposed for the frozen-drift tests.
Mat8 lyapunov_rhs(const Mat8& a, const Mat8& v, const Mat8& n);

inline constexpr double kStabilityDeadBand = 1e-8;

struct StabilityPoint {
  double drive = 0.0;
  double max_re_eig = 0.0;
  bool stable = false;
  bool converged = false;
  ClassicalState fixed_point = ClassicalState::Zero();
  std::string error;
};

struct StabilityOptions {
  DriftConvention convention = DriftConvention::jacobian;
  unsigned workers = 0;
};

/// Drift-matrix spectrum at the algebraic fixed point for each drive.
std::vector<StabilityPoint> stability_scan(const SystemParams& params, const std::vector<double>& drives,
                                           const StabilityOptions& options = {});

}  // namespace gainloss
