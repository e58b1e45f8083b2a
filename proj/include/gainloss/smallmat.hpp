#pragma once

// Small dense linear algebra (n <= 8) used by every other module.
// Backed by Eigen; this header is the only linear-algebra surface the rest of
// the library touches, so tolerances live here.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace gainloss {

template <typename Scalar, int N>
using Mat = Eigen::Matrix<Scalar, N, N>;
template <typename Scalar, int N>
using Vec = Eigen::Matrix<Scalar, N, 1>;

using Mat2 = Mat<double, 2>;
using Mat4 = Mat<double, 4>;
using Mat8 = Mat<double, 8>;
using Vec2 = Vec<double, 2>;

/// Thrown when an iterative decomposition fails; carries the offending matrix.
class DecompositionError : public std::runtime_error {
 public:
  DecompositionError(const std::string& what, Eigen::MatrixXd m)
      : std::runtime_error(what), matrix_(std::move(m)) {}
  const Eigen::MatrixXd& matrix() const { return matrix_; }

 private:
  Eigen::MatrixXd matrix_;
};

/// All eigenvalues of a real square matrix, with multiplicity.
template <typename Derived>
Eigen::Matrix<std::complex<typename Derived::Scalar>, Derived::RowsAtCompileTime, 1> eigenvalues(
    const Eigen::MatrixBase<Derived>& m) {
  using Plain = typename Derived::PlainObject;
  static_assert(!Eigen::NumTraits<typename Derived::Scalar>::IsComplex, "real input expected");
  if (!m.allFinite()) {
    throw DecompositionError("eigenvalues: non-finite entries", m.template cast<double>());
  }
  Eigen::EigenSolver<Plain> solver(m.eval(), /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw DecompositionError("eigenvalues: QR iteration did not converge", m.template cast<double>());
  }
  return solver.eigenvalues();
}

/// Largest real part over the spectrum.
template <typename Derived>
typename Derived::Scalar max_real_eigenvalue(const Eigen::MatrixBase<Derived>& m) {
  return eigenvalues(m).real().maxCoeff();
}

template <typename Derived>
typename Derived::Scalar det(const Eigen::MatrixBase<Derived>& m) {
  return m.determinant();
}

/// Rotation R(angle) = [[cos, -sin], [sin, cos]].
template <typename Scalar = double>
Mat<Scalar, 2> rotation(Scalar angle) {
  using std::cos;
  using std::sin;
  Mat<Scalar, 2> r;
  r << cos(angle), -sin(angle), sin(angle), cos(angle);
  return r;
}

struct SymEig2 {
  Vec2 eigvals;  // ascending
  double angle;  // [0, pi): direction of the eigenvector of eigvals[0]
};

/// Closed-form eigendecomposition m = R(angle) diag(eigvals) R(angle)^T.
inline SymEig2 sym_eig_2x2(const Mat2& m, double symmetry_tol = 1e-10) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (std::abs(m(0, 1) - m(1, 0)) > symmetry_tol * scale) {
    std::ostringstream os;
    os << "sym_eig_2x2: matrix not symmetric (|m01 - m10| = " << std::abs(m(0, 1) - m(1, 0)) << ")";
    throw std::invalid_argument(os.str());
  }
  const double a = m(0, 0);
  const double b = 0.5 * (m(0, 1) + m(1, 0));
  const double c = m(1, 1);
  const double mean = 0.5 * (a + c);
  const double radius = std::hypot(0.5 * (a - c), b);

  SymEig2 out;
  out.eigvals << mean - radius, mean + radius;
  // atan2 gives the major-axis direction; the minor axis is a quarter turn on.
  double angle = 0.5 * std::atan2(2.0 * b, a - c) + 0.5 * std::numbers::pi;
  if (radius == 0.0) angle = 0.0;
  angle = std::fmod(angle, std::numbers::pi);
  if (angle < 0) angle += std::numbers::pi;
  // Snap the representation of "pi" back to 0 so axis-aligned inputs give 0.
  if (std::numbers::pi - angle < 1e-15) angle = 0.0;
  out.angle = angle;
  return out;
}

/// Symplectic form, one [[0, 1], [-1, 0]] block per (q, p) pair.
template <int Dim>
Mat<double, Dim> symplectic_form() {
  static_assert(Dim % 2 == 0);
  Mat<double, Dim> omega = Mat<double, Dim>::Zero();
  for (int k = 0; k < Dim; k += 2) {
    omega(k, k + 1) = 1.0;
    omega(k + 1, k) = -1.0;
  }
  return omega;
}

/// Symplectic eigenvalues (moduli of the spectrum of i*Omega*V), ascending,
/// each listed once.
template <int Dim>
Vec<double, Dim / 2> symplectic_eigenvalues(const Mat<double, Dim>& v) {
  const Mat<double, Dim> omega_v = symplectic_form<Dim>() * v;
  const auto ev = eigenvalues(omega_v);
  Vec<double, Dim> mags = ev.cwiseAbs();
  std::sort(mags.data(), mags.data() + Dim);
  Vec<double, Dim / 2> out;
  for (int k = 0; k < Dim / 2; ++k) out(k) = 0.5 * (mags(2 * k) + mags(2 * k + 1));
  return out;
}

}  // namespace gainloss
