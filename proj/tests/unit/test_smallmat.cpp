#include <doctest.h>

#include <algorithm>
#include <complex>
#include <random>
#include <vector>

#include "gainloss/fluctuations.hpp"
#include "gainloss/smallmat.hpp"

using namespace gainloss;
using cd = std::complex<double>;

namespace {

// Characteristic polynomial coefficients c_0..c_n (c_n = 1) by Faddeev-LeVerrier.
std::vector<double> char_poly(const Eigen::MatrixXd& a) {
  const auto n = a.rows();
  std::vector<double> c(static_cast<std::size_t>(n) + 1, 0.0);
  c[static_cast<std::size_t>(n)] = 1.0;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index k = 1; k <= n; ++k) {
    m = a * m + c[static_cast<std::size_t>(n - k + 1)] * id;
    c[static_cast<std::size_t>(n - k)] = -(a * m).trace() / static_cast<double>(k);
  }
  return c;
}

cd eval_poly(const std::vector<double>& c, cd z) {
  cd acc = 0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * z + *it;
  return acc;
}

std::vector<cd> sorted(std::vector<cd> v) {
  std::sort(v.begin(), v.end(), [](cd a, cd b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  return v;
}

}  // namespace

TEST_CASE("eigenvalues of simple matrices") {
  Vec<double, 8> d;
  d << 1, 2, 3, 4, 5, 6, 7, 8;
  const Mat8 diag = d.asDiagonal();
  auto ev = eigenvalues(diag);
  std::vector<double> re;
  for (int i = 0; i < 8; ++i) {
    CHECK(std::abs(ev(i).imag()) < 1e-14);
    re.push_back(ev(i).real());
  }
  std::sort(re.begin(), re.end());
  for (int i = 0; i < 8; ++i) CHECK(re[static_cast<std::size_t>(i)] == doctest::Approx(i + 1).epsilon(1e-14));

  Mat2 rot;
  rot << 0, 1, -1, 0;
  const auto r = eigenvalues(rot);
  CHECK(std::abs(std::abs(r(0).imag()) - 1.0) < 1e-14);
  CHECK(std::abs(r(0) + r(1)) < 1e-14);
}

TEST_CASE("eigenvalues reject non-finite input") {
  Mat4 m = Mat4::Identity();
  m(1, 2) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(eigenvalues(m), DecompositionError);
}

TEST_CASE("zero-field drift eigenvalues are roots of the characteristic polynomial") {
  const SystemParams p = kPaperDefaults;
  const Mat8 a = drift_matrix<double>(ClassicalState::Zero(), p);
  const auto coeffs = char_poly(a);
  const auto ev = eigenvalues(a);
  double scale = 0;
  for (double c : coeffs) scale = std::max(scale, std::abs(c));
  for (int i = 0; i < 8; ++i) CHECK(std::abs(eval_poly(coeffs, ev(i))) < 1e-10 * scale);
  // Decoupled cavities contribute -kappa +- i Delta_j.
  for (double delta : {p.delta1, p.delta2}) {
    for (double sign : {1.0, -1.0}) {
      const cd expected(-p.kappa, sign * delta);
      CHECK(std::abs(eval_poly(coeffs, expected)) < 1e-10 * scale);
      double best = 1e9;
      for (int i = 0; i < 8; ++i) best = std::min(best, std::abs(ev(i) - expected));
      CHECK(best < 1e-10);
    }
  }
}

TEST_CASE("eigen residual, conjugate pairing and determinant product") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 200; ++trial) {
    Mat8 m;
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) m(i, j) = u(rng);
    Eigen::EigenSolver<Mat8> full(m);
    const auto ev = eigenvalues(m);
    const double norm = m.norm();
    const Eigen::Matrix<cd, 8, 8> vecs = full.eigenvectors();
    for (int i = 0; i < 8; ++i) {
      const Eigen::Matrix<cd, 8, 1> v = vecs.col(i);
      const double residual = (m.cast<cd>() * v - full.eigenvalues()(i) * v).norm() / v.norm();
      CHECK(residual <= 1e-9 * norm);
    }
    std::vector<cd> a(ev.data(), ev.data() + 8), b;
    for (auto z : a) b.push_back(std::conj(z));
    const auto sa = sorted(a), sb = sorted(b);
    for (std::size_t i = 0; i < 8; ++i) CHECK(std::abs(sa[i] - sb[i]) < 1e-9);

    const double cond = m.jacobiSvd().singularValues()(0) / m.jacobiSvd().singularValues()(7);
    if (cond < 1e6) {
      cd prod = 1;
      for (auto z : a) prod *= z;
      CHECK(std::abs(prod.real() - det(m)) <= 1e-6 * std::abs(det(m)));
    }
  }
}

TEST_CASE("determinant examples") {
  CHECK(det(Mat4(Mat4::Identity())) == doctest::Approx(1.0));
  CHECK(det(Mat4(0.5 * Mat4::Identity())) == doctest::Approx(1.0 / 16).epsilon(1e-12));
  Mat2 m;
  m << 2, 1, 1, 2;
  CHECK(det(m) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("sym_eig_2x2 examples") {
  Mat2 d;
  d << 1, 0, 0, 4;
  auto e = sym_eig_2x2(d);
  CHECK(e.eigvals(0) == doctest::Approx(1));
  CHECK(e.eigvals(1) == doctest::Approx(4));
  CHECK(e.angle == 0.0);

  // The smaller eigenvalue's axis is the anti-diagonal, at 3 pi / 4.
  Mat2 x;
  x << 2.5, 1.5, 1.5, 2.5;
  e = sym_eig_2x2(x);
  CHECK(e.eigvals(0) == doctest::Approx(1));
  CHECK(e.eigvals(1) == doctest::Approx(4));
  CHECK(e.angle == doctest::Approx(0.75 * std::numbers::pi));
  const Mat2 r = rotation(e.angle);
  CHECK((r * e.eigvals.asDiagonal() * r.transpose() - x).cwiseAbs().maxCoeff() < 1e-12);

  Mat2 bad;
  bad << 1, 2, 3, 4;
  CHECK_THROWS_AS(sym_eig_2x2(bad), std::invalid_argument);
}

TEST_CASE("sym_eig_2x2 reconstructs random symmetric matrices") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-10, 10);
  double worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    Mat2 m;
    m(0, 0) = u(rng);
    m(1, 1) = u(rng);
    m(0, 1) = m(1, 0) = u(rng);
    const auto e = sym_eig_2x2(m);
    CHECK(e.eigvals(0) <= e.eigvals(1));
    CHECK(e.angle >= 0.0);
    CHECK(e.angle < std::numbers::pi);
    const Mat2 r = rotation(e.angle);
    worst = std::max(worst, (r * e.eigvals.asDiagonal() * r.transpose() - m).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("symplectic eigenvalues of vacuum and thermal states") {
  CHECK(symplectic_eigenvalues<8>(Mat8(0.5 * Mat8::Identity())).cwiseAbs().maxCoeff() == doctest::Approx(0.5));
  Mat4 v = Mat4::Identity();
  v.block<2, 2>(0, 0) *= 2.5;
  v.block<2, 2>(2, 2) *= 5.5;
  const auto nu = symplectic_eigenvalues<4>(v);
  CHECK(nu(0) == doctest::Approx(2.5));
  CHECK(nu(1) == doctest::Approx(5.5));
}
