#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "gainloss/classical.hpp"
#include "gainloss/effective.hpp"

using namespace gainloss;
using cd = std::complex<double>;

namespace {

// Straight transcription of the complex-valued equations, used as an oracle.
ClassicalState complex_rhs(const ClassicalState& s, const SystemParams& p) {
  const cd i(0, 1);
  const cd a[2] = {cavity_field(s, 1), cavity_field(s, 2)};
  const double q[2] = {s(slot::q1), s(slot::q2)};
  const double mom[2] = {s(slot::p1), s(slot::p2)};
  const double omega[2] = {p.omega_m1, p.omega_m2};
  const double delta[2] = {p.delta1, p.delta2};
  const double gamma[2] = {p.gamma_m1, p.gamma_m2};
  ClassicalState d;
  for (int j = 0; j < 2; ++j) {
    const cd da = -(p.kappa - i * delta[j]) * a[j] + i * p.g0 * q[j] * a[j] + p.drive;
    d(4 * j) = da.real();
    d(4 * j + 1) = da.imag();
    d(4 * j + 2) = omega[j] * mom[j];
    d(4 * j + 3) = -omega[j] * q[j] - gamma[j] * mom[j] + p.j_coupling * q[1 - j] + p.g0 * std::norm(a[j]);
  }
  return d;
}

ClassicalState random_state(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  ClassicalState s;
  for (int k = 0; k < 8; ++k) s(k) = u(rng);
  return s;
}

ClassicalTrajectory synthetic(double t_end, double dt, auto q1, auto q2) {
  ClassicalTrajectory traj;
  for (double t : uniform_grid(t_end, dt)) {
    ClassicalState s = ClassicalState::Zero();
    s(slot::q1) = q1(t);
    s(slot::q2) = q2(t);
    // Unit frequency: p = dq/dt.
    const double h = 1e-5;
    s(slot::p1) = (q1(t + h) - q1(t - h)) / (2 * h);
    s(slot::p2) = (q2(t + h) - q2(t - h)) / (2 * h);
    traj.t.push_back(t);
    traj.states.push_back(s);
  }
  return traj;
}

}  // namespace

TEST_CASE("rhs at rest with drive only feeds the cavities") {
  SystemParams p;
  p.drive = 100;
  const ClassicalState d = rhs<double>(ClassicalState::Zero(), p);
  CHECK(d(slot::re_a1) == 100.0);
  CHECK(d(slot::re_a2) == 100.0);
  for (int k : {slot::im_a1, slot::q1, slot::p1, slot::im_a2, slot::q2, slot::p2}) CHECK(d(k) == 0.0);
}

TEST_CASE("rhs examples") {
  SystemParams p;
  ClassicalState s = ClassicalState::Zero();
  s(slot::q1) = 1.0;
  ClassicalState d = rhs<double>(s, p);
  CHECK(d(slot::p1) == doctest::Approx(-1.0));
  CHECK(d(slot::p2) == doctest::Approx(0.03));

  s.setZero();
  s(slot::re_a1) = 1.0;
  d = rhs<double>(s, p);
  CHECK(d(slot::re_a1) == doctest::Approx(-0.1));
  CHECK(d(slot::im_a1) == doctest::Approx(-1.0));
  CHECK(d(slot::p1) == doctest::Approx(1e-4));
}

TEST_CASE("rhs agrees with the complex-valued form") {
  std::mt19937_64 rng(1);
  SystemParams p;
  for (int trial = 0; trial < 500; ++trial) {
    p.drive = 800.0 * (trial % 10) / 9.0;
    const ClassicalState s = random_state(rng, 1e3);
    const ClassicalState a = rhs<double>(s, p);
    const ClassicalState b = complex_rhs(s, p);
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-14 * std::max(1.0, b.cwiseAbs().maxCoeff()) * 10);
  }
}

TEST_CASE("analytic Jacobian matches central differences") {
  std::mt19937_64 rng(2);
  SystemParams p;
  p.drive = 500;
  for (int trial = 0; trial < 50; ++trial) {
    const ClassicalState s = random_state(rng, 100.0);
    const Mat8 jac = rhs_jacobian(s, p);
    for (int k = 0; k < 8; ++k) {
      const double h = 1e-5 * std::max(1.0, std::abs(s(k)));
      ClassicalState up = s, down = s;
      up(k) += h;
      down(k) -= h;
      const ClassicalState fd = (rhs<double>(up, p) - rhs<double>(down, p)) / (2 * h);
      CHECK((fd - jac.col(k)).cwiseAbs().maxCoeff() < 1e-6 * std::max(1.0, fd.cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("undriven system at rest stays at rest") {
  SystemParams p;
  const auto traj = integrate(p, 100, 1);
  REQUIRE(traj.size() == 101);
  for (const auto& s : traj.states) CHECK(s.cwiseAbs().maxCoeff() == 0.0);
  CHECK_FALSE(traj.divergent);
}

TEST_CASE("without optomechanics each cavity reaches the Lorentzian amplitude") {
  SystemParams p;
  p.g0 = 0;
  p.drive = 100;
  const auto traj = integrate(p, 300, 1);
  const double expected = p.drive / std::hypot(p.kappa, p.delta1);
  CHECK(std::abs(cavity_field(traj.states.back(), 1)) == doctest::Approx(expected).epsilon(1e-8));
  CHECK(std::abs(cavity_field(traj.states.back(), 2)) == doctest::Approx(expected).epsilon(1e-8));
  CHECK(traj.states.back()(slot::q1) == 0.0);
}

TEST_CASE("conservative mechanical core conserves energy") {
  SystemParams p;
  p.g0 = 0;
  p.gamma_m1 = p.gamma_m2 = 0;
  p.omega_m2 = 1.0;
  IntegrateOptions opt;
  opt.init(slot::q1) = 1.0;
  opt.init(slot::p2) = 0.5;
  auto energy = [&](const ClassicalState& s) {
    return 0.5 * (s(slot::q1) * s(slot::q1) + s(slot::p1) * s(slot::p1) + s(slot::q2) * s(slot::q2) +
                  s(slot::p2) * s(slot::p2)) -
           p.j_coupling * s(slot::q1) * s(slot::q2);
  };
  const auto traj = integrate(p, 1000, 10, opt);
  const double e0 = energy(traj.states.front());
  double worst = 0;
  for (const auto& s : traj.states) worst = std::max(worst, std::abs(energy(s) - e0));
  CHECK(worst < 1e-6 * e0);
}

TEST_CASE("solution converges as the tolerance tightens") {
  SystemParams p;
  p.drive = 300;
  auto final_state = [&](double rel) {
    IntegrateOptions opt;
    opt.tol.rel = rel;
    opt.tol.abs = rel * 1e-3;
    return integrate(p, 200, 200, opt).states.back();
  };
  const ClassicalState reference = final_state(1e-12);
  const double coarse = (final_state(1e-6) - reference).norm();
  const double fine = (final_state(1e-9) - reference).norm();
  CHECK(fine < coarse);
  CHECK(fine < 1e-5 * reference.norm());
}

TEST_CASE("sinusoid is a limit cycle with the right amplitude") {
  const auto traj = synthetic(
      600, 0.05, [](double t) { return 5 * std::sin(t); }, [](double t) { return 2 * std::sin(t + 1.0); });
  const auto report = classify(traj, 100);
  CHECK(report.regime == Regime::limit_cycle);
  CHECK(report.amplitude1 == doctest::Approx(5.0).epsilon(0.01));
  CHECK(report.amplitude2 == doctest::Approx(2.0).epsilon(0.01));
  REQUIRE(report.locked_phase);
  // q2 leads q1 by one radian, so the phase angle of oscillator 2 lags.
  CHECK(*report.locked_phase == doctest::Approx(2 * std::numbers::pi - 1.0).epsilon(1e-3));
}

TEST_CASE("exponential decay is classified with its rate") {
  const double rate = 2e-3;
  const auto traj = synthetic(
      3000, 0.1, [&](double t) { return std::exp(-rate * t) * std::cos(t); },
      [&](double t) { return 0.5 * std::exp(-rate * t) * std::cos(t); });
  const auto report = classify(traj, 500);
  CHECK(report.regime == Regime::decaying);
  REQUIRE(report.decay_rate);
  CHECK(*report.decay_rate == doctest::Approx(rate).epsilon(0.01));
  CHECK(*report.fit_r2 > 0.99);
}

TEST_CASE("exponential growth is classified as growing") {
  const auto traj = synthetic(
      3000, 0.1, [](double t) { return 1e-3 * std::exp(1e-3 * t) * std::cos(t); },
      [](double t) { return 1e-3 * std::exp(1e-3 * t) * std::sin(t); });
  const auto report = classify(traj, 500);
  CHECK(report.regime == Regime::growing);
  CHECK(*report.decay_rate == doctest::Approx(-1e-3).epsilon(0.01));
}

TEST_CASE("classification edge cases") {
  const auto zero = synthetic(300, 0.1, [](double) { return 0.0; }, [](double) { return 0.0; });
  CHECK(classify(zero, 100).regime == Regime::decaying);
  CHECK_THROWS_AS(classify(zero, 101), std::invalid_argument);
  CHECK_THROWS_AS(classify(zero, 0), std::invalid_argument);
  ClassicalTrajectory diverged = zero;
  diverged.divergent = true;
  CHECK(classify(diverged, 1e6).regime == Regime::divergent);
}

TEST_CASE("envelope fit on a damped cosine") {
  std::vector<double> t, x;
  for (double s : uniform_grid(500, 0.01)) {
    t.push_back(s);
    x.push_back(std::exp(-0.01 * s) * std::cos(2 * s));
  }
  const auto fit = fit_envelope(t, x);
  CHECK(fit.points > 100);
  CHECK(fit.rate == doctest::Approx(0.01).epsilon(1e-3));
  CHECK(fit.r2 > 0.999);
}

TEST_CASE("mean phase examples") {
  ClassicalState s = ClassicalState::Zero();
  CHECK(mean_phase(s, 1) == 0.0);
  s(slot::q1) = 1;
  CHECK(mean_phase(s, 1) == 0.0);
  s(slot::q1) = 0;
  s(slot::p1) = 1;
  CHECK(mean_phase(s, 1) == doctest::Approx(std::numbers::pi / 2));
  s(slot::p1) = -1;
  CHECK(mean_phase(s, 1) == doctest::Approx(1.5 * std::numbers::pi));
  s(slot::q2) = -1;
  CHECK(mean_phase(s, 2) == doctest::Approx(std::numbers::pi));
}

TEST_CASE("steady state solves the mean-field equations") {
  for (double drive : {0.0, 50.0, 200.0, 600.0}) {
    SystemParams p;
    p.drive = drive;
    const auto fp = steady_state(p);
    REQUIRE(fp.converged);
    CHECK(rhs<double>(fp.state, p).norm() <= 1e-9 * (1 + drive));
  }
}

TEST_CASE("weak drives never leave the decaying regime") {
  SystemParams p;
  ScanOptions opt;
  opt.dt_out = 0.1;
  const auto scan = amplitude_scan(p, {0.0, 50.0, 100.0}, 1500, 400, opt);
  REQUIRE(scan.points.size() == 3);
  for (const auto& pt : scan.points) {
    REQUIRE(pt.report);
    CHECK(pt.report->regime == Regime::decaying);
  }
  CHECK_FALSE(scan.e_p);
  CHECK_FALSE(scan.e_lc);
}

TEST_CASE("weak-drive envelope decays at the effective-mode rate") {
  SystemParams p;
  p.drive = 100;
  const auto traj = integrate(p, 2000, 0.1);
  const auto report = classify(traj, 500);
  CHECK(report.regime == Regime::decaying);
  REQUIRE(report.decay_rate);
  const auto rates = rates_at_drive(p, FieldSource::steady_state);
  const double expected = (rates.Gamma_m1 - rates.Gamma_m2) / 4;
  CHECK(*report.decay_rate == doctest::Approx(expected).epsilon(0.25));
}
