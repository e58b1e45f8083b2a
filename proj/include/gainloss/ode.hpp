#pragma once

// Adaptive Dormand-Prince 4(5) integration with dense output sampled on a
// caller-supplied time grid.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/numeric/odeint/stepper/generation.hpp>
#include <boost/numeric/odeint/stepper/runge_kutta_dopri5.hpp>
#include <boost/numeric/odeint/util/odeint_error.hpp>

namespace gainloss {

struct OdeTolerances {
  double rel = 1e-9;
  double abs = 1e-12;
};

struct OdeStats {
  std::size_t steps = 0;
  std::size_t rejected = 0;
  std::size_t rhs_calls = 0;
};

enum class OdeStatus { completed, diverged };

struct OdeOutcome {
  OdeStatus status = OdeStatus::completed;
  double t_last = 0.0;  // time of the last accepted step
  OdeStats stats;
};

inline constexpr double kDivergenceBound = 1e12;

/// Step-size collapse or controller failure. Carries the last accepted point.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double t, std::vector<double> state)
      : std::runtime_error(what), t_(t), state_(std::move(state)) {}
  double t() const { return t_; }
  const std::vector<double>& state() const { return state_; }

 private:
  double t_;
  std::vector<double> state_;
};

/// Uniform grid 0, dt, 2 dt, ... up to and including t_end (within rounding).
inline std::vector<double> uniform_grid(double t_end, double dt) {
  if (!(t_end > 0) || !(dt > 0)) throw std::invalid_argument("uniform_grid: t_end and dt must be positive");
  const auto n = static_cast<std::size_t>(std::floor(t_end / dt + 1e-9));
  std::vector<double> grid(n + 1);
  for (std::size_t k = 0; k <= n; ++k) grid[k] = static_cast<double>(k) * dt;
  if (t_end - grid.back() > 1e-9 * dt) grid.push_back(t_end);
  return grid;
}

/// Integrates dx/dt = system(x, dxdt, t) from sample_times.front() and calls
/// observer(t, x) at every sample time. Halts with `diverged` once any
/// component exceeds `bound` in magnitude.
template <std::size_t N, typename System, typename Observer>
OdeOutcome integrate_sampled(System&& system, std::array<double, N> x0, std::span<const double> sample_times,
                             const OdeTolerances& tol, Observer&& observer, double bound = kDivergenceBound) {
  namespace odeint = boost::numeric::odeint;
  using State = std::array<double, N>;

  if (sample_times.empty()) throw std::invalid_argument("integrate_sampled: no sample times");
  if (!std::is_sorted(sample_times.begin(), sample_times.end())) {
    throw std::invalid_argument("integrate_sampled: sample times must be ascending");
  }

  OdeOutcome outcome;
  auto counted = [&](const State& x, State& dxdt, double t) {
    ++outcome.stats.rhs_calls;
    system(x, dxdt, t);
  };

  const double t0 = sample_times.front();
  const double t_end = sample_times.back();
  std::size_t next = 0;
  outcome.t_last = t0;
  observer(t0, static_cast<const State&>(x0));
  ++next;
  if (next == sample_times.size()) return outcome;

  auto stepper = odeint::make_dense_output(tol.abs, tol.rel, odeint::runge_kutta_dopri5<State>());
  stepper.initialize(x0, t0, std::min(1e-3, t_end - t0));

  State x_sample;
  while (next < sample_times.size()) {
    const double t_old = stepper.current_time();
    const State x_old = stepper.current_state();
    try {
      stepper.do_step(counted);
    } catch (const odeint::odeint_error& e) {
      throw IntegrationError(std::string("step size control failed: ") + e.what(), t_old,
                             std::vector<double>(x_old.begin(), x_old.end()));
    }
    ++outcome.stats.steps;
    const double t_new = stepper.current_time();
    const double dt = t_new - t_old;
    if (!(dt > 1e-14 * std::max(1.0, std::abs(t_new)))) {
      throw IntegrationError("step size underflow", t_old, std::vector<double>(x_old.begin(), x_old.end()));
    }

    const State& x_new = stepper.current_state();
    const bool finite = std::all_of(x_new.begin(), x_new.end(), [&](double v) { return std::abs(v) <= bound; });
    if (!finite) {
      outcome.status = OdeStatus::diverged;
      outcome.t_last = t_old;
      break;
    }
    outcome.t_last = t_new;

    while (next < sample_times.size() && sample_times[next] <= t_new) {
      stepper.calc_state(sample_times[next], x_sample);
      observer(sample_times[next], static_cast<const State&>(x_sample));
      ++next;
    }
  }

  // Each Dormand-Prince attempt costs six new evaluations (first-same-as-last).
  const std::size_t attempts = outcome.stats.rhs_calls > 0 ? (outcome.stats.rhs_calls - 1) / 6 : 0;
  outcome.stats.rejected = attempts > outcome.stats.steps ? attempts - outcome.stats.steps : 0;
  return outcome;
}

}  // namespace gainloss
