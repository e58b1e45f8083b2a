#include "gainloss/effective.hpp"

#include <stdexcept>

namespace gainloss {

EffectiveRates effective_rates(const SystemParams& params, std::complex<double> a1, std::complex<double> a2) {
  EffectiveRates r;
  r.G1 = params.g0 * std::abs(a1);
  r.G2 = params.g0 * std::abs(a2);
  r.gamma_o1 = 4.0 * r.G1 * r.G1 / params.kappa;
  r.gamma_o2 = 4.0 * r.G2 * r.G2 / params.kappa;
  r.Gamma_m1 = params.gamma_m1 + r.gamma_o1;
  r.Gamma_m2 = r.gamma_o2 - params.gamma_m2;
  r.Omega_m1 = params.omega_m1;
  r.Omega_m2 = params.omega_m2;
  return r;
}

EffectiveSpectrum spectrum(const EffectiveRates& rates, double j_coupling) {
  using namespace std::complex_literals;
  EffectiveSpectrum s;
  const double half_width = 0.25 * (rates.Gamma_m1 + rates.Gamma_m2);
  s.discriminant = j_coupling * j_coupling - half_width * half_width;
  const std::complex<double> center =
      0.5 * (rates.Omega_m1 + rates.Omega_m2) - 0.25i * (rates.Gamma_m1 - rates.Gamma_m2);
  const std::complex<double> root = std::sqrt(std::complex<double>(s.discriminant, 0.0));
  s.omega_plus = center + root;
  s.omega_minus = center - root;
  s.at_ep = std::abs(s.discriminant) < kEpTolerance;
  return s;
}

std::pair<std::complex<double>, std::complex<double>> exact_spectrum(const EffectiveRates& rates,
                                                                     double j_coupling) {
  using namespace std::complex_literals;
  const std::complex<double> d1 = rates.Omega_m1 - 0.5i * rates.Gamma_m1;
  const std::complex<double> d2 = rates.Omega_m2 + 0.5i * rates.Gamma_m2;
  const std::complex<double> mean = 0.5 * (d1 + d2);
  const std::complex<double> half_diff = 0.5 * (d1 - d2);
  const std::complex<double> root = std::sqrt(half_diff * half_diff + j_coupling * j_coupling);
  return {mean + root, mean - root};
}

EffectiveRates rates_at_drive(const SystemParams& params, FieldSource source, double t_end, double window) {
  if (source == FieldSource::steady_state) {
    const auto fp = steady_state(params);
    if (!fp.converged) throw std::runtime_error("rates_at_drive: fixed point did not converge");
    return effective_rates(params, cavity_field(fp.state, 1), cavity_field(fp.state, 2));
  }
  if (!(window > 0) || window > t_end) throw std::invalid_argument("rates_at_drive: bad averaging window");
  const auto traj = integrate(params, t_end, 0.05);
  if (traj.divergent) throw std::runtime_error("rates_at_drive: trajectory diverged");
  double sum1 = 0, sum2 = 0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (traj.t[k] < t_end - window) continue;
    sum1 += std::abs(cavity_field(traj.states[k], 1));
    sum2 += std::abs(cavity_field(traj.states[k], 2));
    ++n;
  }
  return effective_rates(params, sum1 / static_cast<double>(n), sum2 / static_cast<double>(n));
}

}  // namespace gainloss
