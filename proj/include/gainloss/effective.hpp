#pragma once

// Effective two-mode non-Hermitian picture of the coupled mechanical modes.

#include <complex>

#include "gainloss/classical.hpp"
#include "gainloss/model.hpp"

namespace gainloss {

struct EffectiveRates {
  double G1 = 0.0, G2 = 0.0;              // g0 |<a_j>|
  double gamma_o1 = 0.0, gamma_o2 = 0.0;  // 4 G_j^2 / kappa
  double Gamma_m1 = 0.0;                  // gamma_m1 + gamma_o1, net loss of mode 1
  double Gamma_m2 = 0.0;                  // gamma_o2 - gamma_m2, net gain of mode 2
  double Omega_m1 = 0.0, Omega_m2 = 0.0;
};

/// Optomechanically induced rates. The red-detuned cavity adds damping to
/// mode 1; the blue-detuned cavity pumps mode 2, whose gain Gamma_m2 enters the
/// effective matrix as +i Gamma_m2 and is positive once the optical gain
/// outweighs intrinsic damping.
EffectiveRates effective_rates(const SystemParams& params, std::complex<double> a1, std::complex<double> a2);

struct EffectiveSpectrum {
  std::complex<double> omega_plus, omega_minus;
  double discriminant = 0.0;  // J^2 - ((Gamma_m1 + Gamma_m2) / 4)^2
  bool at_ep = false;
};

inline constexpr double kEpTolerance = 1e-9;

/// omega_pm = (Omega_1 + Omega_2)/2 - i (Gamma_1 - Gamma_2)/4 +- sqrt(discriminant).
EffectiveSpectrum spectrum(const EffectiveRates& rates, double j_coupling);

/// Exact eigenvalues of [[Omega_1 - i Gamma_1/2, -J], [-J, Omega_2 + i Gamma_2/2]],
/// the matrix whose near-degenerate expansion gives `spectrum`.
std::pair<std::complex<double>, std::complex<double>> exact_spectrum(const EffectiveRates& rates, double j_coupling);

enum class FieldSource { steady_state, trailing_average };

/// Effective rates at drive params.drive with |<a_j>| taken either from the
/// algebraic fixed point or from the mean of |<a_j>| over the trailing window
/// of a zero-initialized integration to t_end.
EffectiveRates rates_at_drive(const SystemParams& params, FieldSource source = FieldSource::trailing_average,
                              double t_end = 5000.0, double window = 500.0);

}  // namespace gainloss
