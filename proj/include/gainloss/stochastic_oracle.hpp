#pragma once

// Euler-Maruyama ensembles of the linear fluctuation SDE du = A u dt + B dW,
// B B^T = N. Test support for the Lyapunov propagation.

#include <cstdint>
#include <optional>
#include <vector>

#include "gainloss/fluctuations.hpp"
#include "gainloss/model.hpp"

namespace gainloss {

struct EnsembleSpec {
  std::size_t n_trajectories = 10000;
  double dt = 2.5e-4;
  std::uint64_t seed = 1;
  std::optional<Mat8> frozen_drift;      // default: drift along the mean-field trajectory
  std::optional<Mat8> frozen_diffusion;  // default: noise_matrix(params)
  std::optional<Mat8> v0;                // initial covariance; default u(0) = 0
  DriftConvention convention = DriftConvention::jacobian;
  unsigned workers = 0;
  double divergence_bound = 1e8;
};

struct EnsembleSample {
  double t = 0.0;
  Mat8 covariance = Mat8::Zero();  // unbiased sample covariance
  Mat8 std_error = Mat8::Zero();   // jackknife
  Vec<double, 8> mean = Vec<double, 8>::Zero();
  Vec<double, 8> mean_std_error = Vec<double, 8>::Zero();
};

struct EnsembleResult {
  std::vector<EnsembleSample> samples;
  std::size_t diverged = 0;  // trajectories that crossed divergence_bound
};

/// Counter-based random source: the n-th output of stream `key` is the
/// SplitMix64 finalizer applied to key + n * golden-ratio increment, so any
/// (seed, trajectory, draw) triple is reproducible independent of scheduling.
class CounterRng {
 public:
  using result_type = std::uint64_t;
  CounterRng(std::uint64_t seed, std::uint64_t stream) : key_(mix(seed ^ mix(stream + 0x632be59bd9b4e019ULL))) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() { return mix(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL); }

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Noise factor B with B B^T = n (symmetric square root); throws when n is not
/// positive semidefinite or the reconstruction misses n by more than 1e-12.
Mat8 diffusion_factor(const Mat8& n);

/// Ensemble statistics at each requested time (rounded to the step grid).
EnsembleResult ensemble_covariance(const EnsembleSpec& spec, const SystemParams& params,
                                   const std::vector<double>& t_samples);

/// Sample covariance and leave-one-out jackknife errors of the rows of x (n x 8).
void covariance_with_jackknife(const Eigen::Matrix<double, Eigen::Dynamic, 8>& x, Mat8& cov, Mat8& se,
                               Vec<double, 8>& mean, Vec<double, 8>& mean_se);

}  // namespace gainloss
