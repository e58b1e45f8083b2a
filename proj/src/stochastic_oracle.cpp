#include "gainloss/stochastic_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/random/normal_distribution.hpp>

#include "gainloss/parallel.hpp"

namespace gainloss {

Mat8 diffusion_factor(const Mat8& n) {
  if ((n - n.transpose()).cwiseAbs().maxCoeff() > 1e-14 * std::max(1.0, n.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("diffusion_factor: diffusion matrix not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat8> eig(n);
  if (eig.eigenvalues().minCoeff() < -1e-14 * std::max(1.0, n.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("diffusion_factor: diffusion matrix not positive semidefinite");
  }
  const Mat8 b = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                 eig.eigenvectors().transpose();
  if ((b * b.transpose() - n).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, n.cwiseAbs().maxCoeff())) {
    throw std::runtime_error("diffusion_factor: B B^T does not reproduce the diffusion matrix");
  }
  return b;
}

namespace {

// Pairwise summation over rows [lo, hi) of f(i), fixed association order.
template <typename F>
auto pairwise_sum(std::size_t lo, std::size_t hi, const F& f) -> decltype(f(lo)) {
  if (hi - lo <= 8) {
    auto acc = f(lo);
    for (std::size_t i = lo + 1; i < hi; ++i) acc += f(i);
    return acc;
  }
  const std::size_t mid = lo + (hi - lo) / 2;
  return pairwise_sum(lo, mid, f) + pairwise_sum(mid, hi, f);
}

}  // namespace

void covariance_with_jackknife(const Eigen::Matrix<double, Eigen::Dynamic, 8>& x, Mat8& cov, Mat8& se,
                               Vec<double, 8>& mean, Vec<double, 8>& mean_se) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (n < 3) throw std::invalid_argument("covariance_with_jackknife: need at least three samples");
  const double nd = static_cast<double>(n);
  const Vec<double, 8> s1 = pairwise_sum(0, n, [&](std::size_t i) -> Vec<double, 8> { return x.row(i).transpose(); });
  const Mat8 s2 = pairwise_sum(0, n, [&](std::size_t i) -> Mat8 { return x.row(i).transpose() * x.row(i); });
  mean = s1 / nd;
  cov = (s2 - s1 * s1.transpose() / nd) / (nd - 1.0);
  cov = 0.5 * (cov + cov.transpose()).eval();

  // Leave-one-out replicates from the running sums.
  auto loo_cov = [&](std::size_t i) -> Mat8 {
    const Vec<double, 8> xi = x.row(i).transpose();
    const Vec<double, 8> r1 = s1 - xi;
    return (s2 - xi * xi.transpose() - r1 * r1.transpose() / (nd - 1.0)) / (nd - 2.0);
  };
  const Mat8 loo_mean = pairwise_sum(0, n, loo_cov) / nd;
  const Mat8 spread = pairwise_sum(0, n, [&](std::size_t i) -> Mat8 {
    const Mat8 d = loo_cov(i) - loo_mean;
    return d.cwiseProduct(d);
  });
  se = ((nd - 1.0) / nd * spread).cwiseSqrt();
  mean_se = (cov.diagonal() / nd).cwiseSqrt();
}

EnsembleResult ensemble_covariance(const EnsembleSpec& spec, const SystemParams& params,
                                   const std::vector<double>& t_samples) {
  if (spec.n_trajectories < 3) throw std::invalid_argument("ensemble_covariance: need at least three trajectories");
  if (!(spec.dt > 0)) throw std::invalid_argument("ensemble_covariance: dt must be positive");
  if (t_samples.empty() || !std::is_sorted(t_samples.begin(), t_samples.end()) || t_samples.front() < 0) {
    throw std::invalid_argument("ensemble_covariance: sample times must be non-negative and ascending");
  }

  const Mat8 noise = spec.frozen_diffusion.value_or(noise_matrix(params));
  const Mat8 b = diffusion_factor(noise);
  std::optional<Mat8> v0_factor;
  if (spec.v0) v0_factor = diffusion_factor(*spec.v0);

  std::vector<std::size_t> sample_steps;
  for (double t : t_samples) sample_steps.push_back(static_cast<std::size_t>(std::llround(t / spec.dt)));
  const std::size_t total_steps = sample_steps.back();

  // Mean-field drift is shared by every trajectory, so it is advanced once per
  // step (classical RK4 at the SDE step) inside each worker's block.
  auto drift_at = [&](const ClassicalState& s) {
    return spec.frozen_drift ? *spec.frozen_drift : drift_matrix<double>(s, params, spec.convention);
  };
  auto rk4 = [&](const ClassicalState& s) {
    const ClassicalState k1 = rhs<double>(s, params);
    const ClassicalState k2 = rhs<double>((s + 0.5 * spec.dt * k1).eval(), params);
    const ClassicalState k3 = rhs<double>((s + 0.5 * spec.dt * k2).eval(), params);
    const ClassicalState k4 = rhs<double>((s + spec.dt * k3).eval(), params);
    return ClassicalState(s + spec.dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4));
  };

  const std::size_t n = spec.n_trajectories;
  std::vector<Eigen::Matrix<double, Eigen::Dynamic, 8>> snapshots(
      sample_steps.size(), Eigen::Matrix<double, Eigen::Dynamic, 8>(static_cast<Eigen::Index>(n), 8));
  std::vector<char> diverged(n, 0);

  std::vector<int> active_noise, all_components;
  for (int i = 0; i < 8; ++i) {
    all_components.push_back(i);
    if (b.col(i).cwiseAbs().maxCoeff() > 0) active_noise.push_back(i);
  }

  const bool diagonal_noise = b.isDiagonal(0.0);
  const Mat8 scaled_b = std::sqrt(spec.dt) * b;
  const Vec<double, 8> noise_scale = scaled_b.diagonal();

  constexpr std::size_t kBlock = 256;
  const std::size_t n_blocks = (n + kBlock - 1) / kBlock;

  parallel_for(n_blocks, spec.workers, [&](std::size_t block) {
    const std::size_t first = block * kBlock;
    const std::size_t count = std::min(kBlock, n - first);
    const auto cols = static_cast<Eigen::Index>(count);

    std::vector<CounterRng> engines;
    engines.reserve(count);
    for (std::size_t k = 0; k < count; ++k) engines.emplace_back(spec.seed, first + k);
    boost::random::normal_distribution<double> normal;  // ziggurat sampler
    Eigen::Matrix<double, 8, Eigen::Dynamic> z = Eigen::Matrix<double, 8, Eigen::Dynamic>::Zero(8, cols);
    // Components whose noise column vanishes never need a draw.
    auto draw = [&](const std::vector<int>& active) {
      for (Eigen::Index k = 0; k < cols; ++k) {
        auto& eng = engines[static_cast<std::size_t>(k)];
        for (int i : active) z(i, k) = normal(eng);
      }
    };

    Eigen::Matrix<double, 8, Eigen::Dynamic> u = Eigen::Matrix<double, 8, Eigen::Dynamic>::Zero(8, cols);
    if (v0_factor) {
      draw(all_components);
      u = *v0_factor * z;
      z.setZero();
    }
    ClassicalState mean_field = ClassicalState::Zero();
    std::size_t next_sample = 0;
    auto record = [&](std::size_t step) {
      while (next_sample < sample_steps.size() && sample_steps[next_sample] == step) {
        snapshots[next_sample].middleRows(static_cast<Eigen::Index>(first), cols) = u.transpose();
        ++next_sample;
      }
    };
    record(0);
    Eigen::Matrix<double, 8, Eigen::Dynamic> next(8, cols);
    Mat8 propagator = Mat8::Identity() + spec.dt * drift_at(mean_field);
    for (std::size_t step = 1; step <= total_steps; ++step) {
      if (!spec.frozen_drift) propagator = Mat8::Identity() + spec.dt * drift_at(mean_field);
      draw(active_noise);
      next.noalias() = propagator.lazyProduct(u);
      if (diagonal_noise) {
        for (int i : active_noise) next.row(i) += noise_scale(i) * z.row(i);
      } else {
        next.noalias() += scaled_b * z;
      }
      u.swap(next);
      if (!spec.frozen_drift) mean_field = rk4(mean_field);
      record(step);
    }
    for (Eigen::Index k = 0; k < cols; ++k) {
      if (!(u.col(k).cwiseAbs().maxCoeff() <= spec.divergence_bound)) diverged[first + k] = 1;
    }
  });

  EnsembleResult result;
  result.diverged = static_cast<std::size_t>(std::count(diverged.begin(), diverged.end(), 1));
  for (std::size_t s = 0; s < sample_steps.size(); ++s) {
    EnsembleSample sample;
    sample.t = static_cast<double>(sample_steps[s]) * spec.dt;
    covariance_with_jackknife(snapshots[s], sample.covariance, sample.std_error, sample.mean,
                              sample.mean_std_error);
    result.samples.push_back(std::move(sample));
  }
  return result;
}

}  // namespace gainloss
