#include "gainloss/fluctuations.hpp"

#include <algorithm>
#include <sstream>

#include "gainloss/parallel.hpp"

namespace gainloss {

const char* to_string(DriftConvention c) {
  return c == DriftConvention::jacobian ? "jacobian" : "flipped_sign";
}

DriftConvention drift_convention_from_string(const std::string& name) {
  if (name == "jacobian") return DriftConvention::jacobian;
  if (name == "flipped_sign") return DriftConvention::flipped_sign;
  throw std::invalid_argument("unknown drift convention '" + name + "'");
}

Mat8 noise_matrix(const SystemParams& p) {
  Vec<double, 8> d;
  const double thermal = 2.0 * p.n_thermal + 1.0;
  d << 0.0, p.gamma_m1 * thermal, p.kappa, p.kappa, 0.0, p.gamma_m2 * thermal, p.kappa, p.kappa;
  return d.asDiagonal();
}

PackedCov pack(const Mat8& v) {
  PackedCov out;
  int k = 0;
  for (int i = 0; i < 8; ++i)
    for (int j = i; j < 8; ++j) out[k++] = v(i, j);
  return out;
}

Mat8 unpack(const PackedCov& packed) {
  Mat8 v;
  int k = 0;
  for (int i = 0; i < 8; ++i)
    for (int j = i; j < 8; ++j) {
      v(i, j) = packed[k];
      v(j, i) = packed[k];
      ++k;
    }
  return v;
}

std::vector<std::string> packed_labels() {
  static const char names[4] = {'q', 'p', 'x', 'y'};
  std::vector<std::string> labels;
  for (int i = 0; i < 8; ++i)
    for (int j = i; j < 8; ++j) {
      std::string s = "V_";
      s += names[i % 4];
      s += names[j % 4];
      s += static_cast<char>('1' + i / 4);
      s += static_cast<char>('1' + j / 4);
      labels.push_back(std::move(s));
    }
  return labels;
}

Mat2 mode_block(const Mat8& v, int first_index) { return v.block<2, 2>(first_index, first_index); }

Mat8 lyapunov_rhs(const Mat8& a, const Mat8& v, const Mat8& n) {
  const Mat8 av = a * v;
  return av + av.transpose() + n;
}

CovarianceTrajectory propagate(const SystemParams& params, double t_end, double dt_out,
                               const PropagateOptions& options) {
  constexpr std::size_t kDim = 8 + kPackedSize;
  using Array = std::array<double, kDim>;

  const Mat8 v0 = options.v0.value_or(Mat8::Identity() * 0.5);
  if ((v0 - v0.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw std::invalid_argument("propagate: initial covariance not symmetric");
  }
  if (symplectic_eigenvalues<8>(v0).minCoeff() < 0.5 - 1e-9) {
    throw std::invalid_argument("propagate: initial covariance violates the uncertainty principle");
  }

  Array x0;
  Eigen::Map<ClassicalState>(x0.data()) = options.init;
  const PackedCov p0 = pack(v0);
  std::copy(p0.begin(), p0.end(), x0.begin() + 8);

  const Mat8 noise = noise_matrix(params);
  auto system = [&](const Array& x, Array& dxdt, double) {
    const Eigen::Map<const ClassicalState> s(x.data());
    Eigen::Map<ClassicalState>(dxdt.data()) = rhs<double>(s, params);
    PackedCov packed;
    std::copy(x.begin() + 8, x.end(), packed.begin());
    const Mat8 a = drift_matrix<double>(s, params, options.convention);
    const PackedCov dv = pack(lyapunov_rhs(a, unpack(packed), noise));
    std::copy(dv.begin(), dv.end(), dxdt.begin() + 8);
  };

  CovarianceTrajectory traj;
  auto observer = [&](double t, const Array& x) {
    PackedCov packed;
    std::copy(x.begin() + 8, x.end(), packed.begin());
    // Packed storage is symmetric by construction; asymmetry is identically zero.
    const Mat8 v = unpack(packed);
    const double nu = symplectic_eigenvalues<8>(v).minCoeff();
    traj.t.push_back(t);
    traj.states.emplace_back(Eigen::Map<const ClassicalState>(x.data()));
    traj.covariances.push_back(v);
    traj.min_symplectic.push_back(nu);
    traj.max_asymmetry.push_back((v - v.transpose()).cwiseAbs().maxCoeff());
    if (nu < 0.5 - options.physicality_tolerance) {
      std::ostringstream os;
      os << "covariance became unphysical at t = " << t << ": smallest symplectic eigenvalue " << nu
         << " (linearization breakdown)";
      throw PhysicalityError(os.str(), t, nu);
    }
  };

  std::vector<double> grid = options.sample_times;
  if (grid.empty()) {
    grid = uniform_grid(t_end, dt_out);
  } else if (grid.front() != 0.0 || !std::is_sorted(grid.begin(), grid.end())) {
    throw std::invalid_argument("propagate: sample times must start at 0 and ascend");
  }
  const auto outcome = integrate_sampled<kDim>(system, x0, grid, options.tol, observer);
  traj.stats = outcome.stats;
  traj.divergent = outcome.status == OdeStatus::diverged;
  return traj;
}

namespace {

FixedPoint continued_fixed_point(SystemParams params, double drive) {
  auto fp = steady_state([&] {
    SystemParams p = params;
    p.drive = drive;
    return p;
  }());
  if (fp.converged) return fp;
  // Walk up from zero drive, seeding each Newton solve with the previous root.
  std::optional<ClassicalState> guess;
  const int steps = std::max(1, static_cast<int>(std::ceil(drive / 5.0)));
  for (int k = 1; k <= steps; ++k) {
    params.drive = drive * k / steps;
    fp = steady_state(params, guess);
    if (!fp.converged) return fp;
    guess = fp.state;
  }
  return fp;
}

}  // namespace

std::vector<StabilityPoint> stability_scan(const SystemParams& params, const std::vector<double>& drives,
                                           const StabilityOptions& options) {
  if (drives.empty()) throw std::invalid_argument("stability_scan: no drives");
  std::vector<StabilityPoint> points(drives.size());
  parallel_for(drives.size(), options.workers, [&](std::size_t i) {
    StabilityPoint& pt = points[i];
    pt.drive = drives[i];
    try {
      const auto fp = continued_fixed_point(params, drives[i]);
      pt.converged = fp.converged;
      pt.fixed_point = fp.state;
      if (!fp.converged) {
        pt.error = "fixed point did not converge";
        return;
      }
      SystemParams p = params;
      p.drive = drives[i];
      pt.max_re_eig = max_real_eigenvalue(drift_matrix<double>(fp.state, p, options.convention));
      pt.stable = pt.max_re_eig < -kStabilityDeadBand;
    } catch (const std::exception& e) {
      pt.error = e.what();
    }
  });
  return points;
}

}  // namespace gainloss
