#pragma once

// Amplitude dynamics on the Krylov chain and the complexity diagnostics built
// from it.
//
// The amplitudes obey d/dt phi_n = b_n phi_{n-1} - b_{n+1} phi_{n+1} with
// phi(0) = e_0; equivalently c_n = i^n phi_n satisfies dc/dt = i T c for the
// symmetric tridiagonal T with off-diagonals b_n. A chain truncated to N sites
// uses b_N = 0.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "krylov/core.hpp"

namespace krylov {

enum class EvolutionMethod { tridiag_eigen, rk4, series };

inline const char* to_string(EvolutionMethod m) {
  switch (m) {
    case EvolutionMethod::tridiag_eigen: return "tridiag-eigen";
    case EvolutionMethod::rk4: return "rk4";
    case EvolutionMethod::series: return "series";
  }
  return "?";
}

inline EvolutionMethod parse_evolution_method(const std::string& s) {
  if (s == "tridiag-eigen") return EvolutionMethod::tridiag_eigen;
  if (s == "rk4") return EvolutionMethod::rk4;
  if (s == "series") return EvolutionMethod::series;
  throw ValidationError("method: expected tridiag-eigen, rk4 or series (got '" + s + "')");
}

template <class Real = double>
struct EvolutionOptions {
  EvolutionMethod method = EvolutionMethod::tridiag_eigen;
  // Number of chain sites kept. Required-or-auto for infinite families; for a
  // finite coefficient list it may only shorten the chain.
  std::optional<Eigen::Index> truncation;
  // Finite lists only: with no truncation set, grow the kept chain by doubling
  // from initial_truncation until the tail mass drops below tail_tol, then trim
  // it to the shortest chain that still meets tail_tol.
  bool auto_truncate = false;
  Real rk4_step = 0;  // 0: 2e-3 / max b
  Real tail_tol = Real(1e-12);
  Eigen::Index initial_truncation = 64;
  Eigen::Index max_truncation = Eigen::Index(1) << 15;
};

template <class Real = double>
struct AmplitudeTrajectory {
  std::vector<Real> times;
  Matrix<Real> phi;     // phi(k, n) = phi_n(t_k)
  std::vector<Real> b;  // b_1 .. b_{N-1} of the evolved chain
  bool truncated = false;
  Real tail_mass = 0;  // max_k sum_{n >= N-2} phi_n(t_k)^2

  Eigen::Index sites() const { return phi.cols(); }
  Real b1() const { return b.empty() ? Real(0) : b.front(); }
  // b_n with b_0 = 0 and b_N = 0 at the chain end.
  Real coefficient(Eigen::Index n) const {
    return n >= 1 && n <= Eigen::Index(b.size()) ? b[static_cast<std::size_t>(n - 1)] : Real(0);
  }
};

template <class Real = double>
struct ComplexityProfile {
  std::vector<Real> times;
  std::vector<Real> complexity;
  std::vector<Real> rate;
  std::vector<Real> dispersion;
  std::vector<Real> bound;
  std::vector<std::optional<Real>> ratio;  // |rate| / bound
  std::vector<std::optional<Real>> tau;    // dispersion / |rate|
  Real b1 = 0;

  std::size_t size() const { return times.size(); }
};

template <class Real = double>
std::vector<Real> time_grid(Real t_max, Eigen::Index steps) {
  detail::require(t_max > 0, "time grid: t_max must be positive");
  detail::require(steps >= 2, "time grid: steps must be at least 2");
  std::vector<Real> t(static_cast<std::size_t>(steps));
  for (Eigen::Index k = 0; k < steps; ++k) t[static_cast<std::size_t>(k)] = t_max * Real(k) / Real(steps - 1);
  return t;
}

namespace detail {

template <class Real>
Vector<Real> chain_derivative(std::span<const Real> b, const Vector<Real>& phi) {
  const Eigen::Index n_sites = phi.size();
  Vector<Real> out(n_sites);
  for (Eigen::Index n = 0; n < n_sites; ++n) {
    Real v = 0;
    if (n >= 1) v += b[static_cast<std::size_t>(n - 1)] * phi(n - 1);
    if (n + 1 < n_sites) v -= b[static_cast<std::size_t>(n)] * phi(n + 1);
    out(n) = v;
  }
  return out;
}

template <class Real>
Matrix<Real> evolve_tridiag_eigen(std::span<const Real> b, std::span<const Real> times, Eigen::Index n_sites) {
  const auto n_times = static_cast<Eigen::Index>(times.size());
  Matrix<Real> phi(n_times, n_sites);
  if (n_sites == 1) {
    phi.setOnes();
    return phi;
  }
  Vector<Real> diag = Vector<Real>::Zero(n_sites);
  Vector<Real> sub(n_sites - 1);
  for (Eigen::Index n = 0; n + 1 < n_sites; ++n) sub(n) = b[static_cast<std::size_t>(n)];
  Eigen::SelfAdjointEigenSolver<Matrix<Real>> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw NumericalError("evolve: tridiagonal eigen-decomposition failed");
  const Matrix<Real>& v = es.eigenvectors();
  const Vector<Real>& lambda = es.eigenvalues();
  const Vector<Real> w0 = v.row(0).transpose();

  Matrix<Real> wc(n_sites, n_times), ws(n_sites, n_times);
  for (Eigen::Index k = 0; k < n_times; ++k) {
    const Real t = times[static_cast<std::size_t>(k)];
    wc.col(k) = w0.cwiseProduct((lambda * t).array().cos().matrix());
    ws.col(k) = w0.cwiseProduct((lambda * t).array().sin().matrix());
  }
  const Matrix<Real> re = v * wc;  // Re c_n
  const Matrix<Real> im = v * ws;  // Im c_n
  // phi_n = Re((-i)^n c_n)
  for (Eigen::Index n = 0; n < n_sites; ++n) {
    switch (n % 4) {
      case 0: phi.col(n) = re.row(n).transpose(); break;
      case 1: phi.col(n) = im.row(n).transpose(); break;
      case 2: phi.col(n) = -re.row(n).transpose(); break;
      default: phi.col(n) = -im.row(n).transpose(); break;
    }
  }
  return phi;
}

// Integrates from each output time to the next, starting at t = 0.
template <class Real, class Stepper>
Matrix<Real> evolve_stepwise(std::span<const Real> times, Eigen::Index n_sites, Real max_step, Stepper&& step) {
  Matrix<Real> phi(static_cast<Eigen::Index>(times.size()), n_sites);
  Vector<Real> state = Vector<Real>::Zero(n_sites);
  state(0) = 1;
  Real now = 0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const Real span = times[k] - now;
    const auto n_steps = static_cast<long>(std::ceil(std::abs(span) / max_step));
    if (n_steps > 0) {
      const Real h = span / Real(n_steps);
      for (long s = 0; s < n_steps; ++s) step(state, h);
    }
    now = times[k];
    phi.row(static_cast<Eigen::Index>(k)) = state.transpose();
  }
  return phi;
}

template <class Real>
Matrix<Real> evolve_rk4(std::span<const Real> b, std::span<const Real> times, Eigen::Index n_sites, Real h_max) {
  auto rhs = [&](const Vector<Real>& x) { return chain_derivative<Real>(b, x); };
  Matrix<Real> phi = evolve_stepwise<Real>(times, n_sites, h_max, [&](Vector<Real>& x, Real h) {
    const Vector<Real> k1 = rhs(x);
    const Vector<Real> k2 = rhs(x + (h / 2) * k1);
    const Vector<Real> k3 = rhs(x + (h / 2) * k2);
    const Vector<Real> k4 = rhs(x + h * k3);
    x += (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
  });
  for (Eigen::Index k = 0; k < phi.rows(); ++k) {
    const Real drift = std::abs(phi.row(k).squaredNorm() - Real(1));
    if (drift > Real(1e-6)) {
      throw NumericalError("evolve: rk4 norm drift " + std::to_string(double(drift)) +
                           " exceeds 1e-6; use a smaller step");
    }
  }
  return phi;
}

// Truncated Taylor series of exp(M h) with |h| * ||M|| <= 1, summed to working precision.
template <class Real>
Matrix<Real> evolve_series(std::span<const Real> b, std::span<const Real> times, Eigen::Index n_sites, Real h_max) {
  const Real eps = std::numeric_limits<Real>::epsilon();
  return evolve_stepwise<Real>(times, n_sites, h_max, [&](Vector<Real>& x, Real h) {
    Vector<Real> term = x;
    Vector<Real> sum = x;
    for (int k = 1; k < 200; ++k) {
      term = chain_derivative<Real>(b, term) * (h / Real(k));
      sum += term;
      if (term.norm() <= eps * Real(1e-3) * sum.norm()) break;
    }
    x = sum;
  });
}

template <class Real>
AmplitudeTrajectory<Real> evolve_chain(std::vector<Real> b, std::span<const Real> times, EvolutionMethod method,
                                       Real rk4_step) {
  const auto n_sites = static_cast<Eigen::Index>(b.size()) + 1;
  const Real b_max = b.empty() ? Real(0) : *std::max_element(b.begin(), b.end());
  AmplitudeTrajectory<Real> traj;
  traj.times.assign(times.begin(), times.end());
  if (n_sites == 1 || method == EvolutionMethod::tridiag_eigen) {
    traj.phi = evolve_tridiag_eigen<Real>(b, times, n_sites);
  } else if (method == EvolutionMethod::rk4) {
    const Real h = rk4_step > 0 ? rk4_step : Real(2e-3) / b_max;
    traj.phi = evolve_rk4<Real>(b, times, n_sites, h);
  } else {
    traj.phi = evolve_series<Real>(b, times, n_sites, Real(1) / (2 * b_max));
  }
  for (Eigen::Index k = 0; k < traj.phi.rows(); ++k) {
    if (times[static_cast<std::size_t>(k)] != 0) continue;
    traj.phi.row(k).setZero();
    traj.phi(k, 0) = 1;
  }
  const Eigen::Index first_tail = std::max<Eigen::Index>(0, n_sites - 2);
  for (Eigen::Index k = 0; k < traj.phi.rows(); ++k)
    traj.tail_mass = std::max(traj.tail_mass, traj.phi.row(k).tail(n_sites - first_tail).squaredNorm());
  traj.b = std::move(b);
  return traj;
}

template <class Real>
void validate_coefficients(std::span<const Real> b) {
  for (std::size_t n = 0; n < b.size(); ++n) {
    if (!(b[n] > 0) || !std::isfinite(double(b[n]))) {
      throw ValidationError("coefficients: b_" + std::to_string(n + 1) + " must be positive and finite");
    }
  }
}

// Smallest chain length whose last two sites would hold less than `tol` at
// every time, judged from the amplitudes of a longer chain.
template <class Real>
Eigen::Index sites_needed(const Matrix<Real>& phi, Real tol) {
  const Eigen::Index n_sites = phi.cols();
  Vector<Real> worst = Vector<Real>::Zero(n_sites);  // worst(n) = max_k sum_{m >= n} phi_m^2
  for (Eigen::Index k = 0; k < phi.rows(); ++k) {
    Real acc = 0;
    for (Eigen::Index n = n_sites - 1; n >= 0; --n) {
      acc += phi(k, n) * phi(k, n);
      worst(n) = std::max(worst(n), acc);
    }
  }
  Eigen::Index n = n_sites;
  while (n > 0 && worst(n - 1) < tol) --n;
  return std::min(n_sites, n + 2);
}

// Auto truncation: double the chain with the series integrator, which is cheap
// for long chains, then run `method` once on the shortest chain that keeps the
// tail below tol. `run(sites, method)` evolves the first `sites` sites.
template <class Real, class Run>
AmplitudeTrajectory<Real> auto_truncated(Run&& run, Eigen::Index start, Eigen::Index limit, bool limit_is_end,
                                         const EvolutionOptions<Real>& options) {
  Eigen::Index sites = std::max<Eigen::Index>(4, start);
  AmplitudeTrajectory<Real> scan;
  for (;; sites *= 2) {
    if (sites >= limit) {
      if (limit_is_end) return run(limit, options.method);
      throw NumericalError("evolve: tail mass still above " + std::to_string(double(options.tail_tol)) +
                           " at truncation " + std::to_string(limit) + "; shorten the time grid");
    }
    scan = run(sites, EvolutionMethod::series);
    if (scan.tail_mass < options.tail_tol) break;
  }
  const Eigen::Index fit = std::min(sites, sites_needed(scan.phi, options.tail_tol) + 8);
  if (options.method == EvolutionMethod::series && fit == sites) return scan;
  auto traj = run(fit, options.method);
  if (traj.tail_mass < options.tail_tol) return traj;
  return run(sites, options.method);
}

}  // namespace detail

// Evolves a finite coefficient list b_1..b_{D-1}. A truncation shorter than D
// keeps only the first sites and flags the trajectory as truncated.
template <class Real>
AmplitudeTrajectory<Real> evolve_amplitudes(std::span<const Real> b, std::span<const Real> times,
                                            const EvolutionOptions<Real>& options = {}) {
  detail::validate_coefficients(b);
  auto n_sites = static_cast<Eigen::Index>(b.size()) + 1;
  bool truncated = false;
  if (options.truncation) {
    detail::require(*options.truncation >= 1, "evolve: truncation must be at least 1");
    if (*options.truncation < n_sites) {
      n_sites = *options.truncation;
      truncated = true;
    }
  }
  auto run = [&](Eigen::Index sites, EvolutionMethod method) {
    auto traj = detail::evolve_chain<Real>(std::vector<Real>(b.begin(), b.begin() + (sites - 1)), times, method,
                                           options.rk4_step);
    traj.truncated = sites < n_sites || truncated;
    return traj;
  };
  if (!options.truncation && options.auto_truncate) {
    return detail::auto_truncated<Real>(run, options.initial_truncation, n_sites, true, options);
  }
  return run(n_sites, options.method);
}

// Evolves an infinite family n -> b_n. With no truncation set, the chain is
// sized automatically as for auto_truncate on a finite list.
template <class Real>
AmplitudeTrajectory<Real> evolve_amplitudes(const std::function<Real(Eigen::Index)>& coefficient,
                                            std::span<const Real> times, const EvolutionOptions<Real>& options = {}) {
  auto run = [&](Eigen::Index n_sites, EvolutionMethod method) {
    std::vector<Real> b(static_cast<std::size_t>(n_sites - 1));
    for (Eigen::Index n = 1; n < n_sites; ++n) b[static_cast<std::size_t>(n - 1)] = coefficient(n);
    detail::validate_coefficients<Real>(b);
    auto traj = detail::evolve_chain<Real>(std::move(b), times, method, options.rk4_step);
    traj.truncated = true;
    return traj;
  };
  if (options.truncation) {
    detail::require(*options.truncation >= 2, "evolve: truncation must be at least 2");
    return run(*options.truncation, options.method);
  }
  return detail::auto_truncated<Real>(run, options.initial_truncation, options.max_truncation + 1, false, options);
}

template <class Real>
ComplexityProfile<Real> complexity_profile(const AmplitudeTrajectory<Real>& traj) {
  ComplexityProfile<Real> p;
  const std::size_t n_times = traj.times.size();
  const Eigen::Index n_sites = traj.sites();
  p.times = traj.times;
  p.b1 = traj.b1();
  p.complexity.resize(n_times);
  p.rate.resize(n_times);
  p.dispersion.resize(n_times);
  p.bound.resize(n_times);
  p.ratio.resize(n_times);
  p.tau.resize(n_times);
  // Near full localization both rate and dispersion are pure rounding noise.
  const Real undefined_below = 2 * std::sqrt(std::numeric_limits<Real>::epsilon()) * p.b1;

  for (std::size_t k = 0; k < n_times; ++k) {
    const auto phi = traj.phi.row(static_cast<Eigen::Index>(k));
    Real mean = 0;
    for (Eigen::Index n = 1; n < n_sites; ++n) mean += Real(n) * phi(n) * phi(n);
    Real var = 0, rate = 0;
    for (Eigen::Index n = 0; n < n_sites; ++n) {
      const Real dev = Real(n) - mean;
      var += dev * dev * phi(n) * phi(n);
      if (n == 0) continue;
      Real dphi = traj.coefficient(n) * phi(n - 1);
      if (n + 1 < n_sites) dphi -= traj.coefficient(n + 1) * phi(n + 1);
      rate += Real(n) * phi(n) * dphi;
    }
    rate *= 2;
    const Real dispersion = std::sqrt(var);
    const Real bound = 2 * p.b1 * dispersion;
    p.complexity[k] = mean;
    p.rate[k] = rate;
    p.dispersion[k] = dispersion;
    p.bound[k] = bound;
    if (p.b1 > 0 && bound > undefined_below) p.ratio[k] = std::abs(rate) / bound;
    if (p.b1 > 0 && std::abs(rate) > undefined_below) p.tau[k] = dispersion / std::abs(rate);
  }
  return p;
}

namespace detail {

template <class Real>
Complex<Real> i_power(Eigen::Index n) {
  switch (n % 4) {
    case 0: return {1, 0};
    case 1: return {0, 1};
    case 2: return {-1, 0};
    default: return {0, -1};
  }
}

template <class Real>
ComplexVector<Real> krylov_state(const AmplitudeTrajectory<Real>& traj, std::size_t k) {
  detail::require(k < traj.times.size(), "trajectory: time index out of range");
  const Eigen::Index n_sites = traj.sites();
  ComplexVector<Real> c(n_sites);
  for (Eigen::Index n = 0; n < n_sites; ++n) c(n) = i_power<Real>(n) * traj.phi(static_cast<Eigen::Index>(k), n);
  return c;
}

}  // namespace detail

// 2 Re <O(t)| K L |O(t)> from the matrix elements
// (KL)_{n,n+1} = n b_{n+1}, (KL)_{n+1,n} = (n+1) b_{n+1}.
template <class Real>
Real anticommutator_expectation(const AmplitudeTrajectory<Real>& traj, std::size_t k) {
  const ComplexVector<Real> c = detail::krylov_state(traj, k);
  Complex<Real> acc(0);
  for (Eigen::Index n = 0; n + 1 < c.size(); ++n) {
    const Real bn1 = traj.coefficient(n + 1);
    acc += std::conj(c(n)) * (Real(n) * bn1) * c(n + 1);
    acc += std::conj(c(n + 1)) * (Real(n + 1) * bn1) * c(n);
  }
  return 2 * acc.real();
}

// (<L>_t, <L^2>_t) in the tridiagonal representation.
template <class Real>
std::pair<Real, Real> liouvillian_moments(const AmplitudeTrajectory<Real>& traj, std::size_t k) {
  const ComplexVector<Real> c = detail::krylov_state(traj, k);
  const Eigen::Index n_sites = c.size();
  ComplexVector<Real> lc = ComplexVector<Real>::Zero(n_sites);
  for (Eigen::Index n = 0; n < n_sites; ++n) {
    if (n >= 1) lc(n) += traj.coefficient(n) * c(n - 1);
    if (n + 1 < n_sites) lc(n) += traj.coefficient(n + 1) * c(n + 1);
  }
  return {c.dot(lc).real(), lc.squaredNorm()};
}

// (c2, c4) with K(t) = c2 t^2 + c4 t^4 + O(t^6), from the Taylor expansion of
// the amplitude recursion: c4 = -(1/6) b1^2 (2 b1^2 - b2^2).
template <class Real>
std::pair<Real, Real> short_time_coefficients(Real b1, Real b2) {
  detail::require(b1 > 0 && b2 > 0, "short-time coefficients: b1, b2 must be positive");
  const Real s1 = b1 * b1, s2 = b2 * b2;
  return {s1, -s1 * (2 * s1 - s2) / 6};
}

// c6 = b1^2 (8 b1^4 + b1^2 b2^2 - 7 b2^4 + 3 b2^2 b3^2) / 180; b3 = 0 when D = 3.
template <class Real>
Real sixth_order_coefficient(Real b1, Real b2, Real b3) {
  detail::require(b1 > 0 && b2 > 0 && b3 >= 0, "sixth-order coefficient: b1, b2 must be positive and b3 >= 0");
  const Real s1 = b1 * b1, s2 = b2 * b2, s3 = b3 * b3;
  return s1 * (8 * s1 * s1 + s1 * s2 - 7 * s2 * s2 + 3 * s2 * s3) / 180;
}

// Time at which the t^3 and t^5 terms of dK/dt have equal magnitude,
// tau_d^2 = |4 c4| / |6 c6|. Undefined when either term vanishes, as for any
// sequence that saturates the bound through third order in b.
template <class Real>
Real deviation_time(Real b1, Real b2, Real b3) {
  detail::require(b1 > 0 && b2 > 0 && b3 > 0, "deviation time: b1, b2, b3 must be positive");
  const Real c4 = short_time_coefficients(b1, b2).second;
  const Real c6 = sixth_order_coefficient(b1, b2, b3);
  const Real scale = std::pow(std::max({b1, b2, b3}), 4) * b1 * b1;
  const Real eps = 64 * std::numeric_limits<Real>::epsilon();
  if (std::abs(c4) <= eps * scale || std::abs(c6) <= eps * scale * b1 * b1) {
    throw NumericalError("deviation time undefined (vanishing t^3 or t^5 term of dK/dt)");
  }
  return std::sqrt(std::abs(4 * c4) / std::abs(6 * c6));
}

template <class Real>
Real deviation_time(std::span<const Real> b) {
  if (b.size() < 3) throw ValidationError("deviation time: needs b_3, i.e. Krylov dimension D >= 4");
  return deviation_time(b[0], b[1], b[2]);
}

// The closed form as it appears in print:
//   sqrt( (2/3) b1^2 (2 b2^2 - b1^2)
//         / ((1/20) b1^2 (b1^2 + b2^2) - (1/5) b2^2 (b1^2 + b2^2 + b3^2) + (1/2) b2^2 b3^2) ).
// Numerator and denominator are both quartic in b, so the result is not a
// time; kept for comparison only.
template <class Real>
Real deviation_time_printed(Real b1, Real b2, Real b3) {
  detail::require(b1 > 0 && b2 > 0 && b3 > 0, "deviation time: b1, b2, b3 must be positive");
  const Real s1 = b1 * b1, s2 = b2 * b2, s3 = b3 * b3;
  const Real num = Real(2) / 3 * s1 * (2 * s2 - s1);
  const Real den = s1 * (s1 + s2) / 20 - s2 * (s1 + s2 + s3) / 5 + s2 * s3 / 2;
  if (den == 0 || !(num / den > 0)) throw NumericalError("deviation time undefined (non-positive radicand)");
  return std::sqrt(num / den);
}

}  // namespace krylov
