#pragma once

// Closed complexity algebras: the saturating Lanczos law
//   b_n = sqrt(alpha n (n - 1) / 4 + gamma n / 2),
// the closure test on a coefficient sequence, and the three closed-form
// families SU(2), Heisenberg-Weyl and SL(2,R) (the SYK family).

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "krylov/dynamics.hpp"

namespace krylov {

enum class AlgebraKind { su2, hw, sl2r };

inline const char* to_string(AlgebraKind k) {
  switch (k) {
    case AlgebraKind::su2: return "SU2";
    case AlgebraKind::hw: return "HW";
    case AlgebraKind::sl2r: return "SL2R";
  }
  return "?";
}

template <class Real>
Real saturating_b(Real alpha, Real gamma, Eigen::Index n) {
  detail::require(n >= 1, "saturating b: n must be at least 1");
  const Real nr = Real(n);
  const Real radicand = alpha * nr * (nr - 1) / 4 + gamma * nr / 2;
  if (radicand >= 0) return std::sqrt(radicand);
  // b_D = 0 exactly at the end of a finite chain; absorb rounding there.
  const Real scale = std::abs(alpha) * nr * nr + std::abs(gamma) * nr;
  if (radicand > -Real(1e-12) * scale) return Real(0);
  throw ValidationError("saturating b: n = " + std::to_string(n) + " is beyond the Krylov dimension for this (alpha, gamma)");
}

template <class Real = double>
class AlgebraModel {
 public:
  static AlgebraModel su2(Real j, Real nu) {
    const Real two_j = 2 * j;
    detail::require(std::abs(two_j - std::round(two_j)) < Real(1e-12) && std::round(two_j) >= 1,
                    "su2: j must be a positive half-integer");
    detail::require(nu > 0, "su2: nu must be positive");
    AlgebraModel m(AlgebraKind::su2);
    m.j_ = std::round(two_j) / 2;
    m.nu_ = nu;
    return m;
  }

  static AlgebraModel hw(Real nu) {
    detail::require(nu > 0, "hw: nu must be positive");
    AlgebraModel m(AlgebraKind::hw);
    m.nu_ = nu;
    return m;
  }

  static AlgebraModel sl2r(Real eta, Real nu) {
    detail::require(eta > 0, "sl2r: eta must be positive");
    detail::require(nu > 0, "sl2r: nu must be positive");
    AlgebraModel m(AlgebraKind::sl2r);
    m.eta_ = eta;
    m.nu_ = nu;
    return m;
  }

  // The model whose coefficients follow the saturating law for (alpha, gamma).
  static AlgebraModel from_closure(Real alpha, Real gamma, std::optional<Eigen::Index> dimension = std::nullopt) {
    detail::require(gamma > 0, "closure parameters: gamma must be positive");
    if (dimension) {
      const Eigen::Index d = *dimension;
      detail::require(d >= 2, "closure parameters: finite D must be at least 2");
      const Real expected = -2 * gamma / Real(d - 1);
      detail::require(std::abs(alpha - expected) <= Real(1e-9) * std::max(Real(1), std::abs(expected)),
                      "closure parameters: finite D requires alpha = -2 gamma / (D - 1)");
      return su2(Real(d - 1) / 2, std::sqrt(gamma / (2 * Real(d - 1))));
    }
    detail::require(alpha >= 0, "closure parameters: infinite D requires alpha >= 0");
    if (alpha == 0) return hw(std::sqrt(gamma / 2));
    return sl2r(2 * gamma / alpha, std::sqrt(alpha) / 2);
  }

  AlgebraKind kind() const { return kind_; }
  Real j() const { return j_; }
  Real nu() const { return nu_; }
  Real eta() const { return eta_; }

  Real alpha() const {
    switch (kind_) {
      case AlgebraKind::su2: return -4 * nu_ * nu_;
      case AlgebraKind::hw: return 0;
      default: return 4 * nu_ * nu_;
    }
  }

  Real gamma() const {
    switch (kind_) {
      case AlgebraKind::su2: return 4 * nu_ * nu_ * j_;
      case AlgebraKind::hw: return 2 * nu_ * nu_;
      default: return 2 * nu_ * nu_ * eta_;
    }
  }

  std::optional<Eigen::Index> dimension() const {
    if (kind_ == AlgebraKind::su2) return static_cast<Eigen::Index>(std::llround(2 * j_)) + 1;
    return std::nullopt;
  }

  Real coefficient(Eigen::Index n) const {
    detail::require(n >= 1, "model: coefficient index starts at 1");
    const Real nr = Real(n);
    switch (kind_) {
      case AlgebraKind::su2:
        detail::require(n <= 2 * j_ + Real(0.5), "su2: coefficient index beyond 2j + 1");
        return nu_ * std::sqrt(nr * (2 * j_ + 1 - nr));
      case AlgebraKind::hw: return nu_ * std::sqrt(nr);
      default: return nu_ * std::sqrt(nr * (nr - 1 + eta_));
    }
  }

  // b_1 .. b_{count}; for SU(2) at most b_{D-1}.
  std::vector<Real> coefficients(Eigen::Index count) const {
    if (auto d = dimension()) count = std::min(count, *d - 1);
    std::vector<Real> b;
    for (Eigen::Index n = 1; n <= count; ++n) b.push_back(coefficient(n));
    return b;
  }

 private:
  explicit AlgebraModel(AlgebraKind k) : kind_(k) {}
  AlgebraKind kind_;
  Real j_ = 0, nu_ = 1, eta_ = 0;
};

template <class Real = double>
struct ClosureReport {
  bool closed = false;
  bool trivial = false;  // fewer than two f(n) values: closure is unconstrained
  Real alpha = 0;
  Real gamma = 0;
  Real max_residual = 0;
  std::vector<Real> f_values;
  std::optional<Eigen::Index> dimension;
};

// f(n) = (b_{n+1}^2 - b_n^2) - (b_{n+2}^2 - b_{n+1}^2) with b_0 = 0 and, for
// finite D, b_D = 0. Closed iff f is constant to within tol; then
// alpha = -2 mean(f) and gamma = 2 b_1^2.
template <class Real>
ClosureReport<Real> closure_test(std::span<const Real> b, std::optional<Eigen::Index> dimension, Real tol) {
  detail::require(tol >= 0, "closure: tolerance must be non-negative");
  if (dimension) {
    detail::require(*dimension == Eigen::Index(b.size()) + 1, "closure: finite D must equal len(b) + 1");
  }
  std::vector<Real> sq{Real(0)};
  for (Real x : b) sq.push_back(x * x);
  if (dimension) sq.push_back(Real(0));

  ClosureReport<Real> r;
  r.dimension = dimension;
  for (std::size_t n = 0; n + 2 < sq.size(); ++n) r.f_values.push_back((sq[n + 1] - sq[n]) - (sq[n + 2] - sq[n + 1]));
  r.trivial = r.f_values.size() < 2;

  Real mean = 0;
  for (Real f : r.f_values) mean += f;
  if (!r.f_values.empty()) mean /= Real(r.f_values.size());
  for (Real f : r.f_values) r.max_residual = std::max(r.max_residual, std::abs(f - mean));

  r.alpha = -2 * mean;
  r.gamma = b.empty() ? Real(0) : 2 * b[0] * b[0];
  r.closed = r.max_residual <= tol && r.gamma > 0;
  return r;
}

template <class Real>
AlgebraKind classify_algebra(Real alpha, Real tol) {
  if (alpha < -tol) return AlgebraKind::su2;
  if (alpha > tol) return AlgebraKind::sl2r;
  return AlgebraKind::hw;
}

// Solution of d^2K/dt^2 = alpha K + gamma with K(0) = 0, K even.
template <class Real>
Real saturated_complexity(Real alpha, Real gamma, std::optional<Eigen::Index> dimension, Real t) {
  detail::require(gamma > 0, "saturated complexity: gamma must be positive");
  if (dimension) {
    const Eigen::Index d = *dimension;
    detail::require(d >= 2, "saturated complexity: finite D must be at least 2");
    const Real expected = -2 * gamma / Real(d - 1);
    detail::require(std::abs(alpha - expected) <= Real(1e-9) * std::max(Real(1), std::abs(expected)),
                    "saturated complexity: finite D requires alpha = -2 gamma / (D - 1)");
    const Real omega = std::sqrt(gamma / (2 * Real(d - 1)));
    const Real s = std::sin(omega * t);
    return Real(d - 1) * s * s;
  }
  detail::require(alpha >= 0, "saturated complexity: infinite D requires alpha >= 0");
  if (alpha == 0) return gamma * t * t / 2;
  const Real s = std::sinh(std::sqrt(alpha) * t / 2);
  return 2 * gamma / alpha * s * s;
}

namespace detail {

template <class Real>
Real signed_exp(Real log_magnitude, bool negative) {
  const Real v = std::exp(log_magnitude);
  return negative ? -v : v;
}

template <class Real>
Real log_cosh(Real x) {
  const Real ax = std::abs(x);
  return ax + std::log1p(std::exp(-2 * ax)) - std::log(Real(2));
}

template <class Real>
Real model_amplitude(const AlgebraModel<Real>& m, Eigen::Index n, Real t) {
  const Real nr = Real(n);
  const Real x = m.nu() * t;
  switch (m.kind()) {
    case AlgebraKind::su2: {
      // sin^n cos^(2j-n) sqrt(C(2j, n))
      const Real two_j = 2 * m.j();
      const Real rest = two_j - nr;
      const Real s = std::sin(x), c = std::cos(x);
      if (s == 0) return n == 0 ? std::pow(c, two_j) : Real(0);
      if (c == 0) return std::abs(rest) < Real(0.5) ? std::pow(s, two_j) : Real(0);
      const Real log_binom = std::lgamma(two_j + 1) - std::lgamma(nr + 1) - std::lgamma(rest + 1);
      const bool negative = (s < 0 && n % 2 == 1) != (c < 0 && std::llround(rest) % 2 == 1);
      return signed_exp(nr * std::log(std::abs(s)) + rest * std::log(std::abs(c)) + log_binom / 2, negative);
    }
    case AlgebraKind::hw: {
      if (x == 0) return n == 0 ? Real(1) : Real(0);
      const Real lg = -x * x / 2 + nr * std::log(std::abs(x)) - std::lgamma(nr + 1) / 2;
      return signed_exp(lg, x < 0 && n % 2 == 1);
    }
    default: {
      if (x == 0) return n == 0 ? Real(1) : Real(0);
      const Real eta = m.eta();
      const Real th = std::tanh(x);
      const Real log_poch = std::lgamma(eta + nr) - std::lgamma(eta) - std::lgamma(nr + 1);
      const Real lg = log_poch / 2 + nr * std::log(std::abs(th)) - eta * log_cosh(x);
      return signed_exp(lg, th < 0 && n % 2 == 1);
    }
  }
}

}  // namespace detail

// Closed-form amplitudes. SU(2) uses its full 2j + 1 sites; the infinite
// families need a truncation and fail if more than 1e-9 of the norm lies
// beyond the first N - 2 sites.
template <class Real>
AmplitudeTrajectory<Real> model_amplitudes(const AlgebraModel<Real>& model, std::span<const Real> times,
                                           std::optional<Eigen::Index> truncation = std::nullopt) {
  Eigen::Index n_sites;
  if (auto d = model.dimension()) {
    n_sites = *d;
  } else {
    detail::require(truncation.has_value() && *truncation >= 3, "model amplitudes: infinite models need a truncation >= 3");
    n_sites = *truncation;
  }
  AmplitudeTrajectory<Real> traj;
  traj.times.assign(times.begin(), times.end());
  traj.b = model.coefficients(n_sites - 1);
  traj.truncated = !model.dimension().has_value();
  traj.phi.resize(static_cast<Eigen::Index>(times.size()), n_sites);
  for (Eigen::Index k = 0; k < traj.phi.rows(); ++k) {
    for (Eigen::Index n = 0; n < n_sites; ++n)
      traj.phi(k, n) = detail::model_amplitude(model, n, times[static_cast<std::size_t>(k)]);
    const Real head = traj.phi.row(k).head(std::max<Eigen::Index>(0, n_sites - 2)).squaredNorm();
    traj.tail_mass = std::max(traj.tail_mass, std::max(Real(0), Real(1) - head));
  }
  if (traj.truncated && traj.tail_mass > Real(1e-9)) {
    throw ValidationError("model amplitudes: truncation " + std::to_string(n_sites) + " too small (tail mass " +
                          std::to_string(double(traj.tail_mass)) + ")");
  }
  return traj;
}

// (K, Delta K) from the closed forms.
template <class Real>
std::pair<Real, Real> model_observables(const AlgebraModel<Real>& model, Real t) {
  const Real x = model.nu() * t;
  switch (model.kind()) {
    case AlgebraKind::su2: {
      const Real s = std::sin(x);
      return {2 * model.j() * s * s, std::sqrt(model.j() / 2) * std::abs(std::sin(2 * x))};
    }
    case AlgebraKind::hw: return {x * x, std::abs(x)};
    default: {
      // negative binomial occupation: mean eta sinh^2, variance eta sinh^2 cosh^2
      const Real sh = std::sinh(x);
      return {model.eta() * sh * sh, std::sqrt(model.eta()) * std::abs(sh) * std::cosh(x)};
    }
  }
}

// Parses "su2:j=..,nu=..", "hw:nu=..", "syk:eta=..,nu=.." or
// "sat:alpha=..,gamma=..[,D=..]".
AlgebraModel<double> parse_model_spec(const std::string& spec);
std::string describe(const AlgebraModel<double>& model);

}  // namespace krylov
