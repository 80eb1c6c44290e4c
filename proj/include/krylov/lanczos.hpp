#pragma once

// Lanczos tridiagonalization of the Liouvillian on the cyclic subspace of an
// initial operator. The work is done in the Liouvillian eigenbasis, where L is
// diagonal with entries E_i - E_j and the thermal inner product is diagonal as
// well; each step then costs O(d^2) plus reorthogonalization.

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include "krylov/operator_space.hpp"

namespace krylov {

enum class Reorthogonalization { none, full, partial };

inline const char* to_string(Reorthogonalization r) {
  switch (r) {
    case Reorthogonalization::none: return "none";
    case Reorthogonalization::full: return "full";
    case Reorthogonalization::partial: return "partial";
  }
  return "?";
}

inline Reorthogonalization parse_reorthogonalization(const std::string& s) {
  if (s == "none") return Reorthogonalization::none;
  if (s == "full") return Reorthogonalization::full;
  if (s == "partial") return Reorthogonalization::partial;
  throw ValidationError("reorth: expected one of none, full, partial (got '" + s + "')");
}

template <class Real = double>
struct ReorthPolicy {
  Reorthogonalization mode = Reorthogonalization::full;
  // Partial mode: reorthogonalize once the estimated loss of orthogonality exceeds this.
  Real threshold = std::sqrt(std::numeric_limits<Real>::epsilon());

  ReorthPolicy() = default;
  explicit ReorthPolicy(Reorthogonalization m, Real thr = std::sqrt(std::numeric_limits<Real>::epsilon()))
      : mode(m), threshold(thr) {
    detail::require(thr > 0 && thr < 1, "reorth: threshold must lie in (0, 1)");
  }

  // Full for operator spaces up to 4096 components, partial above.
  static ReorthPolicy for_space(Eigen::Index components) {
    return ReorthPolicy(components <= 4096 ? Reorthogonalization::full : Reorthogonalization::partial);
  }
};

template <class Real = double>
struct LanczosOptions {
  std::optional<ReorthPolicy<Real>> policy;  // unset: ReorthPolicy::for_space
  Real halt_tol = Real(1e-10);               // relative to b_1
  std::optional<Eigen::Index> max_steps;     // basis size cap; unset: d^2 - d + 1
  bool store_basis = false;
  Real diagonal_tol = Real(1e-8);  // |<O_n|L O_n>| allowed, relative to max |E_i - E_j|
};

template <class Real = double>
struct LanczosResult {
  std::vector<Real> b;  // b_1 .. b_{D-1}
  Eigen::Index dimension = 0;
  bool truncated = false;
  Reorthogonalization policy = Reorthogonalization::full;
  Real max_diagonal = 0;  // largest |<O_n|L O_n>| seen
  std::optional<std::vector<OperatorVector<Real>>> basis;
  std::optional<Real> ortho_error;
};

// Output of the eigenbasis kernel. Basis columns are in sqrt(weight)-scaled
// coordinates, where the inner product is Euclidean.
template <class Scalar>
struct DiagonalLanczos {
  using Real = RealOf<Scalar>;
  std::vector<Real> b;
  Eigen::Index dimension = 0;
  bool truncated = false;
  Real max_diagonal = 0;
  Matrix<Scalar> basis;
};

namespace detail {

template <class Scalar>
void orthogonalize_against(Vector<Scalar>& a, const Matrix<Scalar>& v, Eigen::Index cols) {
  if (cols == 0) return;
  // Classical Gram-Schmidt, applied twice.
  for (int pass = 0; pass < 2; ++pass) {
    const Vector<Scalar> h = v.leftCols(cols).adjoint() * a;
    a.noalias() -= v.leftCols(cols) * h;
  }
}

}  // namespace detail

// Lanczos for the diagonal operator diag(omega) starting from `seed` with the
// Euclidean inner product. Works for real or complex Scalar.
template <class Scalar>
DiagonalLanczos<Scalar> lanczos_diagonal(const Vector<RealOf<Scalar>>& omega, const Vector<Scalar>& seed,
                                         ReorthPolicy<RealOf<Scalar>> policy, RealOf<Scalar> halt_tol,
                                         Eigen::Index max_steps, bool keep_basis, RealOf<Scalar> diagonal_tol) {
  using Real = RealOf<Scalar>;
  detail::require(omega.size() == seed.size(), "lanczos: seed length does not match the operator space");
  detail::require(halt_tol > 0, "lanczos: halt tolerance must be positive");
  detail::require(max_steps >= 1, "lanczos: max_steps must be at least 1");

  const Real norm0 = seed.norm();
  if (!(norm0 > 0)) throw ValidationError("lanczos: initial operator has zero norm");

  const Eigen::Index n_comp = omega.size();
  const Real scale = omega.cwiseAbs().maxCoeff();
  const Real eps = std::numeric_limits<Real>::epsilon();
  const bool reorth = policy.mode != Reorthogonalization::none;
  const bool keep = keep_basis || reorth;

  DiagonalLanczos<Scalar> out;
  Matrix<Scalar> v;
  if (keep) v.resize(n_comp, std::min<Eigen::Index>(max_steps, 64));

  Vector<Scalar> q = seed / norm0;
  Vector<Scalar> q_prev = Vector<Scalar>::Zero(n_comp);
  Vector<Scalar> a(n_comp);

  // Partial reorthogonalization: estimated |<q_j|q_k>| for the current and previous step.
  std::vector<Real> w_cur{Real(1)}, w_prev;
  bool force_reorth = false;

  auto b_at = [&](Eigen::Index n) -> Real { return n >= 1 ? out.b[static_cast<std::size_t>(n - 1)] : Real(0); };

  for (Eigen::Index n = 0;; ++n) {
    if (keep) {
      if (n >= v.cols()) v.conservativeResize(Eigen::NoChange, std::min<Eigen::Index>(max_steps, 2 * v.cols()));
      v.col(n) = q;
    }

    a = omega.template cast<Scalar>().cwiseProduct(q);
    const Real diag = (omega.array() * q.array().abs2()).sum();
    out.max_diagonal = std::max(out.max_diagonal, std::abs(diag));
    if (std::abs(diag) > diagonal_tol * scale) {
      throw NumericalError("lanczos: inner-product property 2 violated (|<O_n|L O_n>| = " +
                           std::to_string(double(std::abs(diag))) + " at n = " + std::to_string(n) + ")");
    }
    if (n > 0) a.noalias() -= b_at(n) * q_prev;

    Real beta;
    if (policy.mode == Reorthogonalization::full) {
      detail::orthogonalize_against(a, v, n + 1);
      beta = a.norm();
    } else if (policy.mode == Reorthogonalization::partial) {
      beta = a.norm();
      std::vector<Real> w_next(static_cast<std::size_t>(n + 2), Real(0));
      if (beta > 0) {
        for (Eigen::Index k = 0; k < n; ++k) {
          const auto ku = static_cast<std::size_t>(k);
          Real raw = b_at(k + 1) * w_cur[ku + 1] - b_at(n) * w_prev[ku];
          if (k > 0) raw += b_at(k) * w_cur[ku - 1];
          raw += std::copysign(eps * (b_at(k + 1) + beta), raw);
          w_next[ku] = raw / beta;
        }
      }
      w_next[static_cast<std::size_t>(n)] = eps * Real(n_comp);
      w_next.back() = 1;
      Real worst = 0;
      for (Eigen::Index k = 0; k < n; ++k) worst = std::max(worst, std::abs(w_next[static_cast<std::size_t>(k)]));
      if (force_reorth || worst > policy.threshold) {
        detail::orthogonalize_against(a, v, n + 1);
        beta = a.norm();
        for (Eigen::Index k = 0; k <= n; ++k) w_next[static_cast<std::size_t>(k)] = eps;
        force_reorth = !force_reorth;  // the following step is reorthogonalized too
      }
      w_prev = std::move(w_cur);
      w_cur = std::move(w_next);
    } else {
      beta = a.norm();
    }

    const Real threshold = n == 0 ? halt_tol * scale : halt_tol * out.b.front();
    if (!(beta > threshold)) {
      out.dimension = n + 1;
      break;
    }
    if (n + 1 >= max_steps) {
      out.dimension = n + 1;
      out.truncated = true;
      break;
    }
    out.b.push_back(beta);
    q_prev.swap(q);
    q = a / beta;
  }

  if (keep_basis) out.basis = v.leftCols(out.dimension);
  return out;
}

// Runs Lanczos from eigen-operator coordinates of the initial operator.
template <class Real>
LanczosResult<Real> run_lanczos(const HamiltonianSpectrum<Real>& spectrum, const ComplexVector<Real>& eigen_coords,
                                const InnerProductSpec<Real>& spec, const LanczosOptions<Real>& options = {}) {
  const Eigen::Index d = spectrum.dim();
  detail::require(eigen_coords.size() == d * d, "lanczos: operator dimension does not match the Hamiltonian");
  const Vector<Real> omega = spectrum.frequencies();
  const Vector<Real> sqrt_w = spec.eigen_weights(d).cwiseSqrt();
  const ComplexVector<Real> seed = sqrt_w.template cast<Complex<Real>>().cwiseProduct(eigen_coords);

  const auto policy = options.policy.value_or(ReorthPolicy<Real>::for_space(d * d));
  const Eigen::Index max_steps = options.max_steps.value_or(d * d - d + 1);

  LanczosResult<Real> result;
  result.policy = policy.mode;

  auto finish = [&](auto&& core) {
    result.b = std::move(core.b);
    result.dimension = core.dimension;
    result.truncated = core.truncated;
    result.max_diagonal = core.max_diagonal;
    if (!options.store_basis) return;
    std::vector<OperatorVector<Real>> basis;
    basis.reserve(static_cast<std::size_t>(core.dimension));
    for (Eigen::Index n = 0; n < core.dimension; ++n) {
      const ComplexVector<Real> c = core.basis.col(n).template cast<Complex<Real>>().cwiseQuotient(
          sqrt_w.template cast<Complex<Real>>());
      const ComplexMatrix<Real> m = spectrum.from_eigen_coordinates(c);
      basis.push_back(OperatorVector<Real>::from_matrix(m, spec));
    }
    result.basis = std::move(basis);
    using Gram = std::decay_t<decltype(core.basis)>;
    const Gram gram = core.basis.adjoint() * core.basis;
    result.ortho_error = (gram - Gram::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
  };

  if (seed.imag().isZero(0)) {
    const Vector<Real> real_seed = seed.real();
    finish(lanczos_diagonal<Real>(omega, real_seed, policy, options.halt_tol, max_steps, options.store_basis,
                                  options.diagonal_tol));
  } else {
    finish(lanczos_diagonal<Complex<Real>>(omega, seed, policy, options.halt_tol, max_steps, options.store_basis,
                                           options.diagonal_tol));
  }
  return result;
}

// Lanczos on (L, O) with L = [H, .] and the inner product `spec`. A thermal
// spec must be bound to the same Hamiltonian.
template <class Real>
LanczosResult<Real> run_lanczos(const HermitianMatrix<Real>& h, const OperatorVector<Real>& o,
                                const InnerProductSpec<Real>& spec, const LanczosOptions<Real>& options = {}) {
  detail::require(h.dim() == o.dim(), "lanczos: Hamiltonian and operator dimensions differ");
  if (spec.is_thermal()) {
    const auto& s = *spec.spectrum();
    return run_lanczos(s, s.to_eigen_coordinates(o.matrix()), spec, options);
  }
  const HamiltonianSpectrum<Real> s(h);
  return run_lanczos(s, s.to_eigen_coordinates(o.matrix()), spec, options);
}

template <class Real>
LanczosResult<Real> run_lanczos(const HermitianMatrix<Real>& h, const OperatorVector<Real>& o,
                                const LanczosOptions<Real>& options = {}) {
  return run_lanczos(h, o, o.spec(), options);
}

// max(max_{i!=j} |<O_i|O_j>|, max_i |<O_i|O_i> - 1|), evaluated with the
// operators' own inner product in the original coordinates.
template <class Real>
Real orthogonality_report(const LanczosResult<Real>& result) {
  if (!result.basis) throw ValidationError("orthogonality report: Lanczos basis was not stored");
  const auto& basis = *result.basis;
  Real off = 0, diag = 0;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    diag = std::max(diag, std::abs(inner_product(basis[i], basis[i]) - Complex<Real>(1)));
    for (std::size_t j = i + 1; j < basis.size(); ++j) off = std::max(off, std::abs(inner_product(basis[i], basis[j])));
  }
  return std::max(off, diag);
}

}  // namespace krylov
