#pragma once

// Hamiltonians, vectorized operators, the thermal inner-product family and the
// Liouvillian superoperator L = [H, .].
//
// Operators are vectorized column-major: element (i, j) of a d x d operator sits
// at index i + j * d. Coordinates in the Liouvillian eigenbasis (the operators
// |e_i><e_j| built from eigenvectors of H) are ordered lexicographically in
// (i, j), i.e. index i * d + j, with energies sorted ascending.

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include <Eigen/Eigenvalues>

#include "krylov/core.hpp"

namespace krylov {

template <class Real = double>
class HermitianMatrix {
 public:
  HermitianMatrix() = default;

  // Rejects matrices with |m_ij - conj(m_ji)| > tol * max(1, max|m|).
  explicit HermitianMatrix(ComplexMatrix<Real> m, Real tol = Real(1e-12)) : m_(std::move(m)) {
    detail::require(m_.rows() == m_.cols() && m_.rows() > 0, "hamiltonian: matrix must be square and non-empty");
    const Real scale = std::max(Real(1), m_.cwiseAbs().maxCoeff());
    const Real asym = (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
    if (!(asym <= tol * scale)) {
      throw ValidationError("hamiltonian: matrix is not Hermitian (max asymmetry " + std::to_string(double(asym)) + ")");
    }
  }

  static HermitianMatrix from_real(const Matrix<Real>& m) { return HermitianMatrix(m.template cast<Complex<Real>>()); }

  Eigen::Index dim() const { return m_.rows(); }
  const ComplexMatrix<Real>& matrix() const { return m_; }

 private:
  ComplexMatrix<Real> m_;
};

// Eigen-decomposition of H, energies ascending.
template <class Real = double>
struct HamiltonianSpectrum {
  Vector<Real> energies;
  ComplexMatrix<Real> vectors;  // columns are eigenvectors

  explicit HamiltonianSpectrum(const HermitianMatrix<Real>& h) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix<Real>> es(h.matrix());
    if (es.info() != Eigen::Success) throw NumericalError("hamiltonian: eigen-decomposition failed");
    energies = es.eigenvalues();
    vectors = es.eigenvectors();
  }

  Eigen::Index dim() const { return energies.size(); }

  // Liouvillian eigenvalues lambda_i - lambda_j in (i, j) lexicographic order.
  Vector<Real> frequencies() const {
    const Eigen::Index d = dim();
    Vector<Real> w(d * d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) w(i * d + j) = energies(i) - energies(j);
    return w;
  }

  // (U^dag A U)_{ij} laid out as index i * d + j.
  ComplexVector<Real> to_eigen_coordinates(const ComplexMatrix<Real>& a) const {
    const Eigen::Index d = dim();
    const ComplexMatrix<Real> t = vectors.adjoint() * a * vectors;
    ComplexVector<Real> c(d * d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) c(i * d + j) = t(i, j);
    return c;
  }

  ComplexMatrix<Real> from_eigen_coordinates(const ComplexVector<Real>& c) const {
    const Eigen::Index d = dim();
    ComplexMatrix<Real> t(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) t(i, j) = c(i * d + j);
    return vectors * t * vectors.adjoint();
  }
};

// <A|B> = Tr(e^{-bH/2} A^dag e^{-bH/2} B) / Z for beta > 0, and
// normalization * Tr(A^dag B) at beta = 0.
template <class Real = double>
class InnerProductSpec {
 public:
  // Hilbert-Schmidt with the given positive normalization.
  explicit InnerProductSpec(Real normalization = Real(1)) : normalization_(normalization) {
    detail::require(normalization > 0, "inner product: normalization must be positive");
  }

  // Hilbert-Schmidt normalized so the d x d identity has unit norm.
  static InnerProductSpec hilbert_schmidt(Eigen::Index d) {
    detail::require(d > 0, "inner product: dimension must be positive");
    return InnerProductSpec(Real(1) / Real(d));
  }

  // Thermal member of the family, bound to h. beta == 0 falls back to hilbert_schmidt(d).
  static InnerProductSpec thermal(const HermitianMatrix<Real>& h, Real beta) {
    detail::require(beta >= 0, "inner product: beta must be non-negative");
    auto spec = hilbert_schmidt(h.dim());
    if (beta == 0) return spec;
    spec.beta_ = beta;
    spec.spectrum_ = std::make_shared<const HamiltonianSpectrum<Real>>(h);
    const auto& e = spec.spectrum_->energies;
    // Shift by the ground energy before exponentiating.
    Vector<Real> half = (-(beta / 2) * (e.array() - e.minCoeff())).exp();
    const Real z = half.squaredNorm();
    spec.half_boltzmann_ = half / std::sqrt(z);
    return spec;
  }

  Real beta() const { return beta_; }
  Real normalization() const { return normalization_; }
  bool is_thermal() const { return beta_ > 0; }
  const HamiltonianSpectrum<Real>* spectrum() const { return spectrum_.get(); }

  // Weights of the inner product in eigen-operator coordinates of `spec`:
  // <A|B> = sum_k w_k conj(a_k) b_k. For beta > 0 `spec` must be the bound spectrum.
  Vector<Real> eigen_weights(Eigen::Index d) const {
    if (!is_thermal()) return Vector<Real>::Constant(d * d, normalization_);
    detail::require(d == spectrum_->dim(), "inner product: dimension mismatch with bound Hamiltonian");
    Vector<Real> w(d * d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) w(i * d + j) = half_boltzmann_(i) * half_boltzmann_(j);
    return w;
  }

  Complex<Real> operator()(const ComplexVector<Real>& a, const ComplexVector<Real>& b, Eigen::Index d) const {
    if (!is_thermal()) return normalization_ * a.dot(b);
    detail::require(d == spectrum_->dim(), "inner product: dimension mismatch with bound Hamiltonian");
    const auto ma = Eigen::Map<const ComplexMatrix<Real>>(a.data(), d, d);
    const auto mb = Eigen::Map<const ComplexMatrix<Real>>(b.data(), d, d);
    const auto& u = spectrum_->vectors;
    const ComplexMatrix<Real> ta = u.adjoint() * ma * u;
    const ComplexMatrix<Real> tb = u.adjoint() * mb * u;
    Complex<Real> acc(0);
    for (Eigen::Index j = 0; j < d; ++j)
      for (Eigen::Index i = 0; i < d; ++i)
        acc += half_boltzmann_(i) * half_boltzmann_(j) * std::conj(ta(i, j)) * tb(i, j);
    return acc;
  }

 private:
  Real beta_ = 0;
  Real normalization_ = 1;
  std::shared_ptr<const HamiltonianSpectrum<Real>> spectrum_;
  Vector<Real> half_boltzmann_;  // e^{-beta E_i / 2} / sqrt(Z)
};

template <class Real = double>
class OperatorVector {
 public:
  OperatorVector(ComplexVector<Real> components, Eigen::Index dim, InnerProductSpec<Real> spec)
      : dim_(dim), components_(std::move(components)), spec_(std::move(spec)) {
    detail::require(dim > 0 && components_.size() == dim * dim, "operator: component count must be dim^2");
  }

  static OperatorVector from_matrix(const ComplexMatrix<Real>& m, InnerProductSpec<Real> spec) {
    detail::require(m.rows() == m.cols(), "operator: matrix must be square");
    return OperatorVector(Eigen::Map<const ComplexVector<Real>>(m.data(), m.size()), m.rows(), std::move(spec));
  }
  static OperatorVector from_matrix(const ComplexMatrix<Real>& m) {
    return from_matrix(m, InnerProductSpec<Real>::hilbert_schmidt(m.rows()));
  }

  Eigen::Index dim() const { return dim_; }
  const ComplexVector<Real>& components() const { return components_; }
  const InnerProductSpec<Real>& spec() const { return spec_; }
  ComplexMatrix<Real> matrix() const { return Eigen::Map<const ComplexMatrix<Real>>(components_.data(), dim_, dim_); }

  Real norm() const { return std::sqrt(std::max(Real(0), std::real(spec_(components_, components_, dim_)))); }

  OperatorVector with_components(ComplexVector<Real> c) const { return OperatorVector(std::move(c), dim_, spec_); }

 private:
  Eigen::Index dim_;
  ComplexVector<Real> components_;
  InnerProductSpec<Real> spec_;
};

template <class Real>
Complex<Real> inner_product(const OperatorVector<Real>& a, const OperatorVector<Real>& b,
                            const InnerProductSpec<Real>& spec) {
  detail::require(a.dim() == b.dim(), "inner product: operator dimensions differ");
  return spec(a.components(), b.components(), a.dim());
}

template <class Real>
Complex<Real> inner_product(const OperatorVector<Real>& a, const OperatorVector<Real>& b) {
  return inner_product(a, b, a.spec());
}

// vec([H, A]).
template <class Real>
OperatorVector<Real> apply_liouvillian(const HermitianMatrix<Real>& h, const OperatorVector<Real>& a) {
  detail::require(h.dim() == a.dim(), "liouvillian: Hamiltonian and operator dimensions differ");
  const ComplexMatrix<Real> m = a.matrix();
  const ComplexMatrix<Real> c = h.matrix() * m - m * h.matrix();
  return a.with_components(Eigen::Map<const ComplexVector<Real>>(c.data(), c.size()));
}

// Dense d^2 x d^2 matrix M with M vec(A) = vec([H, A]) = (I (x) H - H^T (x) I) vec(A).
template <class Real>
ComplexMatrix<Real> build_superoperator(const HermitianMatrix<Real>& h, Eigen::Index max_dim = 64) {
  const Eigen::Index d = h.dim();
  if (d > max_dim) {
    throw ValidationError("superoperator: d = " + std::to_string(d) + " exceeds the dense guard (" +
                          std::to_string(max_dim) + "); use the matrix-free apply_liouvillian path");
  }
  const auto& hm = h.matrix();
  ComplexMatrix<Real> m = ComplexMatrix<Real>::Zero(d * d, d * d);
  for (Eigen::Index j = 0; j < d; ++j) {
    // block (j, j) gets H from I (x) H
    m.block(j * d, j * d, d, d) += hm;
    for (Eigen::Index l = 0; l < d; ++l) {
      // (H^T (x) I) has block (j, l) = H^T(j, l) I = H(l, j) I
      const Complex<Real> c = hm(l, j);
      if (c != Complex<Real>(0)) m.block(j * d, l * d, d, d).diagonal().array() -= c;
    }
  }
  return m;
}

}  // namespace krylov
