#pragma once

#include <random>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "krylov/operator_space.hpp"

namespace krylov::test {

inline ComplexMatrix<double> random_complex(Eigen::Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0, 1);
  ComplexMatrix<double> m(d, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < d; ++i) m(i, j) = {n(rng), n(rng)};
  return m;
}

inline ComplexMatrix<double> random_hermitian_matrix(Eigen::Index d, std::mt19937_64& rng) {
  const ComplexMatrix<double> m = random_complex(d, rng);
  return (m + m.adjoint()) / 2;
}

inline HermitianMatrix<double> random_hermitian(Eigen::Index d, std::mt19937_64& rng) {
  return HermitianMatrix<double>(random_hermitian_matrix(d, rng));
}

inline ComplexMatrix<double> pauli_x() {
  ComplexMatrix<double> m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

inline ComplexMatrix<double> pauli_z() {
  ComplexMatrix<double> m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

inline std::vector<double> uniform_coefficients(std::size_t n, std::mt19937_64& rng, double hi = 3) {
  std::uniform_real_distribution<double> u(0, hi);
  std::vector<double> b(n);
  for (auto& x : b) {
    do x = u(rng);
    while (x == 0);
  }
  return b;
}

}  // namespace krylov::test
