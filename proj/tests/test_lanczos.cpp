#include <doctest.h>

#include <cmath>
#include <random>

#include "krylov/ensembles.hpp"
#include "krylov/lanczos.hpp"
#include "test_support.hpp"

using namespace krylov;
using krylov::test::pauli_x;
using krylov::test::pauli_z;

namespace {

using LD = long double;

// Gram-Schmidt (applied twice) on the raw sequence {L^n O}, each power rescaled
// to unit length before projection, in long double. Returns b_1 .. b_{D-1}.
std::vector<double> brute_force_b(const ComplexMatrix<double>& h, const ComplexMatrix<double>& o,
                                  const std::function<Complex<LD>(const ComplexVector<LD>&, const ComplexVector<LD>&)>& ip) {
  const Eigen::Index d = h.rows();
  const ComplexMatrix<LD> hl = h.cast<Complex<LD>>();
  auto liou = [&](const ComplexVector<LD>& v) {
    const auto m = Eigen::Map<const ComplexMatrix<LD>>(v.data(), d, d);
    const ComplexMatrix<LD> c = hl * m - m * hl;
    return ComplexVector<LD>(Eigen::Map<const ComplexVector<LD>>(c.data(), c.size()));
  };
  auto norm = [&](const ComplexVector<LD>& v) { return std::sqrt(std::real(ip(v, v))); };

  std::vector<ComplexVector<LD>> q;
  ComplexVector<LD> raw = Eigen::Map<const ComplexVector<double>>(o.data(), o.size()).cast<Complex<LD>>();
  raw /= norm(raw);
  q.push_back(raw);
  for (Eigen::Index n = 1; n <= d * d; ++n) {
    raw = liou(raw);
    const LD scale = norm(raw);
    if (scale == 0) break;
    raw /= scale;
    ComplexVector<LD> r = raw;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& qk : q) r -= ip(qk, r) * qk;
    const LD rn = norm(r);
    if (rn < 1e-13L) break;
    q.push_back(r / rn);
  }
  std::vector<double> b;
  for (std::size_t n = 1; n < q.size(); ++n) b.push_back(double(std::abs(ip(q[n], liou(q[n - 1])))));
  return b;
}

Complex<LD> hs_ip(const ComplexVector<LD>& a, const ComplexVector<LD>& b) { return a.dot(b); }

LanczosResult<double> run_qubit(const ComplexMatrix<double>& o, bool basis = true) {
  LanczosOptions<double> opts;
  opts.store_basis = basis;
  return run_lanczos(HermitianMatrix<double>(pauli_z()), OperatorVector<double>::from_matrix(o), opts);
}

}  // namespace

TEST_CASE("qubit coefficients") {
  const auto r = run_qubit(pauli_x() + pauli_z());
  REQUIRE(r.b.size() == 2);
  CHECK(r.dimension == 3);
  CHECK(!r.truncated);
  CHECK(std::abs(r.b[0] - std::sqrt(2.0)) < 1e-12);
  CHECK(std::abs(r.b[1] - std::sqrt(2.0)) < 1e-12);
  CHECK(orthogonality_report(r) < 1e-12);

  const auto x = run_qubit(pauli_x());
  CHECK(x.dimension == 2);
  REQUIRE(x.b.size() == 1);
  CHECK(x.b[0] == doctest::Approx(2).epsilon(1e-12));

  const auto z = run_qubit(pauli_z());
  CHECK(z.dimension == 1);
  CHECK(z.b.empty());
}

TEST_CASE("lanczos input errors") {
  CHECK_THROWS_AS(run_qubit(ComplexMatrix<double>::Zero(2, 2)), ValidationError);
  ComplexMatrix<double> raise(2, 2);
  raise << 0, 1, 0, 0;
  try {
    run_qubit(raise);
    FAIL("expected a property 2 violation");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("inner-product property 2 violated") != std::string::npos);
  }
  const auto r = run_qubit(pauli_x() + pauli_z(), false);
  CHECK_THROWS_AS(orthogonality_report(r), ValidationError);
}

TEST_CASE("max_steps flags truncation") {
  std::mt19937_64 rng(4);
  LanczosOptions<double> opts;
  opts.max_steps = 5;
  const auto h = test::random_hermitian(4, rng);
  const auto r = run_lanczos(h, OperatorVector<double>::from_matrix(test::random_hermitian_matrix(4, rng)), opts);
  CHECK(r.truncated);
  CHECK(r.dimension == 5);
  CHECK(r.b.size() == 4);
}

TEST_CASE("agrees with brute-force gram-schmidt") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index d = 2 + trial % 3;
    const auto hm = test::random_hermitian_matrix(d, rng);
    const auto om = test::random_hermitian_matrix(d, rng);
    const auto r = run_lanczos(HermitianMatrix<double>(hm), OperatorVector<double>::from_matrix(om));
    const auto want = brute_force_b(hm, om, hs_ip);
    REQUIRE(r.b.size() == want.size());
    CHECK(r.dimension == d * d - d + 1);
    for (std::size_t n = 0; n < want.size(); ++n) CHECK(std::abs(r.b[n] - want[n]) < 1e-8);
  }
}

TEST_CASE("thermal coefficients agree with brute force") {
  std::mt19937_64 rng(78);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index d = 2 + trial % 2;
    const auto hm = test::random_hermitian_matrix(d, rng);
    const auto om = test::random_hermitian_matrix(d, rng);
    const double beta = 1.0;
    const HermitianMatrix<double> h(hm);
    const auto spec = InnerProductSpec<double>::thermal(h, beta);
    const auto r = run_lanczos(h, OperatorVector<double>::from_matrix(om, spec), spec);

    const ComplexMatrix<LD> half = (ComplexMatrix<double>(-beta / 2 * hm)).exp().cast<Complex<LD>>();
    const Complex<LD> z = (half * half).trace();
    auto thermal = [&](const ComplexVector<LD>& a, const ComplexVector<LD>& b) {
      const auto ma = Eigen::Map<const ComplexMatrix<LD>>(a.data(), d, d);
      const auto mb = Eigen::Map<const ComplexMatrix<LD>>(b.data(), d, d);
      return Complex<LD>((half * ma.adjoint() * half * mb).trace() / z);
    };
    const auto want = brute_force_b(hm, om, thermal);
    REQUIRE(r.b.size() == want.size());
    for (std::size_t n = 0; n < want.size(); ++n) CHECK(std::abs(r.b[n] - want[n]) < 1e-8);
  }
}

TEST_CASE("stored basis satisfies the recurrence and conventions") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index d = 3 + trial % 3;
    const auto h = test::random_hermitian(d, rng);
    const auto o = OperatorVector<double>::from_matrix(test::random_hermitian_matrix(d, rng));
    LanczosOptions<double> opts;
    opts.store_basis = true;
    const auto r = run_lanczos(h, o, opts);
    const auto& basis = *r.basis;
    REQUIRE(Eigen::Index(basis.size()) == r.dimension);
    CHECK(orthogonality_report(r) < 1e-8);
    CHECK(*r.ortho_error < 1e-8);

    const auto l0 = apply_liouvillian(h, basis[0]);
    CHECK(std::abs(inner_product(basis[0], l0)) < 1e-10);
    CHECK(std::abs(inner_product(l0, l0) - r.b[0] * r.b[0]) < 1e-10);

    for (std::size_t n = 0; n < basis.size(); ++n) {
      ComplexVector<double> rhs = ComplexVector<double>::Zero(d * d);
      if (n + 1 < basis.size()) rhs += r.b[n] * basis[n + 1].components();
      if (n > 0) rhs += r.b[n - 1] * basis[n - 1].components();
      const auto lhs = apply_liouvillian(h, basis[n]);
      CHECK(lhs.with_components(lhs.components() - rhs).norm() < 1e-8);
    }
  }
}

TEST_CASE("krylov dimension is capped by d^2 - d + 1") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const auto h = test::random_hermitian(8, rng);
    const auto r = run_lanczos(h, OperatorVector<double>::from_matrix(test::random_hermitian_matrix(8, rng)));
    CHECK(r.dimension <= 57);
    const HamiltonianSpectrum<double> s(h);
    const auto dense = run_lanczos(s, uniform_observable_coordinates(8), InnerProductSpec<double>::hilbert_schmidt(8));
    CHECK(dense.dimension == 57);
  }
}

TEST_CASE("qubit with the uniform observable reaches D = 3") {
  const HermitianMatrix<double> h(pauli_z());
  const auto o = uniform_observable(h);
  CHECK(o.norm() == doctest::Approx(1).epsilon(1e-12));
  const auto r = run_lanczos(h, o);
  CHECK(r.dimension == 3);
}

TEST_CASE("full and partial reorthogonalization agree") {
  for (Eigen::Index d : {8, 12, 16}) {
    const HamiltonianSpectrum<double> s(goe_sample(d, 1.0, 1000 + std::uint64_t(d)));
    LanczosOptions<double> full, partial;
    full.policy = ReorthPolicy<double>(Reorthogonalization::full);
    partial.policy = ReorthPolicy<double>(Reorthogonalization::partial);
    const auto coords = uniform_observable_coordinates(d);
    const auto spec = InnerProductSpec<double>::hilbert_schmidt(d);
    const auto a = run_lanczos(s, coords, spec, full);
    const auto b = run_lanczos(s, coords, spec, partial);
    REQUIRE(a.b.size() == b.b.size());
    CHECK(a.dimension == d * d - d + 1);
    double worst = 0;
    for (std::size_t n = 0; n < a.b.size(); ++n) worst = std::max(worst, std::abs(a.b[n] - b.b[n]));
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("goe d=32 orthogonality with and without reorthogonalization") {
  const HamiltonianSpectrum<double> s(goe_sample(32, 1.0, 5));
  const auto coords = uniform_observable_coordinates(32);
  const auto spec = InnerProductSpec<double>::hilbert_schmidt(32);

  LanczosOptions<double> full;
  full.policy = ReorthPolicy<double>(Reorthogonalization::full);
  full.store_basis = true;
  const auto r = run_lanczos(s, coords, spec, full);
  CHECK(r.dimension == 993);
  CHECK(*r.ortho_error < 1e-8);

  LanczosOptions<double> none;
  none.policy = ReorthPolicy<double>(Reorthogonalization::none);
  none.store_basis = true;
  none.max_steps = 993;
  const auto bad = run_lanczos(s, coords, spec, none);
  CHECK(*bad.ortho_error > 1e-8);
}
