#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "krylov/dynamics.hpp"
#include "test_support.hpp"

using namespace krylov;

namespace {

const double kSqrt2 = std::numbers::sqrt2;

ComplexityProfile<double> qubit_profile(const std::vector<double>& times) {
  const std::vector<double> b{kSqrt2, kSqrt2};
  return complexity_profile(evolve_amplitudes<double>(b, times));
}

std::function<double(Eigen::Index)> hw_family(double nu) {
  return [nu](Eigen::Index n) { return nu * std::sqrt(double(n)); };
}

}  // namespace

TEST_CASE("time grid") {
  const auto g = time_grid(2.0, 5);
  REQUIRE(g.size() == 5);
  CHECK(g.front() == 0);
  CHECK(g.back() == 2.0);
  CHECK(g[2] == doctest::Approx(1.0));
  CHECK_THROWS_AS(time_grid(0.0, 5), ValidationError);
  CHECK_THROWS_AS(time_grid(1.0, 1), ValidationError);
}

TEST_CASE("qubit profile") {
  const auto times = time_grid(2 * std::numbers::pi, 629);
  const auto p = qubit_profile(times);
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double t = p.times[k];
    CHECK(std::abs(p.complexity[k] - 2 * std::sin(t) * std::sin(t)) < 1e-12);
    CHECK(std::abs(p.dispersion[k] - std::sqrt(0.5) * std::abs(std::sin(2 * t))) < 1e-12);
    CHECK(std::abs(p.bound[k] - 2 * kSqrt2 * p.dispersion[k]) < 1e-12);
    if (p.ratio[k]) CHECK(std::abs(*p.ratio[k] - 1) < 1e-8);
  }
  CHECK(p.complexity[0] == 0);
  CHECK(p.rate[0] == 0);
  CHECK(p.dispersion[0] == 0);
  CHECK(!p.ratio[0]);
  CHECK(!p.tau[0]);
}

TEST_CASE("heisenberg-weyl profile") {
  const auto times = time_grid(3.0, 61);
  const auto traj = evolve_amplitudes<double>(hw_family(1.0), times);
  CHECK(traj.tail_mass < 1e-12);
  const auto p = complexity_profile(traj);
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double t = p.times[k];
    CHECK(std::abs(p.complexity[k] - t * t) < 1e-10);
    CHECK(std::abs(p.dispersion[k] * p.dispersion[k] - t * t) < 1e-10);
    if (p.ratio[k]) CHECK(std::abs(*p.ratio[k] - 1) < 1e-8);
  }
}

TEST_CASE("fixed truncation of an infinite family") {
  const auto times = time_grid(1.0, 11);
  EvolutionOptions<double> opts;
  opts.truncation = 40;
  const auto traj = evolve_amplitudes<double>(hw_family(1.0), times, opts);
  CHECK(traj.sites() == 40);
  CHECK(traj.truncated);
  EvolutionOptions<double> tiny;
  tiny.max_truncation = 32;
  CHECK_THROWS_AS(evolve_amplitudes<double>(hw_family(1.0), time_grid(50.0, 3), tiny), NumericalError);
}

TEST_CASE("finite lists: truncation and auto growth") {
  std::vector<double> b(500, 1.0);
  const auto times = time_grid(2.0, 21);
  EvolutionOptions<double> cut;
  cut.truncation = 30;
  const auto t1 = evolve_amplitudes<double>(b, times, cut);
  CHECK(t1.truncated);
  CHECK(t1.sites() == 30);

  EvolutionOptions<double> grow;
  grow.auto_truncate = true;
  const auto t2 = evolve_amplitudes<double>(b, times, grow);
  CHECK(t2.sites() < 501);
  CHECK(t2.tail_mass < 1e-12);
  const auto full = evolve_amplitudes<double>(b, times);
  CHECK(full.sites() == 501);
  const auto pa = complexity_profile(t2), pb = complexity_profile(full);
  for (std::size_t k = 0; k < times.size(); ++k) CHECK(std::abs(pa.complexity[k] - pb.complexity[k]) < 1e-9);

  CHECK_THROWS_AS(evolve_amplitudes<double>(std::vector<double>{1.0, -1.0}, times), ValidationError);
}

TEST_CASE("evolution methods agree") {
  std::mt19937_64 rng(31);
  const auto times = time_grid(10.0, 21);
  for (int trial = 0; trial < 5; ++trial) {
    const auto b = test::uniform_coefficients(20 + 20 * trial, rng);
    const auto ref = evolve_amplitudes<double>(b, times);
    for (auto method : {EvolutionMethod::rk4, EvolutionMethod::series}) {
      EvolutionOptions<double> opts;
      opts.method = method;
      const auto other = evolve_amplitudes<double>(b, times, opts);
      CHECK((ref.phi - other.phi).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
}

TEST_CASE("norm conservation and parity") {
  std::mt19937_64 rng(32);
  const auto b = test::uniform_coefficients(20, rng);
  std::vector<double> times{0.3, 1.1, 2.9, 4.0};
  std::vector<double> neg;
  for (double t : times) neg.push_back(-t);
  const auto fwd = evolve_amplitudes<double>(b, times);
  const auto bwd = evolve_amplitudes<double>(b, neg);
  for (Eigen::Index k = 0; k < fwd.phi.rows(); ++k) {
    CHECK(std::abs(fwd.phi.row(k).squaredNorm() - 1) < 1e-12);
    for (Eigen::Index n = 0; n < fwd.sites(); ++n) {
      const double sign = n % 2 ? -1 : 1;
      CHECK(std::abs(bwd.phi(k, n) - sign * fwd.phi(k, n)) < 1e-9);
    }
  }
  const auto pf = complexity_profile(fwd), pb = complexity_profile(bwd);
  for (std::size_t k = 0; k < times.size(); ++k) CHECK(std::abs(pf.complexity[k] - pb.complexity[k]) < 1e-9);
}

TEST_CASE("dispersion bound holds for random coefficients") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> ut(0, 20);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto b = test::uniform_coefficients(20, rng);
    std::vector<double> times(50);
    for (auto& t : times) t = ut(rng);
    const auto p = complexity_profile(evolve_amplitudes<double>(b, times));
    for (const auto& r : p.ratio)
      if (r) worst = std::max(worst, *r);
  }
  CHECK(worst <= 1 + 1e-8);
}

TEST_CASE("rate agrees with finite differences of K") {
  std::mt19937_64 rng(9);
  const auto b = test::uniform_coefficients(20, rng);
  for (double dt : {1e-2, 5e-3}) {
    const std::vector<double> times{1.0 - dt, 1.0, 1.0 + dt};
    const auto p = complexity_profile(evolve_amplitudes<double>(b, times));
    const double fd = (p.complexity[2] - p.complexity[0]) / (2 * dt);
    CHECK(std::abs(fd - p.rate[1]) < 50 * dt * dt);
  }
}

TEST_CASE("anticommutator vanishes") {
  const std::vector<double> qb{kSqrt2, kSqrt2};
  const std::vector<double> t07{0.0, 0.7};
  const auto q = evolve_amplitudes<double>(qb, t07);
  CHECK(anticommutator_expectation(q, 0) == 0);
  CHECK(std::abs(anticommutator_expectation(q, 1)) < 1e-12);

  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> ut(0, 10);
  for (int trial = 0; trial < 20; ++trial) {
    const auto b = test::uniform_coefficients(20, rng);
    std::vector<double> times(10);
    for (auto& t : times) t = ut(rng);
    const auto traj = evolve_amplitudes<double>(b, times);
    for (std::size_t k = 0; k < times.size(); ++k) CHECK(std::abs(anticommutator_expectation(traj, k)) < 1e-10);
  }
}

TEST_CASE("liouvillian moments are conserved") {
  const std::vector<double> qb{kSqrt2, kSqrt2};
  const std::vector<double> t13{0.0, 1.3};
  const auto q = evolve_amplitudes<double>(qb, t13);
  for (std::size_t k = 0; k < 2; ++k) {
    const auto [m1, m2] = liouvillian_moments(q, k);
    CHECK(std::abs(m1) < 1e-12);
    CHECK(std::abs(m2 - 2) < 1e-12);
  }
  const std::vector<double> t2{2.0};
  const auto hw = evolve_amplitudes<double>(hw_family(1.0), t2);
  const auto [h1, h2] = liouvillian_moments(hw, 0);
  CHECK(std::abs(h1) < 1e-9);
  CHECK(std::abs(h2 - 1) < 1e-9);
}

TEST_CASE("short-time coefficients") {
  // Frozen from a symbolic expansion of K(t) = sum n phi_n^2 on a 6-site chain.
  auto [c2, c4] = short_time_coefficients(kSqrt2, kSqrt2);
  CHECK(c2 == doctest::Approx(2));
  CHECK(c4 == doctest::Approx(-2.0 / 3));  // 2 sin^2 t = 2t^2 - (2/3) t^4 + ...
  std::tie(c2, c4) = short_time_coefficients(1.0, 2.0);
  CHECK(c4 == doctest::Approx(1.0 / 3));  // sinh^2 t
  std::tie(c2, c4) = short_time_coefficients(1.0, kSqrt2);
  CHECK(std::abs(c4) < 1e-15);  // t^2
  CHECK(sixth_order_coefficient(kSqrt2, kSqrt2, 0.0) == doctest::Approx(4.0 / 45));  // 2 sin^2 t
  CHECK(sixth_order_coefficient(1.0, 2.0, 3.0) == doctest::Approx(2.0 / 45));        // sinh^2 t
}

TEST_CASE("sixth-order expansion matches evolution") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const auto b = test::uniform_coefficients(10, rng);
    const auto [c2, c4] = short_time_coefficients(b[0], b[1]);
    const double c6 = sixth_order_coefficient(b[0], b[1], b[2]);
    const std::vector<double> times{0.02};
    const auto p = complexity_profile(evolve_amplitudes<double>(b, times));
    const double t = times[0];
    const double series = c2 * t * t + c4 * std::pow(t, 4) + c6 * std::pow(t, 6);
    CHECK(std::abs(p.complexity[0] - series) < 1e-12);
  }
}

TEST_CASE("deviation time") {
  CHECK(deviation_time_printed(1.0, kSqrt2, std::sqrt(3.0)) == doctest::Approx(std::sqrt(8.0 / 3)));
  // tau^2 = |4 c4| / |6 c6| with c4 = 1/3, c6 = 2/45.
  CHECK(deviation_time(1.0, 2.0, 3.0) == doctest::Approx(std::sqrt(5.0)));
  const double base = deviation_time(1.0, 1.7, 2.1);
  CHECK(deviation_time(3.0, 5.1, 6.3) == doctest::Approx(base / 3));
  CHECK_THROWS_AS(deviation_time(1.0, kSqrt2, std::sqrt(3.0)), NumericalError);  // Heisenberg-Weyl
  CHECK_THROWS_AS(deviation_time<double>(std::vector<double>{1.0, 2.0}), ValidationError);
  CHECK_THROWS_AS(deviation_time(0.0, 1.0, 1.0), ValidationError);
}
