#include <doctest.h>

#include <cmath>

#include "krylov/ensembles.hpp"
#include "krylov/io.hpp"

using namespace krylov;

TEST_CASE("splitmix64 and child seeds") {
  CHECK(splitmix64(0) == 0xE220A8397B1DCDAFULL);
  CHECK(child_seed(7, 3) == 8346079845500723674ULL);
  CHECK(child_seed(7, 0) != child_seed(7, 1));
  CHECK(child_seed(7, 0) != child_seed(8, 0));
}

TEST_CASE("goe-v1 sample matches an independent implementation") {
  // mt19937_64 + Marsaglia polar reimplemented outside C++, seed 42, d = 4.
  const double want[4][4] = {
      {1.2938204232729367, 0.9117716594391689, 0.0445843622100231, 0.5095596267108047},
      {0.9117716594391689, -1.9066853448304657, -0.7386171105657917, -0.5227677788658953},
      {0.0445843622100231, -0.7386171105657917, 1.4133667356902182, 0.7490837298227127},
      {0.5095596267108047, -0.5227677788658953, 0.7490837298227127, -0.6379973453480245}};
  const auto h = goe_sample_real(4, 1.0, 42);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(std::abs(h(i, j) - want[i][j]) <= 1e-15);
}

TEST_CASE("goe sampling is deterministic and linear in sigma") {
  const auto a = goe_sample_real(16, 1.0, 123);
  const auto b = goe_sample_real(16, 1.0, 123);
  CHECK(a == b);
  CHECK(goe_sample_real(16, 2.0, 123) == 2 * a);
  CHECK(a == a.transpose());
  CHECK(goe_sample_real(16, 1.0, 124) != a);
  CHECK_THROWS_AS(goe_sample_real(1, 1.0, 1), ValidationError);
  CHECK_THROWS_AS(goe_sample_real(4, 0.0, 1), ValidationError);
}

TEST_CASE("goe entry moments") {
  const Eigen::Index d = 32;
  const int samples = 10000;
  double diag = 0, off = 0;
  long n_diag = 0, n_off = 0;
  for (int s = 0; s < samples; ++s) {
    const auto h = goe_sample_real(d, 1.0, child_seed(99, std::uint64_t(s)));
    diag += h(s % d, s % d) * h(s % d, s % d);
    ++n_diag;
    const Eigen::Index i = s % d, j = (s + 1 + s / d) % d;
    if (i != j) {
      off += h(i, j) * h(i, j);
      ++n_off;
    }
  }
  CHECK(diag / double(n_diag) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(off / double(n_off) == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("uniform observable") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto h = goe_sample(6, 1.0, seed);
    const auto o = uniform_observable(h);
    CHECK(std::abs(o.norm() - 1) < 1e-12);
    const HamiltonianSpectrum<double> s(h);
    const auto c = s.to_eigen_coordinates(o.matrix());
    CHECK((c - uniform_observable_coordinates(6)).norm() < 1e-12);
  }
}

TEST_CASE("ensemble dimension saturation") {
  for (Eigen::Index d : {8, 16}) {
    GoeSpec spec;
    spec.d = d;
    spec.count = 3;
    spec.seed = 11;
    const auto r = run_ensemble(spec);
    CHECK(r.failed == 0);
    REQUIRE(r.dimension_histogram.size() == 1);
    CHECK(r.dimension_histogram.begin()->first == d * d - d + 1);
    CHECK(r.mean_b_sq.size() == std::size_t(d * d - d));
  }
}

TEST_CASE("count = 1 mean equals the realization") {
  GoeSpec spec;
  spec.d = 6;
  spec.count = 1;
  spec.seed = 3;
  const auto r = run_ensemble(spec);
  REQUIRE(r.realizations.size() == 1);
  const auto& b = r.realizations[0].b;
  REQUIRE(r.mean_b_sq.size() == b.size());
  for (std::size_t n = 0; n < b.size(); ++n) {
    CHECK(r.mean_b_sq[n] == b[n] * b[n]);
    CHECK(r.std_b_sq[n] == 0);
  }
}

TEST_CASE("ensemble results do not depend on the worker count") {
  GoeSpec spec;
  spec.d = 8;
  spec.count = 12;
  spec.seed = 2024;
  EnsembleOptions one, many;
  one.workers = 1;
  many.workers = 8;
  one.deviation_diagnostics = many.deviation_diagnostics = true;
  one.profile_times = many.profile_times = time_grid(2.0, 21);
  const auto a = io::ensemble_to_json(run_ensemble(spec, one)).dump();
  const auto b = io::ensemble_to_json(run_ensemble(spec, many)).dump();
  CHECK(a == b);
}

TEST_CASE("ensemble diagnostics and averaged profile") {
  GoeSpec spec;
  spec.d = 10;
  spec.count = 4;
  spec.seed = 5;
  EnsembleOptions opts;
  opts.deviation_diagnostics = true;
  opts.profile_times = time_grid(1.0, 11);
  const auto r = run_ensemble(spec, opts);
  REQUIRE(r.averaged_profile);
  CHECK(r.averaged_profile->complexity.size() == 11);
  CHECK(r.averaged_profile->complexity[0] < 1e-20);
  for (const auto& rec : r.realizations) {
    REQUIRE(rec.diagnostics);
    CHECK(rec.diagnostics->max_ratio <= 1 + 1e-8);
    CHECK(*rec.tau_d > 0);
  }
}

TEST_CASE("goe spec validation") {
  GoeSpec spec;
  spec.d = 1;
  CHECK_THROWS_AS(run_ensemble(spec), ValidationError);
  spec.d = 4;
  spec.count = 0;
  CHECK_THROWS_AS(run_ensemble(spec), ValidationError);
  spec.count = 1;
  spec.sigma = -1;
  CHECK_THROWS_AS(run_ensemble(spec), ValidationError);
}

TEST_CASE("pairwise sum") {
  std::vector<double> v(1000, 0.1);
  CHECK(pairwise_sum(v.data(), v.size()) == doctest::Approx(100.0).epsilon(1e-14));
  CHECK(pairwise_sum(v.data(), 0) == 0);
}
