#pragma once

// GOE sampling and the ensemble pipeline: per realization, sample H, build the
// uniform observable in the Liouvillian eigenbasis, run Lanczos and optionally
// evolve and check the growth rate against the dispersion bound.

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "krylov/dynamics.hpp"
#include "krylov/lanczos.hpp"
#include "krylov/operator_space.hpp"

namespace krylov {

// Identifier of the sampling recipe; bump whenever goe_sample output changes.
inline constexpr const char* kGoeGenerator = "goe-v1:mt19937_64+marsaglia-polar";

std::uint64_t splitmix64(std::uint64_t x);
// Seed of realization `index` in an ensemble seeded with `seed`.
std::uint64_t child_seed(std::uint64_t seed, std::uint64_t index);

// Standard normal deviates from mt19937_64 via the Marsaglia polar method,
// using 53-bit uniforms. Unlike std::normal_distribution the output is fixed
// across standard library implementations.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : engine_(seed) {}
  double operator()();

 private:
  double uniform();  // in [0, 1)
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

struct GoeSpec {
  Eigen::Index d = 2;
  double sigma = 1;
  Eigen::Index count = 1;
  std::uint64_t seed = 0;
  std::optional<ReorthPolicy<double>> policy;  // unset: ReorthPolicy::for_space(d^2)
  double halt_tol = 1e-10;

  void validate() const;
};

// H = (X + X^T) / 2 with X_ij ~ N(0, sigma^2) drawn row by row.
HermitianMatrix<double> goe_sample(Eigen::Index d, double sigma, std::uint64_t seed);
Matrix<double> goe_sample_real(Eigen::Index d, double sigma, std::uint64_t seed);

// Coordinates of the uniform observable in the Liouvillian eigenbasis: every
// component equals 1/d.
ComplexVector<double> uniform_observable_coordinates(Eigen::Index d);

// The uniform observable in the original basis, with the plain trace inner
// product (normalization 1) so that ||O|| = 1.
OperatorVector<double> uniform_observable(const HermitianMatrix<double>& h);

struct EnsembleOptions {
  unsigned workers = 1;
  // Shared grid for the averaged complexity profile; unset: no averaging.
  std::optional<std::vector<double>> profile_times;
  // Per realization: evolve on [0, 5 tau_d] and record bound diagnostics.
  bool deviation_diagnostics = false;
  Eigen::Index diagnostic_steps = 401;
};

struct DeviationDiagnostics {
  double tau_d = 0;
  double max_ratio = 0;           // over every defined sample
  double min_ratio_early = 1;     // t <= tau_d / 2
  double min_ratio_late = 1;      // tau_d <= t <= 5 tau_d
  Eigen::Index samples = 0;
};

struct RealizationRecord {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string failure;
  std::vector<double> b;
  Eigen::Index dimension = 0;
  bool truncated = false;
  std::optional<double> tau_d;
  std::optional<DeviationDiagnostics> diagnostics;
};

struct AveragedProfile {
  std::vector<double> times;
  std::vector<double> complexity;
  std::vector<double> abs_rate;
  std::vector<double> bound;
};

struct EnsembleResult {
  GoeSpec spec;
  std::vector<RealizationRecord> realizations;
  std::vector<double> mean_b_sq;  // over n = 1 .. min D - 1
  std::vector<double> std_b_sq;
  std::map<Eigen::Index, std::size_t> dimension_histogram;
  std::size_t failed = 0;
  std::optional<AveragedProfile> averaged_profile;
};

// Lanczos (and optional diagnostics) for one realization of the ensemble.
RealizationRecord run_realization(const GoeSpec& spec, std::size_t index, const EnsembleOptions& options);

EnsembleResult run_ensemble(const GoeSpec& spec, const EnsembleOptions& options = {});

// Sum with pairwise (cascade) splitting.
double pairwise_sum(const double* values, std::size_t n);

}  // namespace krylov
