#include "krylov/ensembles.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

namespace krylov {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t child_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed + 0x9E3779B97F4A7C15ULL * (index + 1));
}

double NormalSampler::uniform() { return double(engine_() >> 11) * 0x1.0p-53; }

double NormalSampler::operator()() {
  if (spare_) {
    const double v = *spare_;
    spare_.reset();
    return v;
  }
  double u, v, s;
  do {
    u = 2 * uniform() - 1;
    v = 2 * uniform() - 1;
    s = u * u + v * v;
  } while (s >= 1 || s == 0);
  const double f = std::sqrt(-2 * std::log(s) / s);
  spare_ = v * f;
  return u * f;
}

void GoeSpec::validate() const {
  detail::require(d >= 2, "goe: d must be at least 2");
  detail::require(sigma > 0, "goe: sigma must be positive");
  detail::require(count >= 1, "goe: count must be at least 1");
  detail::require(halt_tol > 0, "goe: halt tolerance must be positive");
}

Matrix<double> goe_sample_real(Eigen::Index d, double sigma, std::uint64_t seed) {
  detail::require(d >= 2, "goe: d must be at least 2");
  detail::require(sigma > 0, "goe: sigma must be positive");
  NormalSampler normal(seed);
  Matrix<double> x(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = sigma * normal();
  return (x + x.transpose()) / 2;
}

HermitianMatrix<double> goe_sample(Eigen::Index d, double sigma, std::uint64_t seed) {
  return HermitianMatrix<double>::from_real(goe_sample_real(d, sigma, seed));
}

ComplexVector<double> uniform_observable_coordinates(Eigen::Index d) {
  detail::require(d >= 1, "uniform observable: d must be positive");
  return ComplexVector<double>::Constant(d * d, Complex<double>(1.0 / double(d), 0));
}

OperatorVector<double> uniform_observable(const HermitianMatrix<double>& h) {
  const HamiltonianSpectrum<double> s(h);
  return OperatorVector<double>::from_matrix(s.from_eigen_coordinates(uniform_observable_coordinates(h.dim())),
                                             InnerProductSpec<double>(1.0));
}

double pairwise_sum(const double* values, std::size_t n) {
  if (n <= 8) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += values[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(values, half) + pairwise_sum(values + half, n - half);
}

namespace {

DeviationDiagnostics deviation_diagnostics(const std::vector<double>& b, double tau_d, Eigen::Index steps) {
  const std::vector<double> times = time_grid(5 * tau_d, steps);
  EvolutionOptions<double> evo;
  evo.auto_truncate = true;
  const auto profile = complexity_profile(evolve_amplitudes<double>(b, times, evo));

  DeviationDiagnostics out;
  out.tau_d = tau_d;
  out.samples = steps;
  for (std::size_t k = 0; k < profile.size(); ++k) {
    if (!profile.ratio[k]) continue;
    const double r = *profile.ratio[k];
    const double t = profile.times[k];
    out.max_ratio = std::max(out.max_ratio, r);
    if (t <= tau_d / 2) out.min_ratio_early = std::min(out.min_ratio_early, r);
    if (t >= tau_d) out.min_ratio_late = std::min(out.min_ratio_late, r);
  }
  return out;
}

}  // namespace

RealizationRecord run_realization(const GoeSpec& spec, std::size_t index, const EnsembleOptions& options) {
  RealizationRecord rec;
  rec.index = index;
  rec.seed = child_seed(spec.seed, index);
  try {
    const HamiltonianSpectrum<double> spectrum(goe_sample(spec.d, spec.sigma, rec.seed));
    LanczosOptions<double> lo;
    lo.policy = spec.policy;
    lo.halt_tol = spec.halt_tol;
    auto lr = run_lanczos(spectrum, uniform_observable_coordinates(spec.d),
                          InnerProductSpec<double>::hilbert_schmidt(spec.d), lo);
    rec.b = std::move(lr.b);
    rec.dimension = lr.dimension;
    rec.truncated = lr.truncated;
    if (rec.b.size() >= 3) {
      try {
        rec.tau_d = deviation_time<double>(rec.b);
      } catch (const NumericalError&) {
      }
    }
    if (options.deviation_diagnostics && rec.tau_d) {
      rec.diagnostics = deviation_diagnostics(rec.b, *rec.tau_d, options.diagnostic_steps);
    }
    rec.ok = true;
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.failure = e.what();
  }
  return rec;
}

EnsembleResult run_ensemble(const GoeSpec& spec, const EnsembleOptions& options) {
  spec.validate();
  EnsembleResult result;
  result.spec = spec;
  const auto count = static_cast<std::size_t>(spec.count);
  result.realizations.resize(count);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) result.realizations[i] = run_realization(spec, i, options);
  };
  const unsigned n_workers = std::max(1u, std::min<unsigned>(options.workers, static_cast<unsigned>(count)));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<const RealizationRecord*> good;
  for (const auto& r : result.realizations) {
    if (r.ok) {
      good.push_back(&r);
      ++result.dimension_histogram[r.dimension];
    } else {
      ++result.failed;
    }
  }
  if (good.empty()) return result;

  std::size_t len = good.front()->b.size();
  for (const auto* r : good) len = std::min(len, r->b.size());
  result.mean_b_sq.resize(len);
  result.std_b_sq.resize(len);
  std::vector<double> column(good.size());
  for (std::size_t n = 0; n < len; ++n) {
    for (std::size_t i = 0; i < good.size(); ++i) column[i] = good[i]->b[n] * good[i]->b[n];
    const double mean = pairwise_sum(column.data(), column.size()) / double(column.size());
    for (auto& v : column) v = (v - mean) * (v - mean);
    result.mean_b_sq[n] = mean;
    result.std_b_sq[n] = std::sqrt(pairwise_sum(column.data(), column.size()) / double(column.size()));
  }

  if (options.profile_times) {
    const auto& times = *options.profile_times;
    AveragedProfile avg;
    avg.times = times;
    const std::size_t nt = times.size();
    std::vector<std::vector<double>> k(nt), r(nt), bd(nt);
    for (const auto* rec : good) {
      EvolutionOptions<double> evo;
      evo.auto_truncate = true;
      const auto p = complexity_profile(evolve_amplitudes<double>(rec->b, times, evo));
      for (std::size_t j = 0; j < nt; ++j) {
        k[j].push_back(p.complexity[j]);
        r[j].push_back(std::abs(p.rate[j]));
        bd[j].push_back(p.bound[j]);
      }
    }
    const double n = double(good.size());
    for (std::size_t j = 0; j < nt; ++j) {
      avg.complexity.push_back(pairwise_sum(k[j].data(), k[j].size()) / n);
      avg.abs_rate.push_back(pairwise_sum(r[j].data(), r[j].size()) / n);
      avg.bound.push_back(pairwise_sum(bd[j].data(), bd[j].size()) / n);
    }
    result.averaged_profile = std::move(avg);
  }
  return result;
}

}  // namespace krylov
