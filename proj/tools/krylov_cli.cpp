// krylov: command-line front end.
//
//   krylov model  <spec>                 closed forms and saturated K(t)
//   krylov lanczos --hamiltonian H.json  Lanczos coefficients
//   krylov evolve  --coefficients b.json amplitudes phi_n(t)
//   krylov bound   --coefficients b.json complexity profile and tau_d
//   krylov closure --coefficients b.json closure report
//   krylov goe     d=32 sigma=1 count=100 seed=7
//
// Exit status: 0 success, 1 invalid input, 2 numerical failure.

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "krylov/algebras.hpp"
#include "krylov/dynamics.hpp"
#include "krylov/ensembles.hpp"
#include "krylov/io.hpp"
#include "krylov/lanczos.hpp"
#include "krylov/operator_space.hpp"

using namespace krylov;
using io::json;

namespace {

struct Config {
  double t_max = 5;
  long steps = 501;
  double tol_halt = 1e-10;
  double tol_closure = 1e-9;
  double tol_bound = 1e-8;
  std::string reorth = "auto";
  double threshold = 0;
  std::optional<std::uint64_t> seed;
  unsigned workers = 1;
  std::string out = "-";
  std::string format;  // empty: the command's default

  std::string model;
  std::string coefficients;
  std::optional<std::size_t> realization;
  std::string hamiltonian;
  std::string observable;
  double beta = 0;
  std::optional<long> max_steps;
  bool basis = false;
  std::string method = "tridiag-eigen";
  std::optional<long> truncation;
  std::optional<long> count;
  std::string what = "profile";
  std::vector<std::string> goe_fields;
  std::string coefficients_out;
  bool diagnostics = false;
  bool profile = false;
};

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void check_grid(const Config& c) {
  detail::require(c.t_max > 0, "--tmax must be positive");
  detail::require(c.steps >= 2, "--steps must be at least 2");
}

std::optional<ReorthPolicy<double>> policy_from(const Config& c) {
  if (c.reorth == "auto") return std::nullopt;
  ReorthPolicy<double> p;
  p.mode = parse_reorthogonalization(c.reorth);
  if (c.threshold > 0) p.threshold = c.threshold;
  detail::require(p.threshold > 0 && p.threshold < 1, "--threshold must lie in (0, 1)");
  return p;
}

EvolutionOptions<double> evolution_from(const Config& c) {
  EvolutionOptions<double> o;
  o.method = parse_evolution_method(c.method);
  if (c.truncation) o.truncation = static_cast<Eigen::Index>(*c.truncation);
  o.auto_truncate = true;
  return o;
}

// Amplitudes for either a model spec or a coefficient file.
AmplitudeTrajectory<double> trajectory_for(const Config& c, const std::vector<double>& times) {
  const auto opts = evolution_from(c);
  if (!c.model.empty()) {
    const auto model = parse_model_spec(c.model);
    if (model.dimension()) {
      const auto b = model.coefficients(*model.dimension() - 1);
      return evolve_amplitudes<double>(b, times, opts);
    }
    return evolve_amplitudes<double>(std::function<double(Eigen::Index)>([&](Eigen::Index n) { return model.coefficient(n); }),
                                     times, opts);
  }
  detail::require(!c.coefficients.empty(), "one of --coefficients or --model is required");
  const auto set = io::coefficients_from_json(io::read_json_file(c.coefficients), c.realization);
  auto traj = evolve_amplitudes<double>(set.b, times, opts);
  if (!set.dimension && traj.tail_mass > 1e-12) {
    std::cerr << "warning: chain of unknown length carries tail mass " << io::format_number(traj.tail_mass)
              << " at its end; shorten --tmax\n";
  }
  return traj;
}

std::vector<double> coefficients_for(const Config& c, std::optional<Eigen::Index>& dimension) {
  if (!c.model.empty()) {
    const auto model = parse_model_spec(c.model);
    dimension = model.dimension();
    const Eigen::Index n = dimension ? *dimension - 1 : static_cast<Eigen::Index>(c.count.value_or(50));
    return model.coefficients(n);
  }
  detail::require(!c.coefficients.empty(), "one of --coefficients or --model is required");
  auto set = io::coefficients_from_json(io::read_json_file(c.coefficients), c.realization);
  dimension = set.dimension;
  return set.b;
}

int cmd_model(const Config& c) {
  const auto model = parse_model_spec(c.model);
  const auto dim = model.dimension();
  const Eigen::Index n_b = dim ? *dim - 1 : static_cast<Eigen::Index>(c.count.value_or(50));
  detail::require(n_b >= 1, "--count must be at least 1");
  const auto b = model.coefficients(n_b);

  if (c.what == "coefficients") {
    if (c.format == "json") {
      io::write_text(c.out, dump(io::coefficients_to_json({b, dim})));
    } else {
      std::string out = "n,b_n,b_n_sq\n";
      for (std::size_t n = 0; n < b.size(); ++n)
        out += std::to_string(n + 1) + "," + io::format_number(b[n]) + "," + io::format_number(b[n] * b[n]) + "\n";
      io::write_text(c.out, out);
    }
    return 0;
  }

  check_grid(c);
  const auto times = time_grid(c.t_max, static_cast<Eigen::Index>(c.steps));
  if (c.what == "amplitudes") {
    const auto traj = model_amplitudes<double>(model, times,
                                               c.truncation ? std::optional<Eigen::Index>(*c.truncation) : std::nullopt);
    io::write_text(c.out, c.format == "json" ? dump(io::amplitudes_to_json(traj)) : io::amplitudes_csv(traj));
    return 0;
  }
  detail::require(c.what == "profile", "--what must be profile, coefficients or amplitudes");

  std::vector<double> k(times.size()), dk(times.size()), ks(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    std::tie(k[i], dk[i]) = model_observables(model, times[i]);
    ks[i] = saturated_complexity(model.alpha(), model.gamma(), dim, times[i]);
  }
  if (c.format == "json") {
    json j{{"model", describe(model)},
           {"algebra", to_string(model.kind())},
           {"alpha", model.alpha()},
           {"gamma", model.gamma()},
           {"D", dim ? json(*dim) : json(nullptr)},
           {"b", b},
           {"t", times},
           {"K", k},
           {"dispersion", dk},
           {"K_saturated", ks}};
    io::write_text(c.out, dump(j));
  } else {
    std::string out = "t,K,dispersion,K_saturated\n";
    for (std::size_t i = 0; i < times.size(); ++i)
      out += io::format_number(times[i]) + "," + io::format_number(k[i]) + "," + io::format_number(dk[i]) + "," +
             io::format_number(ks[i]) + "\n";
    io::write_text(c.out, out);
  }
  return 0;
}

int cmd_lanczos(const Config& c) {
  detail::require(!c.hamiltonian.empty(), "--hamiltonian is required");
  detail::require(c.beta >= 0, "--beta must be non-negative");
  const HermitianMatrix<double> h(io::matrix_from_json(io::read_json_file(c.hamiltonian), "hamiltonian"));
  const auto spec = c.beta > 0 ? InnerProductSpec<double>::thermal(h, c.beta)
                               : InnerProductSpec<double>::hilbert_schmidt(h.dim());
  ComplexMatrix<double> o;
  if (c.observable.empty()) {
    o = uniform_observable(h).matrix();
  } else {
    o = io::matrix_from_json(io::read_json_file(c.observable), "observable");
    detail::require(o.rows() == h.dim(), "observable: field 'dim' must match the Hamiltonian");
  }
  LanczosOptions<double> opts;
  opts.policy = policy_from(c);
  opts.halt_tol = c.tol_halt;
  opts.store_basis = c.basis;
  if (c.max_steps) opts.max_steps = static_cast<Eigen::Index>(*c.max_steps);
  const auto result = run_lanczos(h, OperatorVector<double>::from_matrix(o, spec), spec, opts);
  std::optional<double> ortho;
  if (c.basis) ortho = orthogonality_report(result);
  if (result.truncated) std::cerr << "warning: max steps reached before the Krylov space closed\n";
  io::write_text(c.out, c.format == "json" ? dump(io::lanczos_to_json(result, ortho)) : io::lanczos_csv(result));
  return 0;
}

int cmd_evolve(const Config& c) {
  check_grid(c);
  const auto times = time_grid(c.t_max, static_cast<Eigen::Index>(c.steps));
  const auto traj = trajectory_for(c, times);
  io::write_text(c.out, c.format == "json" ? dump(io::amplitudes_to_json(traj)) : io::amplitudes_csv(traj));
  return 0;
}

int cmd_bound(const Config& c) {
  check_grid(c);
  const auto times = time_grid(c.t_max, static_cast<Eigen::Index>(c.steps));
  const auto traj = trajectory_for(c, times);
  const auto profile = complexity_profile(traj);

  std::optional<double> tau_d, tau_printed;
  if (traj.b.size() >= 3) {
    try {
      tau_d = deviation_time<double>(traj.b[0], traj.b[1], traj.b[2]);
    } catch (const NumericalError&) {
    }
    try {
      tau_printed = deviation_time_printed<double>(traj.b[0], traj.b[1], traj.b[2]);
    } catch (const NumericalError&) {
    }
  }
  double max_ratio = 0;
  for (const auto& r : profile.ratio)
    if (r) max_ratio = std::max(max_ratio, *r);
  std::cerr << "b1=" << io::format_number(profile.b1) << " tau_d=" << io::format_optional(tau_d)
            << " max_ratio=" << io::format_number(max_ratio) << "\n";

  if (c.format == "json") {
    auto j = io::profile_to_json(profile, tau_d);
    j["tau_d_printed"] = tau_printed ? json(*tau_printed) : json(nullptr);
    io::write_text(c.out, dump(j));
  } else {
    io::write_text(c.out, io::profile_csv(profile));
  }
  if (max_ratio > 1 + c.tol_bound)
    throw NumericalError("dispersion bound violated: max ratio " + io::format_number(max_ratio));
  return 0;
}

int cmd_closure(const Config& c) {
  std::optional<Eigen::Index> dim;
  const auto b = coefficients_for(c, dim);
  const auto report = closure_test<double>(b, dim, c.tol_closure);
  if (c.format == "json") {
    io::write_text(c.out, dump(io::closure_to_json(report)));
  } else {
    std::string out = "n,f\n";
    for (std::size_t n = 0; n < report.f_values.size(); ++n)
      out += std::to_string(n) + "," + io::format_number(report.f_values[n]) + "\n";
    io::write_text(c.out, out);
  }
  std::cerr << (report.closed ? "closed" : "not closed") << " alpha=" << io::format_number(report.alpha)
            << " gamma=" << io::format_number(report.gamma) << " max_residual=" << io::format_number(report.max_residual)
            << "\n";
  return 0;
}

template <class T>
T parse_field(const std::string& key, const std::string& text) {
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ValidationError("goe: field '" + key + "' has invalid value '" + text + "'");
  return v;
}

int cmd_goe(const Config& c, bool tmax_given) {
  GoeSpec spec;
  spec.d = 32;
  spec.count = 100;
  for (const auto& item : c.goe_fields) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ValidationError("goe: expected key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq), value = item.substr(eq + 1);
    if (key == "d") spec.d = parse_field<long>(key, value);
    else if (key == "sigma") spec.sigma = parse_field<double>(key, value);
    else if (key == "count") spec.count = parse_field<long>(key, value);
    else if (key == "seed") spec.seed = parse_field<std::uint64_t>(key, value);
    else throw ValidationError("goe: unknown field '" + key + "'");
  }
  if (c.seed) spec.seed = *c.seed;
  spec.policy = policy_from(c);
  spec.halt_tol = c.tol_halt;
  spec.validate();

  EnsembleOptions opts;
  opts.workers = c.workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : c.workers;
  opts.deviation_diagnostics = c.diagnostics;
  if (c.profile || tmax_given) {
    check_grid(c);
    opts.profile_times = time_grid(c.t_max, static_cast<Eigen::Index>(c.steps));
  }
  const auto result = run_ensemble(spec, opts);

  std::cerr << "realizations=" << spec.count << " failed=" << result.failed << " D:";
  for (const auto& [dim, n] : result.dimension_histogram) std::cerr << " " << dim << "x" << n;
  std::cerr << "\n";
  for (const auto& rec : result.realizations)
    if (!rec.ok) std::cerr << "realization " << rec.index << " failed: " << rec.failure << "\n";

  if (c.format == "json") {
    io::write_text(c.out, dump(io::ensemble_to_json(result)));
  } else {
    io::write_text(c.out, io::ensemble_summary_csv(result));
  }
  if (!c.coefficients_out.empty()) io::write_text(c.coefficients_out, io::ensemble_coefficients_csv(result));
  if (result.failed == static_cast<std::size_t>(spec.count)) throw NumericalError("goe: every realization failed");
  return 0;
}

void add_output(CLI::App* app, Config& c, const std::string& default_format) {
  app->add_option("--out,-o", c.out, "Output path ('-' for stdout)");
  app->add_option("--format", c.format, "Output format (default " + default_format + ")")
      ->check(CLI::IsMember({"csv", "json"}));
}

void add_grid(CLI::App* app, Config& c) {
  app->add_option("--tmax", c.t_max, "Final time of the grid");
  app->add_option("--steps", c.steps, "Number of grid points including t = 0");
}

void add_chain_input(CLI::App* app, Config& c) {
  app->add_option("--coefficients,-b", c.coefficients, "Coefficient JSON (lanczos, model or goe output)");
  app->add_option("--model,-m", c.model, "Model spec, e.g. syk:eta=1,nu=1");
  app->add_option("--realization", c.realization, "Realization index when reading goe output");
  app->add_option("--method", c.method, "Evolution method")->check(CLI::IsMember({"tridiag-eigen", "rk4", "series"}));
  app->add_option("--truncation", c.truncation, "Number of chain sites kept (default: grow until tail mass < 1e-12)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Krylov complexity: Lanczos coefficients, operator growth and the dispersion bound"};
  app.require_subcommand(1);
  Config c;

  auto* model = app.add_subcommand("model", "Closed-form models and saturated solutions");
  model->add_option("spec", c.model, "su2:j=..,nu=.. | hw:nu=.. | syk:eta=..,nu=.. | sat:alpha=..,gamma=..[,D=..]")
      ->required();
  model->add_option("--what", c.what, "profile, coefficients or amplitudes")
      ->check(CLI::IsMember({"profile", "coefficients", "amplitudes"}));
  model->add_option("--count", c.count, "Coefficients written for infinite models (default 50)");
  model->add_option("--truncation", c.truncation, "Sites written for infinite-model amplitudes");
  add_grid(model, c);
  add_output(model, c, "csv");

  auto* lanczos = app.add_subcommand("lanczos", "Lanczos coefficients of an observable");
  lanczos->add_option("--hamiltonian,-H", c.hamiltonian, "Hamiltonian matrix JSON")->required();
  lanczos->add_option("--observable,-O", c.observable, "Observable matrix JSON (default: uniform in the eigenbasis)");
  lanczos->add_option("--beta", c.beta, "Inverse temperature of the inner product");
  lanczos->add_option("--tol-halt", c.tol_halt, "Halt when ||A_n|| <= tol * b_1");
  lanczos->add_option("--reorth", c.reorth, "Reorthogonalization")->check(CLI::IsMember({"auto", "none", "full", "partial"}));
  lanczos->add_option("--threshold", c.threshold, "Partial reorthogonalization threshold");
  lanczos->add_option("--max-steps", c.max_steps, "Cap on the Krylov dimension");
  lanczos->add_flag("--basis", c.basis, "Store the basis and report ortho_error");
  add_output(lanczos, c, "json");

  auto* evolve = app.add_subcommand("evolve", "Amplitudes phi_n(t) on the Krylov chain");
  add_chain_input(evolve, c);
  add_grid(evolve, c);
  add_output(evolve, c, "csv");

  auto* bound = app.add_subcommand("bound", "Complexity, rate and dispersion bound");
  add_chain_input(bound, c);
  add_grid(bound, c);
  bound->add_option("--tol-bound", c.tol_bound, "Allowed excess of the ratio over 1");
  add_output(bound, c, "csv");

  auto* closure = app.add_subcommand("closure", "Complexity algebra closure test");
  closure->add_option("--coefficients,-b", c.coefficients, "Coefficient JSON");
  closure->add_option("--model,-m", c.model, "Model spec");
  closure->add_option("--realization", c.realization, "Realization index when reading goe output");
  closure->add_option("--count", c.count, "Coefficients used for infinite models (default 50)");
  closure->add_option("--tol-closure", c.tol_closure, "Allowed spread of f(n)");
  add_output(closure, c, "json");

  auto* goe = app.add_subcommand("goe", "GOE ensemble with the uniform observable");
  goe->add_option("fields", c.goe_fields, "d=.. sigma=.. count=.. seed=..");
  goe->add_option("--seed", c.seed, "Ensemble seed (overrides seed=..)");
  goe->add_option("--workers", c.workers, "Worker threads (0: hardware concurrency)");
  goe->add_option("--tol-halt", c.tol_halt, "Halt when ||A_n|| <= tol * b_1");
  goe->add_option("--reorth", c.reorth, "Reorthogonalization")->check(CLI::IsMember({"auto", "none", "full", "partial"}));
  goe->add_option("--threshold", c.threshold, "Partial reorthogonalization threshold");
  goe->add_flag("--diagnostics", c.diagnostics, "Per realization bound diagnostics on [0, 5 tau_d]");
  goe->add_flag("--profile", c.profile, "Averaged complexity profile on the --tmax/--steps grid");
  goe->add_option("--coefficients-out", c.coefficients_out, "Long CSV realization,n,b_n");
  auto* goe_tmax = goe->add_option("--tmax", c.t_max, "Final time of the averaged profile");
  goe->add_option("--steps", c.steps, "Grid points of the averaged profile");
  add_output(goe, c, "json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (c.format.empty()) c.format = (*lanczos || *closure || *goe) ? "json" : "csv";
  try {
    if (*model) return cmd_model(c);
    if (*lanczos) return cmd_lanczos(c);
    if (*evolve) return cmd_evolve(c);
    if (*bound) return cmd_bound(c);
    if (*closure) return cmd_closure(c);
    if (*goe) return cmd_goe(c, goe_tmax->count() > 0);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
