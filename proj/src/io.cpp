#include "krylov/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

namespace krylov::io {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

std::string format_optional(const std::optional<double>& v) { return v ? format_number(*v) : std::string("nan"); }

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << text;
}

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::vector<double> number_array(const json& j, const std::string& what) {
  if (!j.is_array()) throw ValidationError("field '" + what + "' must be an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& x : j) {
    if (!x.is_number()) throw ValidationError("field '" + what + "' must contain only numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

Matrix<double> real_block(const json& j, Eigen::Index d, const std::string& what) {
  if (!j.is_array() || Eigen::Index(j.size()) != d)
    throw ValidationError("field '" + what + "' must have " + std::to_string(d) + " rows");
  Matrix<double> m(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const auto row = number_array(j[std::size_t(i)], what);
    if (Eigen::Index(row.size()) != d)
      throw ValidationError("field '" + what + "' row " + std::to_string(i) + " must have " + std::to_string(d) +
                            " entries");
    for (Eigen::Index k = 0; k < d; ++k) m(i, k) = row[std::size_t(k)];
  }
  return m;
}

json rows_of(const Matrix<double>& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::optional<Eigen::Index> dimension_field(const json& j) {
  if (!j.contains("D") || j["D"].is_null()) return std::nullopt;
  if (!j["D"].is_number_integer() || j["D"].get<long long>() < 1)
    throw ValidationError("field 'D' must be a positive integer or null");
  return static_cast<Eigen::Index>(j["D"].get<long long>());
}

}  // namespace

json matrix_to_json(const ComplexMatrix<double>& m) {
  return json{{"dim", m.rows()}, {"re", rows_of(m.real())}, {"im", rows_of(m.imag())}, {"vectorization", "column-major"}};
}

ComplexMatrix<double> matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_object()) throw ValidationError(what + ": expected a JSON object");
  if (!j.contains("dim") || !j["dim"].is_number_integer() || j["dim"].get<long long>() < 1)
    throw ValidationError(what + ": field 'dim' must be a positive integer");
  const auto d = static_cast<Eigen::Index>(j["dim"].get<long long>());
  if (!j.contains("re")) throw ValidationError(what + ": missing field 're'");
  ComplexMatrix<double> m = real_block(j["re"], d, "re").cast<Complex<double>>();
  if (j.contains("im") && !j["im"].is_null()) m += Complex<double>(0, 1) * real_block(j["im"], d, "im").cast<Complex<double>>();
  return m;
}

json lanczos_to_json(const LanczosResult<double>& r, const std::optional<double>& ortho_error) {
  const auto err = ortho_error ? ortho_error : r.ortho_error;
  return json{{"D", r.dimension},
              {"b", r.b},
              {"ortho_error", optional_number(err)},
              {"truncated", r.truncated},
              {"policy", to_string(r.policy)},
              {"max_diagonal", r.max_diagonal}};
}

std::string lanczos_csv(const LanczosResult<double>& r) {
  std::string out = "n,b_n\n";
  for (std::size_t n = 0; n < r.b.size(); ++n) out += std::to_string(n + 1) + "," + format_number(r.b[n]) + "\n";
  return out;
}

CoefficientSet coefficients_from_json(const json& j, std::optional<std::size_t> realization) {
  if (!j.is_object()) throw ValidationError("coefficients: expected a JSON object");
  if (j.contains("realizations")) {
    const auto& list = j["realizations"];
    const std::size_t k = realization.value_or(0);
    if (!list.is_array() || k >= list.size())
      throw ValidationError("field 'realizations' has no entry " + std::to_string(k));
    if (list[k].contains("ok") && !list[k]["ok"].get<bool>())
      throw ValidationError("realization " + std::to_string(k) + " failed and has no coefficients");
    return coefficients_from_json(list[k]);
  }
  if (!j.contains("b")) throw ValidationError("coefficients: missing field 'b'");
  CoefficientSet c;
  c.b = number_array(j["b"], "b");
  for (double v : c.b)
    if (!(v > 0) || !std::isfinite(v)) throw ValidationError("field 'b' must contain positive finite values");
  c.dimension = dimension_field(j);
  if (j.contains("truncated") && j["truncated"].is_boolean() && j["truncated"].get<bool>()) c.dimension.reset();
  if (c.dimension && *c.dimension != Eigen::Index(c.b.size()) + 1)
    throw ValidationError("field 'D' must equal len(b) + 1 for a finite chain");
  return c;
}

json coefficients_to_json(const CoefficientSet& c) {
  return json{{"b", c.b}, {"D", c.dimension ? json(*c.dimension) : json(nullptr)}};
}

std::string profile_csv(const ComplexityProfile<double>& p) {
  std::string out = "t,K,rate,dispersion,bound,ratio\n";
  for (std::size_t k = 0; k < p.size(); ++k) {
    out += format_number(p.times[k]) + "," + format_number(p.complexity[k]) + "," + format_number(p.rate[k]) + "," +
           format_number(p.dispersion[k]) + "," + format_number(p.bound[k]) + "," + format_optional(p.ratio[k]) + "\n";
  }
  return out;
}

json profile_to_json(const ComplexityProfile<double>& p, const std::optional<double>& tau_d) {
  json ratio = json::array(), tau = json::array();
  for (std::size_t k = 0; k < p.size(); ++k) {
    ratio.push_back(optional_number(p.ratio[k]));
    tau.push_back(optional_number(p.tau[k]));
  }
  return json{{"t", p.times},    {"K", p.complexity}, {"rate", p.rate},         {"dispersion", p.dispersion},
              {"bound", p.bound}, {"ratio", ratio},    {"tau_K", tau},           {"b1", p.b1},
              {"tau_d", optional_number(tau_d)}};
}

std::string amplitudes_csv(const AmplitudeTrajectory<double>& traj) {
  std::string out = "t,n,phi\n";
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const std::string t = format_number(traj.times[k]) + ",";
    for (Eigen::Index n = 0; n < traj.sites(); ++n)
      out += t + std::to_string(n) + "," + format_number(traj.phi(Eigen::Index(k), n)) + "\n";
  }
  return out;
}

json amplitudes_to_json(const AmplitudeTrajectory<double>& traj) {
  json phi = json::array();
  for (Eigen::Index k = 0; k < traj.phi.rows(); ++k) {
    json row = json::array();
    for (Eigen::Index n = 0; n < traj.sites(); ++n) row.push_back(traj.phi(k, n));
    phi.push_back(std::move(row));
  }
  return json{{"t", traj.times},
              {"phi", phi},
              {"b", traj.b},
              {"truncated", traj.truncated},
              {"tail_mass", traj.tail_mass}};
}

json closure_to_json(const ClosureReport<double>& r) {
  return json{{"closed", r.closed},
              {"trivial", r.trivial},
              {"alpha", r.alpha},
              {"gamma", r.gamma},
              {"max_residual", r.max_residual},
              {"f", r.f_values},
              {"D", r.dimension ? json(*r.dimension) : json(nullptr)},
              {"algebra", r.closed ? json(to_string(classify_algebra(r.alpha, 1e-9 * std::max(1.0, std::abs(r.gamma)))))
                                   : json(nullptr)}};
}

json ensemble_to_json(const EnsembleResult& r) {
  json spec{{"d", r.spec.d},
            {"sigma", r.spec.sigma},
            {"count", r.spec.count},
            {"seed", r.spec.seed},
            {"halt_tol", r.spec.halt_tol},
            {"policy", r.spec.policy ? json(to_string(r.spec.policy->mode)) : json("auto")},
            {"threshold", r.spec.policy ? json(r.spec.policy->threshold) : json(nullptr)},
            {"generator", kGoeGenerator}};
  json reals = json::array();
  for (const auto& rec : r.realizations) {
    json item{{"index", rec.index}, {"seed", rec.seed}, {"ok", rec.ok}};
    if (rec.ok) {
      item["D"] = rec.dimension;
      item["b"] = rec.b;
      item["truncated"] = rec.truncated;
      item["tau_d"] = optional_number(rec.tau_d);
      if (rec.diagnostics) {
        item["diagnostics"] = json{{"max_ratio", rec.diagnostics->max_ratio},
                                   {"min_ratio_early", rec.diagnostics->min_ratio_early},
                                   {"min_ratio_late", rec.diagnostics->min_ratio_late},
                                   {"samples", rec.diagnostics->samples}};
      }
    } else {
      item["failure"] = rec.failure;
    }
    reals.push_back(std::move(item));
  }
  json hist = json::object();
  for (const auto& [dim, n] : r.dimension_histogram) hist[std::to_string(dim)] = n;
  json out{{"spec", spec},
           {"realizations", reals},
           {"mean_b_sq", r.mean_b_sq},
           {"std_b_sq", r.std_b_sq},
           {"D_histogram", hist},
           {"failed", r.failed}};
  if (r.averaged_profile) {
    const auto& p = *r.averaged_profile;
    out["averaged_profile"] = json{{"t", p.times}, {"K", p.complexity}, {"abs_rate", p.abs_rate}, {"bound", p.bound}};
  }
  return out;
}

std::string ensemble_summary_csv(const EnsembleResult& r) {
  std::string out = "n,mean_b_sq,std_b_sq\n";
  for (std::size_t n = 0; n < r.mean_b_sq.size(); ++n)
    out += std::to_string(n + 1) + "," + format_number(r.mean_b_sq[n]) + "," + format_number(r.std_b_sq[n]) + "\n";
  return out;
}

std::string ensemble_coefficients_csv(const EnsembleResult& r) {
  std::string out = "realization,n,b_n\n";
  for (const auto& rec : r.realizations) {
    for (std::size_t n = 0; n < rec.b.size(); ++n)
      out += std::to_string(rec.index) + "," + std::to_string(n + 1) + "," + format_number(rec.b[n]) + "\n";
  }
  return out;
}

}  // namespace krylov::io
