#pragma once

// JSON and CSV artifacts. Numbers in CSV use 17 significant digits via
// std::to_chars, so output does not depend on the C locale; JSON numbers use
// the shortest representation that round-trips.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "krylov/algebras.hpp"
#include "krylov/dynamics.hpp"
#include "krylov/ensembles.hpp"
#include "krylov/lanczos.hpp"
#include "krylov/operator_space.hpp"

namespace krylov::io {

using nlohmann::json;

std::string format_number(double v);
std::string format_optional(const std::optional<double>& v);  // "nan" when unset

json read_json_file(const std::string& path);
// Writes to `path`, or to stdout when path is empty or "-".
void write_text(const std::string& path, const std::string& text);

// {"dim": d, "re": [[...]], "im": [[...]]}; "im" may be omitted on input.
json matrix_to_json(const ComplexMatrix<double>& m);
ComplexMatrix<double> matrix_from_json(const json& j, const std::string& what = "matrix");

json lanczos_to_json(const LanczosResult<double>& r, const std::optional<double>& ortho_error = std::nullopt);
std::string lanczos_csv(const LanczosResult<double>& r);

// Coefficients with an optional finite Krylov dimension (unset: unknown or
// infinite). Accepts {"b": [...], "D": int|null}, Lanczos and model output,
// and ensemble output when `realization` is given.
struct CoefficientSet {
  std::vector<double> b;
  std::optional<Eigen::Index> dimension;
};
CoefficientSet coefficients_from_json(const json& j, std::optional<std::size_t> realization = std::nullopt);
json coefficients_to_json(const CoefficientSet& c);

std::string profile_csv(const ComplexityProfile<double>& p);
json profile_to_json(const ComplexityProfile<double>& p, const std::optional<double>& tau_d);

// Long format t,n,phi.
std::string amplitudes_csv(const AmplitudeTrajectory<double>& traj);
json amplitudes_to_json(const AmplitudeTrajectory<double>& traj);

json closure_to_json(const ClosureReport<double>& r);

json ensemble_to_json(const EnsembleResult& r);
std::string ensemble_summary_csv(const EnsembleResult& r);
// Long format realization,n,b_n.
std::string ensemble_coefficients_csv(const EnsembleResult& r);

}  // namespace krylov::io
