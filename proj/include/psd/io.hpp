#pragma once

// JSON and CSV encodings. Complex numbers are [re, im] pairs; matrices are
// row-major arrays of rows.

#include <nlohmann/json.hpp>

#include <cmath>
#include <ostream>
#include <string>

#include "psd/diffusion.hpp"
#include "psd/error.hpp"
#include "psd/master.hpp"
#include "psd/quantum.hpp"

namespace psd {

using json = nlohmann::json;

namespace io {

inline json complex_to_json(complex z) { return json::array({z.real(), z.imag()}); }

/// Accepts [re, im] or a bare real number.
inline complex complex_from_json(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    return {j[0].get<double>(), j[1].get<double>()};
  }
  throw InvalidParameter("expected a complex number as [re, im], got " + j.dump());
}

inline json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(complex_to_json(v(k)));
  return out;
}

inline Vector vector_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw InvalidParameter("expected a non-empty amplitude array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v(static_cast<Eigen::Index>(k)) = complex_from_json(j[k]);
  return v;
}

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_to_json(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw InvalidParameter("expected a non-empty matrix");
  const auto n = static_cast<Eigen::Index>(j.size());
  Matrix m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
      throw ShapeError("matrix rows must all have length " + std::to_string(n));
    }
    for (Eigen::Index c = 0; c < n; ++c) m(r, c) = complex_from_json(row[static_cast<std::size_t>(c)]);
  }
  return m;
}

inline json state_to_json(const StateVector& psi) { return vector_to_json(psi.amplitudes()); }
inline StateVector state_from_json(const json& j) { return StateVector(vector_from_json(j)); }

inline json operator_to_json(const OperatorMatrix& a) {
  return {{"hermitian", a.is_hermitian()}, {"entries", matrix_to_json(a.entries())}};
}

/// Accepts either {"hermitian": bool, "entries": [...]} or a bare matrix,
/// in which case `hermitian_default` applies.
inline OperatorMatrix operator_from_json(const json& j, bool hermitian_default = true) {
  if (j.is_object()) {
    const bool herm = j.value("hermitian", hermitian_default);
    return OperatorMatrix(matrix_from_json(j.at("entries")), herm);
  }
  return OperatorMatrix(matrix_from_json(j), hermitian_default);
}

/// Non-finite values become null.
inline json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace io

inline json trajectory_to_json(const TrajectoryRecord& record) {
  return {{"t", record.times},
          {"e_mean", record.energy_mean},
          {"e_var", record.energy_variance},
          {"norm_drift", record.norm_drift},
          {"final_state", io::state_to_json(record.final_state)}};
}

/// Columns t, e_mean, e_var, norm_drift; optional leading `# ...` comment.
inline void write_trajectory_csv(const TrajectoryRecord& record, std::ostream& os,
                                 const std::string& header_comment = {}) {
  const auto precision = os.precision(17);
  if (!header_comment.empty()) os << "# " << header_comment << '\n';
  os << "t,e_mean,e_var,norm_drift\n";
  for (std::size_t k = 0; k < record.times.size(); ++k) {
    os << record.times[k] << ',' << record.energy_mean[k] << ',' << record.energy_variance[k]
       << ',' << record.norm_drift[k] << '\n';
  }
  os.precision(precision);
}

/// ρ(t) snapshots as {"t": [...], "rho": [matrix, ...]}.
inline json master_to_json(const MasterSolution& solution) {
  json rho = json::array();
  for (const Matrix& m : solution.states) rho.push_back(io::matrix_to_json(m));
  return {{"t", solution.times},
          {"rho", std::move(rho)},
          {"min_eigenvalue", solution.min_eigenvalue},
          {"positivity_warnings", solution.positivity_warnings}};
}

}  // namespace psd
