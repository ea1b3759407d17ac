#pragma once

// Dense states, operators and density operators for small Hilbert spaces.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "psd/error.hpp"

namespace psd {

using complex = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;

inline constexpr double kHermitianTolerance = 1e-12;
inline constexpr double kHermitianRepairLimit = 1e-8;
inline constexpr double kMinimumNorm = 1e-14;

namespace detail {

inline void require_same_dim(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) {
    throw ShapeError(std::string(what) + ": dimension " + std::to_string(a) + " vs " +
                     std::to_string(b));
  }
}

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace detail

/// Unit-norm amplitude vector. Every constructor normalizes.
class StateVector {
 public:
  explicit StateVector(Vector amplitudes) : amplitudes_(std::move(amplitudes)) {
    if (amplitudes_.size() < 1) throw ShapeError("state vector must have dimension >= 1");
    const double n = amplitudes_.norm();
    if (!(n >= kMinimumNorm) || !std::isfinite(n)) {
      throw DegenerateState("cannot normalize a state of norm " + std::to_string(n));
    }
    amplitudes_ /= n;
  }

  /// Basis state |k> of an n-level system.
  static StateVector basis(Eigen::Index n, Eigen::Index k) {
    if (k < 0 || k >= n) throw ShapeError("basis index out of range");
    Vector v = Vector::Zero(n);
    v(k) = 1.0;
    return StateVector(std::move(v));
  }

  const Vector& amplitudes() const noexcept { return amplitudes_; }
  Eigen::Index dim() const noexcept { return amplitudes_.size(); }
  complex operator[](Eigen::Index k) const { return amplitudes_(k); }

 private:
  Vector amplitudes_;
};

/// Divides by the norm; zero-norm input is a degenerate state.
inline StateVector normalize(Vector v) { return StateVector(std::move(v)); }

/// Square complex operator with an optional hermiticity guarantee.
///
/// When flagged hermitian the entries are symmetrized to (A + A†)/2; an
/// asymmetry above 1e-8 ‖A‖ is rejected instead of silently repaired.
class OperatorMatrix {
 public:
  explicit OperatorMatrix(Matrix entries, bool hermitian = false)
      : entries_(std::move(entries)), hermitian_(hermitian) {
    if (entries_.rows() != entries_.cols() || entries_.rows() < 1) {
      throw ShapeError("operator must be square with dimension >= 1");
    }
    if (!entries_.allFinite()) throw InvalidParameter("operator entries must be finite");
    if (hermitian_) {
      const double scale = std::max(detail::max_abs(entries_), 1.0e-300);
      const double asym = detail::max_abs(entries_ - entries_.adjoint());
      if (asym > kHermitianRepairLimit * scale) {
        throw InvalidParameter("operator flagged hermitian deviates by " + std::to_string(asym));
      }
      Matrix sym = 0.5 * (entries_ + entries_.adjoint());
      entries_ = std::move(sym);
    }
  }

  static OperatorMatrix hermitian(Matrix entries) { return OperatorMatrix(std::move(entries), true); }
  static OperatorMatrix identity(Eigen::Index n) { return OperatorMatrix(Matrix::Identity(n, n), true); }
  static OperatorMatrix diagonal(const std::vector<double>& values) {
    Matrix m = Matrix::Zero(static_cast<Eigen::Index>(values.size()),
                            static_cast<Eigen::Index>(values.size()));
    for (std::size_t k = 0; k < values.size(); ++k) {
      m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = values[k];
    }
    return OperatorMatrix(std::move(m), true);
  }

  const Matrix& entries() const noexcept { return entries_; }
  bool is_hermitian() const noexcept { return hermitian_; }
  Eigen::Index dim() const noexcept { return entries_.rows(); }

  OperatorMatrix scaled(complex factor) const {
    const bool stays_hermitian = hermitian_ && factor.imag() == 0.0;
    return OperatorMatrix(factor * entries_, stays_hermitian);
  }

  OperatorMatrix adjoint() const { return OperatorMatrix(entries_.adjoint(), hermitian_); }

 private:
  Matrix entries_;
  bool hermitian_;
};

/// Validation verdict for a candidate density matrix.
struct DensityCheck {
  double hermiticity_defect = 0.0;
  double trace_defect = 0.0;
  double min_eigenvalue = 0.0;

  bool ok() const noexcept {
    return hermiticity_defect <= kHermitianTolerance && trace_defect <= 1e-10 &&
           min_eigenvalue >= -1e-10;
  }
};

inline double min_hermitian_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

inline DensityCheck check_density(const Matrix& rho) {
  DensityCheck c;
  c.hermiticity_defect = detail::max_abs(rho - rho.adjoint());
  c.trace_defect = std::abs(rho.trace() - complex(1.0, 0.0));
  c.min_eigenvalue = min_hermitian_eigenvalue(rho);
  return c;
}

/// Hermitian, unit-trace, positive semidefinite ensemble state.
class DensityOperator {
 public:
  explicit DensityOperator(Matrix entries) : entries_(std::move(entries)) {
    if (entries_.rows() != entries_.cols() || entries_.rows() < 1) {
      throw ShapeError("density operator must be square");
    }
    const DensityCheck c = check_density(entries_);
    if (!c.ok()) {
      throw InvalidParameter("not a density operator (hermiticity " +
                             std::to_string(c.hermiticity_defect) + ", trace " +
                             std::to_string(c.trace_defect) + ", min eigenvalue " +
                             std::to_string(c.min_eigenvalue) + ")");
    }
    Matrix sym = 0.5 * (entries_ + entries_.adjoint());
    entries_ = std::move(sym);
  }

  const Matrix& entries() const noexcept { return entries_; }
  Eigen::Index dim() const noexcept { return entries_.rows(); }
  double purity() const { return (entries_ * entries_).trace().real(); }

 private:
  Matrix entries_;
};

/// <ψ|A|ψ>.
inline complex expectation(const OperatorMatrix& a, const StateVector& psi) {
  detail::require_same_dim(a.dim(), psi.dim(), "expectation");
  const complex value = psi.amplitudes().dot(a.entries() * psi.amplitudes());
  return a.is_hermitian() ? complex(value.real(), 0.0) : value;
}

inline void require_hermitian(const OperatorMatrix& h, const char* what) {
  if (!h.is_hermitian()) throw InvalidParameter(std::string(what) + " requires a hermitian operator");
}

/// H_Δ = H - <ψ|H|ψ> I.
inline OperatorMatrix centered_operator(const OperatorMatrix& h, const StateVector& psi) {
  require_hermitian(h, "centered_operator");
  const double mean = expectation(h, psi).real();
  Matrix centered = h.entries();
  centered.diagonal().array() -= mean;
  return OperatorMatrix(std::move(centered), true);
}

/// <H²> - <H>², evaluated as ‖H_Δψ‖² so the result is never negative.
inline double variance(const OperatorMatrix& h, const StateVector& psi) {
  require_hermitian(h, "variance");
  detail::require_same_dim(h.dim(), psi.dim(), "variance");
  const Vector hpsi = h.entries() * psi.amplitudes();
  const double mean = psi.amplitudes().dot(hpsi).real();
  return std::max(0.0, (hpsi - mean * psi.amplitudes()).squaredNorm());
}

inline DensityOperator pure_projector(const StateVector& psi) {
  return DensityOperator(psi.amplitudes() * psi.amplitudes().adjoint());
}

/// ½ Σ |λ_k(ρ1 - ρ2)|, clamped to [0, 1].
inline double trace_distance(const Matrix& rho1, const Matrix& rho2) {
  detail::require_same_dim(rho1.rows(), rho2.rows(), "trace_distance");
  const Matrix diff = rho1 - rho2;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (diff + diff.adjoint()),
                                               Eigen::EigenvaluesOnly);
  const double d = 0.5 * solver.eigenvalues().cwiseAbs().sum();
  return std::clamp(d, 0.0, 1.0);
}

inline double trace_distance(const DensityOperator& rho1, const DensityOperator& rho2) {
  return trace_distance(rho1.entries(), rho2.entries());
}

/// Max entry difference after rotating `b` onto the global phase of `a`.
///
/// The phase reference is the largest-magnitude amplitude of `a`.
inline double distance_modulo_phase(const Vector& a, const Vector& b) {
  detail::require_same_dim(a.size(), b.size(), "distance_modulo_phase");
  Eigen::Index k = 0;
  a.cwiseAbs().maxCoeff(&k);
  complex phase{1.0, 0.0};
  if (std::abs(b(k)) > 0.0 && std::abs(a(k)) > 0.0) {
    const complex ratio = a(k) / b(k);
    phase = ratio / std::abs(ratio);
  }
  return (a - phase * b).cwiseAbs().maxCoeff();
}

inline double distance_modulo_phase(const StateVector& a, const StateVector& b) {
  return distance_modulo_phase(a.amplitudes(), b.amplitudes());
}

}  // namespace psd
