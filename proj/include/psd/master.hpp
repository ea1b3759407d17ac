#pragma once

// Density-operator evolution: Lindblad and PSD generators, a fixed-step RK4
// integrator, and the closed-form energy-basis coherence.

#include <cmath>
#include <cstddef>
#include <ostream>
#include <variant>
#include <vector>

#include "psd/diffusion.hpp"
#include "psd/error.hpp"
#include "psd/quantum.hpp"

namespace psd {

/// L ρ L† - ½ L†L ρ - ½ ρ L†L.
inline Matrix lindblad_rhs(const Matrix& rho, const OperatorMatrix& l) {
  detail::require_same_dim(rho.rows(), l.dim(), "lindblad_rhs");
  const Matrix& a = l.entries();
  const Matrix ada = a.adjoint() * a;
  return a * rho * a.adjoint() - 0.5 * (ada * rho + rho * ada);
}

inline Matrix lindblad_rhs(const DensityOperator& rho, const OperatorMatrix& l) {
  return lindblad_rhs(rho.entries(), l);
}

/// -(i/ħ)[H, ρ] + (τ₀/ħ²)(H ρ H - ½ H² ρ - ½ ρ H²).
inline Matrix psd_master_rhs(const Matrix& rho, const OperatorMatrix& h, double tau0,
                             double hbar = 1.0) {
  require_hermitian(h, "psd_master_rhs");
  detail::require_same_dim(rho.rows(), h.dim(), "psd_master_rhs");
  detail::require_nonnegative(tau0, "tau0");
  detail::require_positive_duration(hbar, "hbar");
  const Matrix& hm = h.entries();
  const Matrix h_rho = hm * rho;
  const Matrix rho_h = rho * hm;
  const Matrix h2 = hm * hm;
  const complex minus_i_over_hbar(0.0, -1.0 / hbar);
  return minus_i_over_hbar * (h_rho - rho_h) +
         (tau0 / (hbar * hbar)) * (h_rho * hm - 0.5 * (h2 * rho + rho * h2));
}

inline Matrix psd_master_rhs(const DensityOperator& rho, const OperatorMatrix& h, double tau0,
                             double hbar = 1.0) {
  return psd_master_rhs(rho.entries(), h, tau0, hbar);
}

struct LindbladModel {
  OperatorMatrix lindblad;
};

struct PsdMasterModel {
  OperatorMatrix hamiltonian;
};

/// Which right-hand side `integrate_master` drives.
using MasterModel = std::variant<LindbladModel, PsdMasterModel>;

struct MasterRunConfig {
  double dt = 1e-3;
  double t_final = 1.0;
  double tau0 = 1.0;
  double hbar = 1.0;
  std::size_t record_stride = 1;

  void validate() const {
    detail::require_positive_duration(dt, "dt");
    detail::require_positive_duration(t_final, "t_final");
    if (dt > t_final) throw InvalidParameter("dt must not exceed t_final");
    detail::require_nonnegative(tau0, "tau0");
    detail::require_positive_duration(hbar, "hbar");
    if (record_stride < 1) throw InvalidParameter("record_stride must be >= 1");
  }

  /// Steps used to reach t_final; dt is shrunk slightly if it does not divide it.
  std::size_t n_steps() const {
    return static_cast<std::size_t>(std::ceil(t_final / dt * (1.0 - 1e-12)));
  }
  double effective_dt() const { return t_final / static_cast<double>(n_steps()); }
};

inline Matrix master_rhs(const MasterModel& model, const Matrix& rho,
                         const MasterRunConfig& config) {
  if (const auto* l = std::get_if<LindbladModel>(&model)) return lindblad_rhs(rho, l->lindblad);
  return psd_master_rhs(rho, std::get<PsdMasterModel>(model).hamiltonian, config.tau0,
                        config.hbar);
}

struct MasterSolution {
  std::vector<double> times;
  std::vector<Matrix> states;
  double min_eigenvalue = 0.0;
  std::size_t positivity_warnings = 0;
};

inline constexpr double kTraceFailure = 1e-6;
inline constexpr double kPositivityWarning = -1e-8;

/// Classical RK4 with fixed step, recording every `record_stride` steps.
///
/// Hermiticity is restored after every step. Positivity is only monitored:
/// a recorded state with an eigenvalue below -1e-8 counts as a warning.
inline MasterSolution integrate_master(const Matrix& rho0, const MasterModel& model,
                                       const MasterRunConfig& config) {
  config.validate();
  if (rho0.rows() != rho0.cols()) throw ShapeError("rho0 must be square");
  const DensityCheck check0 = check_density(rho0);
  if (!check0.ok()) throw InvalidParameter("initial state is not a density operator");

  const std::size_t n = config.n_steps();
  const double h = config.effective_dt();
  const complex trace0 = rho0.trace();

  MasterSolution out;
  out.times.reserve(n / config.record_stride + 1);
  out.states.reserve(n / config.record_stride + 1);
  out.times.push_back(0.0);
  out.states.push_back(rho0);
  out.min_eigenvalue = check0.min_eigenvalue;

  Matrix rho = rho0;
  for (std::size_t step = 1; step <= n; ++step) {
    const Matrix k1 = master_rhs(model, rho, config);
    const Matrix k2 = master_rhs(model, rho + (0.5 * h) * k1, config);
    const Matrix k3 = master_rhs(model, rho + (0.5 * h) * k2, config);
    const Matrix k4 = master_rhs(model, rho + h * k3, config);
    rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    Matrix sym = 0.5 * (rho + rho.adjoint());
    rho = std::move(sym);

    const double drift = std::abs(rho.trace() - trace0);
    if (!(drift <= kTraceFailure)) {
      throw IntegrationFailure("trace drifted by " + std::to_string(drift) + " at step " +
                               std::to_string(step));
    }
    if (step % config.record_stride == 0 || step == n) {
      const double lowest = min_hermitian_eigenvalue(rho);
      out.min_eigenvalue = std::min(out.min_eigenvalue, lowest);
      if (lowest < kPositivityWarning) ++out.positivity_warnings;
      out.times.push_back(static_cast<double>(step) * h);
      out.states.push_back(rho);
    }
  }
  return out;
}

inline MasterSolution integrate_master(const DensityOperator& rho0, const MasterModel& model,
                                       const MasterRunConfig& config) {
  return integrate_master(rho0.entries(), model, config);
}

/// ρ₁₂(t) = ρ₁₂(0) exp(-iΔE t/ħ - τ₀ ΔE² t / 2ħ²), ΔE = E₁ - E₂.
inline complex analytic_offdiagonal(complex rho0_12, double e1, double e2, double tau0, double t,
                                    double hbar = 1.0) {
  const double delta = e1 - e2;
  const complex exponent(-tau0 * delta * delta * t / (2.0 * hbar * hbar), -delta * t / hbar);
  return rho0_12 * std::exp(exponent);
}

/// Largest off-diagonal magnitude; |ρ₁₂| for a qubit.
inline double max_offdiagonal(const Matrix& rho) {
  double best = 0.0;
  for (Eigen::Index r = 0; r < rho.rows(); ++r) {
    for (Eigen::Index c = r + 1; c < rho.cols(); ++c) best = std::max(best, std::abs(rho(r, c)));
  }
  return best;
}

/// Summary CSV: t, trace, purity, offdiag_abs.
inline void write_master_csv(const MasterSolution& solution, std::ostream& os) {
  const auto precision = os.precision(17);
  os << "t,trace,purity,offdiag_abs\n";
  for (std::size_t k = 0; k < solution.times.size(); ++k) {
    const Matrix& rho = solution.states[k];
    os << solution.times[k] << ',' << rho.trace().real() << ',' << (rho * rho).trace().real()
       << ',' << max_offdiagonal(rho) << '\n';
  }
  os.precision(precision);
}

}  // namespace psd
