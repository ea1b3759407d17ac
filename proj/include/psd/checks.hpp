#pragma once

// Self-checks shared by the CLI and the acceptance suite.

#include <algorithm>
#include <cstdint>
#include <limits>

#include "psd/diffusion.hpp"
#include "psd/random_ops.hpp"
#include "psd/spacetime.hpp"

namespace psd {

struct EquivalenceReport {
  std::size_t samples = 0;
  /// max over samples of the phase-aligned distance between the two propagators
  double max_deviation = 0.0;
  /// max over samples of |drift| + |noise| with the exact completion
  double max_completion_residual = 0.0;
  /// min over samples of the rms d<ψ|ψ>/dt with both s and R scaled by 1.01
  double min_perturbed_rms_per_dt = 0.0;
  /// same with only R scaled, over samples whose Var H is not small (the
  /// change is 1% of τ₁ Var H)
  double min_perturbed_r_rms_per_dt = 0.0;
  std::size_t perturbed_r_samples = 0;
  /// same with only s scaled, over samples whose <H> is not ~0 (a 1%
  /// change of s = 0 is no change)
  double min_perturbed_s_rms_per_dt = 0.0;
  std::size_t perturbed_s_samples = 0;

  static constexpr double kDeviationBound = 1e-12;
  static constexpr double kResidualBound = 1e-10;
  static constexpr double kPerturbedFloor = 1e-4;

  bool passed() const {
    return max_deviation < kDeviationBound && max_completion_residual < kResidualBound &&
           min_perturbed_rms_per_dt > kPerturbedFloor &&
           (perturbed_r_samples == 0 || min_perturbed_r_rms_per_dt > kPerturbedFloor) &&
           (perturbed_s_samples == 0 || min_perturbed_s_rms_per_dt > kPerturbedFloor);
  }
};

/// Compares `fluctuating_time_step` with `psd_step` at τ₀ = τ₁ on random
/// (ψ, H, dξ) of dimension 2..4, and runs the norm-completion controls.
inline EquivalenceReport check_spacetime_equivalence(std::uint64_t seed, std::size_t samples,
                                                     double dt = 1e-3, double tau1_value = 0.5) {
  if (samples == 0) throw InvalidParameter("samples must be >= 1");
  NoiseStream stream(seed, 0);
  EquivalenceReport report;
  report.samples = samples;
  report.min_perturbed_rms_per_dt = std::numeric_limits<double>::infinity();
  report.min_perturbed_r_rms_per_dt = std::numeric_limits<double>::infinity();
  report.min_perturbed_s_rms_per_dt = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < samples; ++k) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(k % 3);
    const OperatorMatrix h = random_hermitian(n, stream);
    const StateVector psi = random_state(n, stream);
    const ComplexIncrement dxi = sample_dxi(dt, stream);

    const StateVector a = fluctuating_time_step(psi, h, tau1_value, dt, dxi);
    const StateVector b = psd_step(psi, h, tau1_value, dxi, dt);
    report.max_deviation = std::max(report.max_deviation, distance_modulo_phase(b, a));

    const NormCompletion exact = norm_completion(h, psi, tau1_value);
    const NormDifferential d = norm_differential(h, psi, tau1_value, exact);
    report.max_completion_residual =
        std::max(report.max_completion_residual, std::abs(d.drift) + std::abs(d.noise));

    const NormCompletion perturbed{exact.s * 1.01, exact.R.scaled(1.01)};
    report.min_perturbed_rms_per_dt =
        std::min(report.min_perturbed_rms_per_dt,
                 norm_differential(h, psi, tau1_value, perturbed).rms_per_dt(dt));

    const double scale = h.entries().cwiseAbs().maxCoeff();
    if (variance(h, psi) > 0.1 * scale * scale) {
      const NormCompletion perturbed_r{exact.s, exact.R.scaled(1.01)};
      report.min_perturbed_r_rms_per_dt =
          std::min(report.min_perturbed_r_rms_per_dt,
                   norm_differential(h, psi, tau1_value, perturbed_r).rms_per_dt(dt));
      ++report.perturbed_r_samples;
    }
    if (std::abs(expectation(h, psi).real()) > 1e-2 * scale) {
      const NormCompletion perturbed_s{exact.s * 1.01, exact.R};
      report.min_perturbed_s_rms_per_dt =
          std::min(report.min_perturbed_s_rms_per_dt,
                   norm_differential(h, psi, tau1_value, perturbed_s).rms_per_dt(dt));
      ++report.perturbed_s_samples;
    }
  }
  return report;
}

}  // namespace psd
