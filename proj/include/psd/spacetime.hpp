#pragma once

// Planck-scale time fluctuations: the fluctuating time transformation, its
// norm completion, the resulting state propagator, and decoherence rates.

#include <cmath>
#include <limits>
#include <string>

#include "psd/diffusion.hpp"
#include "psd/error.hpp"
#include "psd/noise.hpp"
#include "psd/quantum.hpp"

namespace psd {

/// CODATA 2018 defaults, SI units.
struct PhysicalConstants {
  double hbar = 1.054571817e-34;  // J s
  double G = 6.67430e-11;         // m^3 kg^-1 s^-2
  double c = 299792458.0;         // m / s

  void validate() const {
    for (double v : {hbar, G, c}) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw InvalidParameter("physical constants must be positive and finite");
      }
    }
  }
};

/// T_Pl = (ħ G / c⁵)^{1/2}.
inline double planck_time(const PhysicalConstants& k = {}) {
  k.validate();
  const double c5 = k.c * k.c * k.c * k.c * k.c;
  return std::sqrt(k.hbar * k.G / c5);
}

/// τ₁ = C T_Pl.
inline double tau1(double C, const PhysicalConstants& k = {}) {
  if (!(C > 0.0) || !std::isfinite(C)) throw InvalidParameter("C must be positive");
  return C * planck_time(k);
}

/// dt̄ = dt + τ₁^{1/2} dξ, the time-time component of the fluctuating transformation.
inline complex sample_time_increment(double dt, double tau1_value, NoiseStream& stream) {
  detail::require_nonnegative(tau1_value, "tau1");
  const ComplexIncrement dxi = sample_dxi(dt, stream);
  return complex(dt, 0.0) + std::sqrt(tau1_value) * dxi.value();
}

/// Counter-terms s (of dξ) and R (of dt) that keep ‖ψ‖ fixed.
struct NormCompletion {
  complex s;
  OperatorMatrix R;
};

/// s = τ₁^{1/2} <H>, R = -(τ₁/2ħ) H_Δ².
inline NormCompletion norm_completion(const OperatorMatrix& h, const StateVector& psi,
                                      double tau1_value, double hbar = 1.0) {
  require_hermitian(h, "norm_completion");
  detail::require_same_dim(h.dim(), psi.dim(), "norm_completion");
  detail::require_nonnegative(tau1_value, "tau1");
  detail::require_positive_duration(hbar, "hbar");
  const double mean = expectation(h, psi).real();
  const OperatorMatrix centered = centered_operator(h, psi);
  Matrix r = (-0.5 * tau1_value / hbar) * (centered.entries() * centered.entries());
  return {complex(std::sqrt(tau1_value) * mean, 0.0), OperatorMatrix(std::move(r), true)};
}

/// Itô expansion d<ψ|ψ> = drift dt + 2 Re(noise dξ) for the propagator
///
///   ħ dψ = (-iH dt + R dt + τ₁^{1/2} H dξ - s dξ) ψ
///
/// with an arbitrary completion (s, R). Both coefficients vanish exactly
/// when (s, R) is the norm completion.
struct NormDifferential {
  double drift = 0.0;
  complex noise{0.0, 0.0};

  /// Root-mean-square of d<ψ|ψ> over the noise, per unit dt.
  double rms_per_dt(double dt) const {
    return std::sqrt(drift * drift * dt * dt + 2.0 * std::norm(noise) * dt) / dt;
  }
};

inline NormDifferential norm_differential(const OperatorMatrix& h, const StateVector& psi,
                                          double tau1_value, const NormCompletion& completion,
                                          double hbar = 1.0) {
  require_hermitian(h, "norm_differential");
  detail::require_same_dim(h.dim(), psi.dim(), "norm_differential");
  detail::require_same_dim(completion.R.dim(), psi.dim(), "norm_differential");
  const Vector& v = psi.amplitudes();
  Matrix deterministic = complex(0.0, -1.0) * h.entries() + completion.R.entries();
  Matrix coupling = std::sqrt(tau1_value) * h.entries();
  coupling.diagonal().array() -= completion.s;
  const Vector coupled = coupling * v;
  NormDifferential d;
  d.drift = 2.0 * v.dot(deterministic * v).real() / hbar + coupled.squaredNorm() / (hbar * hbar);
  d.noise = v.dot(coupled) / hbar;
  return d;
}

/// One step of the Schrödinger equation in fluctuating time, completed to
/// preserve the norm.
///
/// The generator is split into its identity component, which only carries
/// the global phase exp(-i<H>dt/ħ) and is applied exactly, and the
/// H_Δ-component, which takes an Euler-Maruyama step before renormalization.
inline StateVector fluctuating_time_step(const StateVector& psi, const OperatorMatrix& h,
                                         double tau1_value, double dt, ComplexIncrement dxi,
                                         double hbar = 1.0) {
  detail::require_positive_duration(dt, "dt");
  const NormCompletion completion = norm_completion(h, psi, tau1_value, hbar);
  const Vector& v = psi.amplitudes();
  const double mean = expectation(h, psi).real();
  const double root = std::sqrt(tau1_value);
  const complex xi = dxi.value();

  const complex scalar = (complex(0.0, -mean * dt) + (root * mean - completion.s) * xi) / hbar;

  const Vector centered = h.entries() * v - mean * v;
  Vector next = v;
  next += (complex(0.0, -dt) + root * xi) / hbar * centered;
  next += (dt / hbar) * (completion.R.entries() * v);
  const complex phase = std::exp(complex(0.0, scalar.imag()));
  return StateVector(phase * normalize(std::move(next)).amplitudes());
}

struct DecoherenceEstimate {
  double rate = 0.0;  // 1/s
  double time = std::numeric_limits<double>::infinity();
};

/// λ = τ₀ ΔE² / 2ħ², decay rate of energy-basis coherences.
inline DecoherenceEstimate decoherence_rate(double delta_e, double tau0,
                                            const PhysicalConstants& k = {}) {
  k.validate();
  detail::require_nonnegative(tau0, "tau0");
  if (!std::isfinite(delta_e)) throw InvalidParameter("delta_E must be finite");
  DecoherenceEstimate out;
  out.rate = tau0 * delta_e * delta_e / (2.0 * k.hbar * k.hbar);
  if (out.rate > 0.0) out.time = 1.0 / out.rate;
  return out;
}

inline constexpr double kStandardGravity = 9.80665;

/// ½ m (v₁² - v₂²).
inline double kinetic_energy_difference(double mass, double v1, double v2) {
  return 0.5 * mass * (v1 * v1 - v2 * v2);
}

/// m g Δh.
inline double gravitational_energy_difference(double mass, double height,
                                              double g = kStandardGravity) {
  return mass * g * height;
}

}  // namespace psd
