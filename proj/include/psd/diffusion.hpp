#pragma once

// Itô state-diffusion integrators (general QSD and the Hamiltonian-driven
// primary form) and single-trajectory runs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "psd/error.hpp"
#include "psd/noise.hpp"
#include "psd/quantum.hpp"

namespace psd {

namespace detail {

inline void require_nonnegative(double x, const char* what) {
  if (!(x >= 0.0) || !std::isfinite(x)) {
    throw InvalidParameter(std::string(what) + " must be non-negative and finite");
  }
}

}  // namespace detail

/// L = τ₀^{1/2} H/ħ + i τ₀^{-1/2} I, the Lindblad operator generated by H.
inline OperatorMatrix lindblad_from_hamiltonian(const OperatorMatrix& h, double tau0,
                                                double hbar = 1.0) {
  require_hermitian(h, "lindblad_from_hamiltonian");
  detail::require_positive_duration(tau0, "tau0");
  detail::require_positive_duration(hbar, "hbar");
  const double root = std::sqrt(tau0);
  Matrix l = (root / hbar) * h.entries();
  l.diagonal().array() += complex(0.0, 1.0 / root);
  return OperatorMatrix(std::move(l), false);
}

/// L' = u L for a unit-modulus u.
inline OperatorMatrix gauge_transform(const OperatorMatrix& l, complex u) {
  if (std::abs(std::abs(u) - 1.0) > 1e-12) {
    throw InvalidParameter("gauge factor must have unit modulus");
  }
  return OperatorMatrix(u * l.entries(), false);
}

/// Noise seen by the gauge-transformed operator: dξ' = ū dξ.
inline ComplexIncrement rotate_noise(ComplexIncrement dxi, complex u) {
  return ComplexIncrement::from(std::conj(u) * dxi.value());
}

/// ψ + dψ for the QSD equation, before renormalization:
///
///   dψ = (<L†> L - ½ L†L - ½ <L†><L>) ψ dt + (L - <L>) ψ dξ
inline Vector qsd_increment(const StateVector& psi, const OperatorMatrix& l,
                            ComplexIncrement dxi, double dt) {
  detail::require_same_dim(l.dim(), psi.dim(), "qsd_step");
  detail::require_positive_duration(dt, "dt");
  const Vector& v = psi.amplitudes();
  const Vector lpsi = l.entries() * v;
  const complex mean_l = v.dot(lpsi);
  const Vector ldag_lpsi = l.entries().adjoint() * lpsi;
  const complex xi = dxi.value();

  Vector out = v;
  out += (std::conj(mean_l) * dt) * lpsi;
  out -= (0.5 * dt) * ldag_lpsi;
  out -= (0.5 * std::norm(mean_l) * dt) * v;
  out += xi * lpsi;
  out -= (mean_l * xi) * v;
  return out;
}

inline StateVector qsd_step(const StateVector& psi, const OperatorMatrix& l, ComplexIncrement dxi,
                            double dt) {
  return normalize(qsd_increment(psi, l, dxi, dt));
}

/// ψ + dψ for the primary state diffusion equation, before renormalization:
///
///   dψ = (-(i/ħ) H_Δ dt - (τ₀/2ħ²) H_Δ² dt + (τ₀^{1/2}/ħ) H_Δ dξ) ψ
///
/// Only matrix-vector products are used; H_Δ²ψ = H_Δ(H_Δψ).
inline Vector psd_increment(const StateVector& psi, const OperatorMatrix& h, double tau0,
                            ComplexIncrement dxi, double dt, double hbar = 1.0) {
  require_hermitian(h, "psd_step");
  detail::require_same_dim(h.dim(), psi.dim(), "psd_step");
  detail::require_positive_duration(dt, "dt");
  detail::require_nonnegative(tau0, "tau0");
  detail::require_positive_duration(hbar, "hbar");
  const Vector& v = psi.amplitudes();
  const Vector hpsi = h.entries() * v;
  const double mean = v.dot(hpsi).real();
  const Vector centered = hpsi - mean * v;
  const Vector centered_sq = h.entries() * centered - mean * centered;

  const complex schrodinger(0.0, -dt / hbar);
  const double localizing = -0.5 * tau0 * dt / (hbar * hbar);
  const complex diffusive = (std::sqrt(tau0) / hbar) * dxi.value();

  Vector out = v;
  out += (schrodinger + diffusive) * centered;
  out += localizing * centered_sq;
  return out;
}

inline StateVector psd_step(const StateVector& psi, const OperatorMatrix& h, double tau0,
                            ComplexIncrement dxi, double dt, double hbar = 1.0) {
  return normalize(psd_increment(psi, h, tau0, dxi, dt, hbar));
}

struct TrajectoryConfig {
  double dt = 1e-3;
  std::size_t n_steps = 1000;
  double tau0 = 1.0;
  double hbar = 1.0;
  std::size_t record_stride = 1;

  void validate() const {
    detail::require_positive_duration(dt, "dt");
    detail::require_nonnegative(tau0, "tau0");
    detail::require_positive_duration(hbar, "hbar");
    if (record_stride < 1) throw InvalidParameter("record_stride must be >= 1");
  }
};

/// PSD dynamics: the Lindblad operator is generated by the Hamiltonian itself.
struct PsdDynamics {
  OperatorMatrix hamiltonian;
};

/// General QSD with an explicit Lindblad operator; `observable` is what the
/// energy columns of the record report.
struct QsdDynamics {
  OperatorMatrix lindblad;
  OperatorMatrix observable;
};

using Dynamics = std::variant<PsdDynamics, QsdDynamics>;

inline const OperatorMatrix& recorded_observable(const Dynamics& dynamics) {
  return std::visit(
      [](const auto& d) -> const OperatorMatrix& {
        if constexpr (std::is_same_v<std::decay_t<decltype(d)>, PsdDynamics>) {
          return d.hamiltonian;
        } else {
          return d.observable;
        }
      },
      dynamics);
}

/// One Euler-Maruyama step of either dynamics, before renormalization.
inline Vector dynamics_increment(const Dynamics& dynamics, const StateVector& psi,
                                 const TrajectoryConfig& config, ComplexIncrement dxi) {
  if (const auto* p = std::get_if<PsdDynamics>(&dynamics)) {
    return psd_increment(psi, p->hamiltonian, config.tau0, dxi, config.dt, config.hbar);
  }
  const auto& q = std::get<QsdDynamics>(dynamics);
  return qsd_increment(psi, q.lindblad, dxi, config.dt);
}

/// Drives one trajectory and calls `observe(step, t, state, pre_norm)` at
/// step 0 and every `record_stride` steps. `pre_norm` is ‖ψ + dψ‖ of the step
/// that produced the state (1 at step 0). Returns the final state.
template <class Observer>
StateVector integrate_trajectory(const TrajectoryConfig& config, const Dynamics& dynamics,
                                 StateVector psi, NoiseStream& stream, Observer&& observe) {
  config.validate();
  const OperatorMatrix& observable = recorded_observable(dynamics);
  require_hermitian(observable, "trajectory observable");
  detail::require_same_dim(observable.dim(), psi.dim(), "run_trajectory");
  observe(std::size_t{0}, 0.0, psi, 1.0);
  for (std::size_t step = 1; step <= config.n_steps; ++step) {
    const ComplexIncrement dxi = sample_dxi(config.dt, stream);
    Vector next = dynamics_increment(dynamics, psi, config, dxi);
    const double pre_norm = next.norm();
    if (!(pre_norm >= kMinimumNorm) || !std::isfinite(pre_norm)) {
      throw DegenerateState("state norm " + std::to_string(pre_norm) + " at step " +
                            std::to_string(step));
    }
    psi = StateVector(std::move(next));
    if (step % config.record_stride == 0) {
      observe(step, static_cast<double>(step) * config.dt, psi, pre_norm);
    }
  }
  return psi;
}

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<double> energy_mean;
  std::vector<double> energy_variance;
  std::vector<double> norm_drift;
  StateVector final_state;
};

inline TrajectoryRecord run_trajectory(const TrajectoryConfig& config, const Dynamics& dynamics,
                                       const StateVector& psi0, NoiseStream& stream) {
  const OperatorMatrix& observable = recorded_observable(dynamics);
  TrajectoryRecord record{{}, {}, {}, {}, psi0};
  const std::size_t points = config.n_steps / std::max<std::size_t>(config.record_stride, 1) + 1;
  record.times.reserve(points);
  record.energy_mean.reserve(points);
  record.energy_variance.reserve(points);
  record.norm_drift.reserve(points);
  record.final_state = integrate_trajectory(
      config, dynamics, psi0, stream,
      [&](std::size_t, double t, const StateVector& psi, double pre_norm) {
        record.times.push_back(t);
        record.energy_mean.push_back(expectation(observable, psi).real());
        record.energy_variance.push_back(variance(observable, psi));
        record.norm_drift.push_back(pre_norm - 1.0);
      });
  return record;
}

}  // namespace psd
