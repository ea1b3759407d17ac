#pragma once

// Real and complex Wiener increments and the classical complex Langevin walk.

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "psd/error.hpp"

namespace psd {

using complex = std::complex<double>;

/// Seedable per-trajectory random source.
///
/// The engine is keyed by the pair (master_seed, stream_index) through a
/// seed sequence, so trajectory k of an ensemble owns stream k and the
/// ensemble result does not depend on how trajectories are scheduled.
class NoiseStream {
 public:
  explicit NoiseStream(std::uint64_t master_seed, std::uint64_t stream_index = 0)
      : master_seed_(master_seed), stream_index_(stream_index) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                      static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(stream_index),
                      static_cast<std::uint32_t>(stream_index >> 32),
                      0x70736421u};
    engine_.seed(seq);
  }

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::uint64_t stream_index() const noexcept { return stream_index_; }
  std::uint64_t draws() const noexcept { return draws_; }

  /// Standard normal variate. Counts as one underlying draw.
  double standard_normal() {
    ++draws_;
    return normal_(engine_);
  }

 private:
  std::uint64_t master_seed_;
  std::uint64_t stream_index_;
  std::uint64_t draws_ = 0;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

struct RealIncrement {
  double value = 0.0;
};

/// dξ = dξ_R + i dξ_I with independent components of variance dt/2.
struct ComplexIncrement {
  double re = 0.0;
  double im = 0.0;

  complex value() const noexcept { return {re, im}; }
  static ComplexIncrement from(complex z) noexcept { return {z.real(), z.imag()}; }
};

namespace detail {

inline void require_positive_duration(double dt, const char* what) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw InvalidParameter(std::string(what) + " must be positive and finite");
  }
}

}  // namespace detail

/// One draw from Normal(0, dt).
inline RealIncrement sample_dw(double dt, NoiseStream& stream) {
  detail::require_positive_duration(dt, "dt");
  return {std::sqrt(dt) * stream.standard_normal()};
}

/// One complex increment: sqrt(dt/2) (g1 + i g2).
inline ComplexIncrement sample_dxi(double dt, NoiseStream& stream) {
  detail::require_positive_duration(dt, "dt");
  const double scale = std::sqrt(0.5 * dt);
  const double g1 = stream.standard_normal();
  const double g2 = stream.standard_normal();
  return {scale * g1, scale * g2};
}

/// Drift v, diffusion amplitude a and start point of dz = v dt + a dξ.
struct ClassicalDiffusionSpec {
  complex drift{0.0, 0.0};
  complex amplitude{0.0, 0.0};
  complex z0{0.0, 0.0};
};

/// Itô-Euler path of dz = v dt + a dξ; returns n_steps + 1 points including z0.
inline std::vector<complex> simulate_langevin(const ClassicalDiffusionSpec& spec, double dt,
                                              std::size_t n_steps, NoiseStream& stream) {
  detail::require_positive_duration(dt, "dt");
  if (n_steps == 0) throw InvalidParameter("n_steps must be at least 1");
  if (!std::isfinite(std::abs(spec.drift)) || !std::isfinite(std::abs(spec.amplitude)) ||
      !std::isfinite(std::abs(spec.z0))) {
    throw InvalidParameter("diffusion spec must be finite");
  }
  std::vector<complex> path;
  path.reserve(n_steps + 1);
  path.push_back(spec.z0);
  // z_k = z0 + v k dt + a Σ dξ; the drift is not accumulated step by step.
  complex noise_sum{0.0, 0.0};
  for (std::size_t k = 1; k <= n_steps; ++k) {
    noise_sum += sample_dxi(dt, stream).value();
    path.push_back(spec.z0 + spec.drift * (static_cast<double>(k) * dt) +
                   spec.amplitude * noise_sum);
  }
  return path;
}

/// Sample moments of dξ, as emitted by the `noise-audit` command.
struct NoiseMoments {
  double dt = 0.0;
  std::size_t n = 0;
  double mean_re = 0.0;
  double mean_im = 0.0;
  double mean_sq_re = 0.0;  // Re M(dξ)²
  double mean_sq_im = 0.0;  // Im M(dξ)²
  double mean_abs_sq = 0.0;
};

inline NoiseMoments measure_dxi_moments(double dt, std::size_t n, NoiseStream& stream,
                                        complex phase = {1.0, 0.0}) {
  detail::require_positive_duration(dt, "dt");
  if (n == 0) throw InvalidParameter("sample count must be at least 1");
  complex sum{0.0, 0.0};
  complex sum_sq{0.0, 0.0};
  double sum_abs_sq = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const complex z = phase * sample_dxi(dt, stream).value();
    sum += z;
    sum_sq += z * z;
    sum_abs_sq += std::norm(z);
  }
  const double inv = 1.0 / static_cast<double>(n);
  return {dt,
          n,
          sum.real() * inv,
          sum.imag() * inv,
          sum_sq.real() * inv,
          sum_sq.imag() * inv,
          sum_abs_sq * inv};
}

}  // namespace psd
