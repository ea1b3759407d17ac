#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "psd/checks.hpp"
#include "psd/diffusion.hpp"
#include "psd/random_ops.hpp"
#include "psd/spacetime.hpp"

using psd::complex;
using psd::Matrix;
using psd::OperatorMatrix;
using psd::PhysicalConstants;
using psd::StateVector;
using psd::Vector;

// sqrt(ħG/c⁵) for the CODATA 2018 inputs, evaluated at 40 digits.
constexpr double kPlanckReference = 5.39124644666194387947e-44;

TEST(PlanckTime, CodataValue) {
  const double t = psd::planck_time();
  EXPECT_NEAR(t / kPlanckReference, 1.0, 4e-16);
  EXPECT_NEAR(t, 5.39e-44, 0.005e-44);
  // One significant figure: ≈ 5e-44 s.
  EXPECT_EQ(std::round(t / 1e-44), 5.0);
}

TEST(PlanckTime, ScalingAndNaturalUnits) {
  PhysicalConstants k;
  PhysicalConstants k4 = k;
  k4.G *= 4.0;
  EXPECT_NEAR(psd::planck_time(k4) / psd::planck_time(k), 2.0, 1e-15);
  EXPECT_EQ(psd::planck_time({1.0, 1.0, 1.0}), 1.0);
  EXPECT_THROW(psd::planck_time({0.0, 1.0, 1.0}), psd::InvalidParameter);
  EXPECT_THROW(psd::planck_time({1.0, -1.0, 1.0}), psd::InvalidParameter);
}

TEST(Tau1, Examples) {
  EXPECT_EQ(psd::tau1(1.0), psd::planck_time());
  EXPECT_NEAR(psd::tau1(2.0 * std::numbers::pi), 3.387420046105048e-43, 1e-57);
  EXPECT_THROW(psd::tau1(0.0), psd::InvalidParameter);
  EXPECT_THROW(psd::tau1(-2.0), psd::InvalidParameter);
}

TEST(SampleTimeIncrement, SmoothLimitIsExact) {
  psd::NoiseStream s(1);
  EXPECT_EQ(psd::sample_time_increment(0.3, 0.0, s), complex(0.3, 0.0));
}

TEST(SampleTimeIncrement, MeanAndFluctuationContract) {
  const double dt = 1e-2, tau = 4e-3;
  const std::size_t n = 400000;
  psd::NoiseStream s(2);
  complex sum{0.0, 0.0};
  double sq = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const complex d = psd::sample_time_increment(dt, tau, s);
    sum += d;
    sq += std::norm(d - dt);
  }
  const double sigma = std::sqrt(tau * dt);
  EXPECT_LT(std::abs(sum / double(n) - dt), 4.0 * sigma / std::sqrt(double(n)));
  EXPECT_NEAR(sq / n, tau * dt, 4.0 * tau * dt / std::sqrt(double(n)));
}

TEST(SampleTimeIncrement, RelativeFluctuationScaling) {
  // RMS of dt̄ - dt is √(τ₁ dt): equal to dt on the Planck scale, √(τ₁/dt) of
  // dt above it.
  const double tau = 1e-3;
  for (double dt : {1e-3, 1e-1, 10.0}) {
    const std::size_t n = 100000;
    psd::NoiseStream s(3);
    double sq = 0.0;
    for (std::size_t k = 0; k < n; ++k) sq += std::norm(psd::sample_time_increment(dt, tau, s) - dt);
    const double rel = std::sqrt(sq / n) / dt;
    EXPECT_NEAR(rel, std::sqrt(tau / dt), 0.02 * std::sqrt(tau / dt)) << dt;
  }
}

TEST(NormCompletion, EigenstateHasNoDtCounterTerm) {
  const auto h = OperatorMatrix::diagonal({0.7, -1.2});
  const double tau = 0.3;
  const auto c = psd::norm_completion(h, StateVector::basis(2, 0), tau);
  EXPECT_NEAR(c.s.real(), std::sqrt(tau) * 0.7, 1e-15);
  // R is not zero, but it annihilates the eigenstate.
  EXPECT_LE((c.R.entries() * StateVector::basis(2, 0).amplitudes()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(NormCompletion, TracelessQubitSuperposition) {
  Matrix m(2, 2);
  m << 0.4, complex(0.0, -1.1), complex(0.0, 1.1), -0.4;
  const OperatorMatrix h(m, true);
  // <H> = Re(H01 + H10)/2 + (H00 + H11)/2 = 0 for ψ = (1, 1)/√2.
  const StateVector psi(Vector::Ones(2));
  const double tau = 0.6, hbar = 1.3;
  const auto c = psd::norm_completion(h, psi, tau, hbar);
  EXPECT_NEAR(std::abs(c.s), 0.0, 1e-15);
  const Matrix expected = (-0.5 * tau / hbar) * (m * m);
  EXPECT_LE((c.R.entries() - expected).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_TRUE(c.R.is_hermitian());
}

TEST(NormCompletion, ExactCompletionClosesTheNormDifferential) {
  psd::NoiseStream s(4);
  for (int k = 0; k < 100; ++k) {
    const Eigen::Index n = 2 + k % 3;
    const auto h = psd::random_hermitian(n, s);
    const auto psi = psd::random_state(n, s);
    const double tau = 0.5;
    const auto c = psd::norm_completion(h, psi, tau);
    const auto d = psd::norm_differential(h, psi, tau, c);
    EXPECT_LT(std::abs(d.drift), 1e-10);
    EXPECT_LT(std::abs(d.noise), 1e-10);
  }
}

TEST(NormCompletion, PerturbedCompletionIsDetected) {
  Matrix m(3, 3);
  m << 1.0, complex(0.2, 0.1), 0.0, complex(0.2, -0.1), -0.5, 0.3, 0.0, 0.3, 2.0;
  const OperatorMatrix h(m, true);
  Vector v(3);
  v << 0.3, complex(0.5, 0.2), 0.6;
  const StateVector psi(v);
  const double tau = 0.5, dt = 1e-3;
  const auto c = psd::norm_completion(h, psi, tau);
  const psd::NormCompletion bad_r{c.s, c.R.scaled(1.01)};
  const psd::NormCompletion bad_s{c.s * 1.01, c.R};
  EXPECT_GT(psd::norm_differential(h, psi, tau, bad_r).rms_per_dt(dt), 1e-4);
  EXPECT_GT(psd::norm_differential(h, psi, tau, bad_s).rms_per_dt(dt), 1e-4);
}

TEST(FluctuatingTimeStep, ZeroHamiltonianIsIdentity) {
  psd::NoiseStream s(5);
  const auto psi = psd::random_state(3, s);
  const auto next = psd::fluctuating_time_step(psi, OperatorMatrix(Matrix::Zero(3, 3), true), 0.4,
                                               1e-3, {0.02, 0.01});
  EXPECT_LE((next.amplitudes() - psi.amplitudes()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(FluctuatingTimeStep, EquivalentToPsdStepWithTauZeroEqualTauOne) {
  const auto report = psd::check_spacetime_equivalence(2024, 500);
  EXPECT_LT(report.max_deviation, 1e-12);
  EXPECT_LT(report.max_completion_residual, 1e-10);
  EXPECT_GT(report.min_perturbed_rms_per_dt, 1e-4);
  EXPECT_GT(report.min_perturbed_r_rms_per_dt, 1e-4);
  EXPECT_GT(report.min_perturbed_s_rms_per_dt, 1e-4);
  EXPECT_GT(report.perturbed_r_samples, 100u);
  EXPECT_GT(report.perturbed_s_samples, 400u);
  EXPECT_TRUE(report.passed());
}

TEST(FluctuatingTimeStep, SmoothLimitIsSchrodingerStep) {
  // With τ₁ = 0 the step must agree with the Euler step of ħ dψ = -iH dt ψ
  // up to O(dt²) per step.
  psd::NoiseStream s(6);
  const auto h = psd::random_hermitian(3, s);
  const auto psi = psd::random_state(3, s);
  auto gap = [&](double dt) {
    const auto a = psd::fluctuating_time_step(psi, h, 0.0, dt, {0.3, -0.1});
    const Vector euler = psi.amplitudes() - complex(0.0, dt) * (h.entries() * psi.amplitudes());
    return psd::distance_modulo_phase(a.amplitudes(), psd::normalize(euler).amplitudes());
  };
  const double coarse = gap(1e-3);
  const double fine = gap(5e-4);
  EXPECT_LT(coarse, 1e-5);
  EXPECT_NEAR(coarse / fine, 4.0, 1.2);
}

TEST(FluctuatingTimeStep, LargeTauIsDiffusionDominated) {
  // For τ₁ much larger than dt the dξ term dominates the step.
  psd::NoiseStream s(7);
  const auto h = OperatorMatrix::diagonal({0.0, 1.0});
  const StateVector psi(Vector::Ones(2));
  const double dt = 1e-6;
  const psd::ComplexIncrement dxi{std::sqrt(dt), 0.0};
  const auto slow = psd::fluctuating_time_step(psi, h, 1e-9, dt, dxi);
  const auto fast = psd::fluctuating_time_step(psi, h, 1e3, dt, dxi);
  const double moved_slow = psd::distance_modulo_phase(psi, slow);
  const double moved_fast = psd::distance_modulo_phase(psi, fast);
  EXPECT_GT(moved_fast, 1e3 * moved_slow);
}

TEST(DecoherenceRate, Examples) {
  const auto zero = psd::decoherence_rate(0.0, 1e-43);
  EXPECT_EQ(zero.rate, 0.0);
  EXPECT_TRUE(std::isinf(zero.time));

  const auto planck = psd::decoherence_rate(1e-19, 5.39e-44);
  EXPECT_NEAR(planck.rate, 2.423295902142208e-14, 1e-27);
  EXPECT_NEAR(planck.time * planck.rate, 1.0, 1e-15);

  const auto doubled = psd::decoherence_rate(2e-19, 5.39e-44);
  EXPECT_NEAR(doubled.rate / planck.rate, 4.0, 1e-14);
  EXPECT_THROW(psd::decoherence_rate(1.0, -1.0), psd::InvalidParameter);
}

TEST(EnergyReductions, KineticAndGravitational) {
  EXPECT_DOUBLE_EQ(psd::kinetic_energy_difference(2.0, 3.0, 1.0), 8.0);
  EXPECT_DOUBLE_EQ(psd::gravitational_energy_difference(2.0, 0.5, 10.0), 10.0);
  EXPECT_DOUBLE_EQ(psd::gravitational_energy_difference(1.0, 1.0), psd::kStandardGravity);
}
