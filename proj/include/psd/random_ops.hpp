#pragma once

// Random states and operators for self-checks and tests.

#include "psd/noise.hpp"
#include "psd/quantum.hpp"

namespace psd {

inline complex random_complex(NoiseStream& stream) {
  const double re = stream.standard_normal();
  const double im = stream.standard_normal();
  return {re, im};
}

inline StateVector random_state(Eigen::Index n, NoiseStream& stream) {
  Vector v(n);
  for (Eigen::Index k = 0; k < n; ++k) v(k) = random_complex(stream);
  return StateVector(std::move(v));
}

inline Matrix random_matrix(Eigen::Index n, NoiseStream& stream) {
  Matrix m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) m(r, c) = random_complex(stream);
  }
  return m;
}

/// GUE-like hermitian matrix (A + A†)/2.
inline OperatorMatrix random_hermitian(Eigen::Index n, NoiseStream& stream) {
  const Matrix a = random_matrix(n, stream);
  return OperatorMatrix(0.5 * (a + a.adjoint()), true);
}

/// Full-rank density matrix A A† / Tr(A A†).
inline DensityOperator random_density(Eigen::Index n, NoiseStream& stream) {
  const Matrix a = random_matrix(n, stream);
  Matrix rho = a * a.adjoint();
  rho /= rho.trace().real();
  return DensityOperator(std::move(rho));
}

}  // namespace psd
