#include <gtest/gtest.h>

#include "psd/io.hpp"
#include "psd/random_ops.hpp"

using psd::complex;
using psd::json;

TEST(JsonIo, StateAndOperatorRoundTrip) {
  psd::NoiseStream s(1);
  for (int k = 0; k < 20; ++k) {
    const Eigen::Index n = 1 + k % 4;
    const auto psi = psd::random_state(n, s);
    const auto h = psd::random_hermitian(n, s);
    const auto psi2 = psd::io::state_from_json(json::parse(psd::io::state_to_json(psi).dump()));
    const auto h2 = psd::io::operator_from_json(json::parse(psd::io::operator_to_json(h).dump()));
    EXPECT_LE((psi.amplitudes() - psi2.amplitudes()).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_EQ(h.entries(), h2.entries());
    EXPECT_TRUE(h2.is_hermitian());
  }
}

TEST(JsonIo, LayoutIsRowMajorPairs) {
  psd::Matrix m(2, 2);
  m << 1.0, complex(2.0, 3.0), complex(2.0, -3.0), 4.0;
  const json j = psd::io::matrix_to_json(m);
  EXPECT_EQ(j.dump(), "[[[1.0,0.0],[2.0,3.0]],[[2.0,-3.0],[4.0,0.0]]]");
}

TEST(JsonIo, MalformedInputRejected) {
  EXPECT_THROW(psd::io::complex_from_json(json::parse("[1,2,3]")), psd::InvalidParameter);
  EXPECT_THROW(psd::io::matrix_from_json(json::parse("[[1,2],[3]]")), psd::ShapeError);
  EXPECT_THROW(psd::io::vector_from_json(json::parse("[]")), psd::InvalidParameter);
  EXPECT_THROW(psd::io::state_from_json(json::parse("[[0,0],[0,0]]")), psd::DegenerateState);
}

TEST(JsonIo, NonFiniteBecomesNull) {
  EXPECT_TRUE(psd::io::number_or_null(std::numeric_limits<double>::infinity()).is_null());
  EXPECT_EQ(psd::io::number_or_null(2.5).get<double>(), 2.5);
}

TEST(TrajectoryJson, CarriesAllSeries) {
  const auto h = psd::OperatorMatrix::diagonal({0.0, 1.0});
  psd::NoiseStream s(2);
  const auto rec = psd::run_trajectory({1e-2, 10, 1.0, 1.0, 5}, psd::PsdDynamics{h},
                                       psd::StateVector(psd::Vector::Ones(2)), s);
  const json j = psd::trajectory_to_json(rec);
  for (const char* key : {"t", "e_mean", "e_var", "norm_drift"}) {
    EXPECT_EQ(j.at(key).size(), 3u) << key;
  }
  EXPECT_EQ(j.at("final_state").size(), 2u);
}
