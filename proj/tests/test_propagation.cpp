#include <gtest/gtest.h>

#include <cmath>

#include "qct/krotov.hpp"
#include "qct/propagation.hpp"
#include "qct/targets.hpp"
#include "test_util.hpp"

using namespace qct;

TEST(TimeGrid, ValidatesAndComputesStep) {
  const TimeGrid g(2.0, 8);
  EXPECT_DOUBLE_EQ(g.dt(), 0.25);
  EXPECT_THROW(TimeGrid(1.0, 0), InvalidArgument);
  EXPECT_THROW(TimeGrid(0.0, 10), InvalidArgument);
  EXPECT_THROW(TimeGrid(-1.0, 10), InvalidArgument);
}

TEST(TimeGrid, DefaultSliceCount) {
  EXPECT_EQ(default_slice_count(0.1 * kT2Max), 100);
  EXPECT_EQ(default_slice_count(0.5 * kT2Max), 100);
  EXPECT_EQ(default_slice_count(1.0 * kT2Max), 200);
  EXPECT_EQ(default_slice_count(1.3 * kT2Max), 260);
}

TEST(Hamiltonian, Examples) {
  const auto b1 = enumerate_basis(1);
  EXPECT_LT(max_abs(assemble_hamiltonian(RVector::Zero(3), b1)), 1e-300);
  RVector z = RVector::Zero(3);
  z[2] = 1.0;
  EXPECT_LT(max_abs(assemble_hamiltonian(z, b1) - testutil::pauli_z() / std::sqrt(2.0)), 1e-15);

  const auto b2 = enumerate_basis(2);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  RVector h(15);
  for (auto& v : h) v = g(rng);
  const CMatrix H = assemble_hamiltonian(h, b2);
  EXPECT_TRUE(is_hermitian(H, 1e-14));
  EXPECT_NEAR((H * H).trace().real(), h.squaredNorm(), 1e-12);
  EXPECT_THROW(assemble_hamiltonian(RVector::Zero(4), b2), InvalidArgument);
}

TEST(StepPropagator, Examples) {
  EXPECT_LT(max_abs(step_propagator(CMatrix::Zero(2, 2), 0.3) - CMatrix::Identity(2, 2)), 1e-15);
  const CMatrix E = step_propagator(testutil::pauli_z() / std::sqrt(2.0), kPi * std::sqrt(2.0));
  EXPECT_LT(max_abs(E + CMatrix::Identity(2, 2)), 1e-14);

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const CMatrix H = testutil::random_traceless_hermitian(8, rng);
    const CMatrix U = step_propagator(H, 0.37);
    EXPECT_LT(unitarity_defect(U), 1e-12);
    EXPECT_LT(std::abs(U.determinant() - 1.0), 1e-10);
  }
  CMatrix bad = CMatrix::Zero(2, 2);
  bad(0, 1) = 1.0;
  EXPECT_THROW(step_propagator(bad, 0.1), InvalidArgument);
}

TEST(Propagation, ConstantXRotationReachesPauliX) {
  // h = (sqrt2, 0, 0) gives H = sigma_x, so exp(-i sigma_x T) at T = pi/2 is -i sigma_x.
  const auto b = enumerate_basis(1);
  const TimeGrid grid(kPi / 2.0, 10);
  ControlField f{grid, RMatrix::Zero(10, 3), 1.0};
  f.values.col(0).setConstant(std::sqrt(2.0));
  const auto traj = propagate_forward(f, b);
  EXPECT_LT(max_abs(traj.at(0) - CMatrix::Identity(2, 2)), 1e-300);
  EXPECT_LT(max_abs(traj.back() - Complex(0, -1) * testutil::pauli_x()), 1e-13);
  EXPECT_NEAR(trace_fidelity(traj.back(), testutil::pauli_x()), 1.0, 1e-13);
}

TEST(Propagation, TinyGridIsNearIdentity) {
  const auto b = enumerate_basis(2);
  const auto f = seed_random_field(TimeGrid(1e-9, 1), b, 3);
  EXPECT_LT(max_abs(propagate_forward(f, b).back() - CMatrix::Identity(4, 4)), 1e-8);
}

TEST(Propagation, UnitarityAlongLongTrajectory) {
  const auto b = enumerate_basis(2);
  const auto f = seed_random_field(TimeGrid(3.0, 10000), b, 9);
  EXPECT_LT(propagate_forward(f, b).max_unitarity_defect(), 1e-10);
}

TEST(Propagation, BackwardExamples) {
  const auto b = enumerate_basis(2);
  std::mt19937_64 rng(8);
  const CMatrix VT = testutil::random_unitary(4, rng);

  ControlField zero{TimeGrid(1.0, 5), RMatrix::Zero(5, 15), 1.0};
  const auto still = propagate_backward(VT, zero, b);
  for (const auto& v : still.matrices) EXPECT_LT(max_abs(v - VT), 1e-15);

  const auto f = seed_random_field(TimeGrid(2.0, 50), b, 4);
  const auto back = propagate_backward(VT, f, b);
  // Forward from V_0 with the same field must return V_T.
  CMatrix v = back.at(0);
  for (int m = 0; m < f.slices(); ++m)
    v = step_propagator(assemble_hamiltonian(f.values.row(m).transpose(), b), f.grid.dt()) * v;
  EXPECT_LT(max_abs(v - VT), 1e-9);

  const Complex s(0.3, -0.2);
  const auto scaled = propagate_backward(s * VT, f, b);
  EXPECT_LT(max_abs(scaled.at(0) - s * back.at(0)), 1e-13);
}

TEST(Fidelity, Examples) {
  std::mt19937_64 rng(2);
  const CMatrix U = testutil::random_unitary(4, rng);
  EXPECT_NEAR(trace_fidelity(U, U), 1.0, 1e-14);
  EXPECT_NEAR(trace_fidelity(std::polar(1.0, 0.7) * U, U), 1.0, 1e-14);
  EXPECT_NEAR(trace_fidelity(CMatrix::Identity(4, 4), make_target("cnot", 2).matrix), 0.5, 1e-15);
  EXPECT_NEAR(trace_fidelity(CMatrix::Identity(4, 4), make_target("swap", 2).matrix), 0.5, 1e-15);
  EXPECT_THROW(trace_fidelity(CMatrix::Identity(2, 2), U), InvalidArgument);
  const double f = trace_fidelity(testutil::random_unitary(4, rng), U);
  EXPECT_GE(f, 0.0);
  EXPECT_LE(f, 1.0);
}

TEST(NormalizeField, Examples) {
  const auto b = enumerate_basis(1);
  const TimeGrid grid(1.0, 3);
  RMatrix raw(3, 3);
  raw << std::sqrt(2.0), 0, 0,  //
      2 * std::sqrt(2.0), 0, 0,  //
      0.3, -1.2, 0.7;
  const auto f = normalize_field(raw, grid, b);
  EXPECT_NEAR(f.values(0, 0), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(f.values(1, 0), std::sqrt(2.0), 1e-15);
  for (int m = 0; m < 3; ++m) EXPECT_NEAR(f.values.row(m).norm(), std::sqrt(2.0), 1e-12);
  EXPECT_LT(f.normalization_defect(2), 1e-12);
  raw.row(2).setZero();
  EXPECT_THROW(normalize_field(raw, grid, b), DegenerateInput);
}

TEST(Propagation, SecondOrderInDtForSmoothField) {
  // Sampling a smooth field at slice midpoints is a midpoint rule, so the
  // final fidelity error shrinks by ~4 when dt halves.
  const auto b = enumerate_basis(2);
  const CMatrix target = make_target("cnot", 2).matrix;
  auto field_with = [&](int M) {
    const TimeGrid grid(1.0, M);
    RMatrix raw(M, 15);
    for (int m = 0; m < M; ++m) {
      const double t = (m + 0.5) * grid.dt();
      for (int a = 0; a < 15; ++a) raw(m, a) = std::cos(1.3 * t + 0.4 * a) + 0.2 * a;
    }
    return normalize_field(raw, grid, b);
  };
  const double ref = trace_fidelity(propagate_forward(field_with(6400), b).back(), target);
  const double e1 = std::abs(trace_fidelity(propagate_forward(field_with(50), b).back(), target) - ref);
  const double e2 = std::abs(trace_fidelity(propagate_forward(field_with(100), b).back(), target) - ref);
  EXPECT_NEAR(e1 / e2, 4.0, 0.6);
}

TEST(FieldFiles, RoundTripIsExact) {
  const auto b = enumerate_basis(2);
  const auto f = seed_random_field(TimeGrid(1.1 * kT2Max, 37), b, 12);
  const auto dir = std::filesystem::temp_directory_path() / "qct_field_roundtrip";
  std::filesystem::create_directories(dir);
  write_field(dir / "f", f, b);
  const auto g = read_field(dir / "f", b);
  EXPECT_EQ(g.slices(), 37);
  EXPECT_DOUBLE_EQ(g.grid.T, f.grid.T);
  EXPECT_EQ(g.values, f.values);
  EXPECT_THROW(read_field(dir / "f", enumerate_basis(3)), InvalidArgument);
  EXPECT_THROW(read_field(dir / "missing", b), InvalidArgument);
  std::filesystem::remove_all(dir);
}
