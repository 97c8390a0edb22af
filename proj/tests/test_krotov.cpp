#include <gtest/gtest.h>

#include <cmath>

#include "qct/krotov.hpp"
#include "qct/targets.hpp"
#include "test_util.hpp"

using namespace qct;

namespace {

double max_drop(const SolveResult& r) {
  double worst = 0.0;
  for (const auto& rep : r.reports) {
    worst = std::max(worst, rep.fidelity_before - rep.fidelity_after);
    EXPECT_EQ(rep.monotonicity_violation, rep.violation_magnitude > 1e-10);
  }
  return worst;
}

ConvergenceCriteria capped(int cycles) {
  ConvergenceCriteria c;
  c.max_cycles = cycles;
  return c;
}

}  // namespace

TEST(SeedField, NormalizedDeterministicAndSeedDependent) {
  const auto b = enumerate_basis(2);
  const TimeGrid g(1.0, 40);
  const auto f1 = seed_random_field(g, b, 17);
  const auto f2 = seed_random_field(g, b, 17);
  const auto f3 = seed_random_field(g, b, 18);
  for (int m = 0; m < 40; ++m) EXPECT_NEAR(f1.values.row(m).norm(), 2.0, 1e-12);
  EXPECT_EQ(f1.values, f2.values);
  EXPECT_GT((f1.values - f3.values).cwiseAbs().maxCoeff(), 0.0);
}

TEST(TerminalCostate, Examples) {
  const CMatrix cnot = make_target("cnot", 2).matrix;
  EXPECT_LT(max_abs(terminal_costate(cnot, cnot) - Complex(0, 1) * cnot), 1e-15);
  // sigma_x U is trace-orthogonal to U.
  const CMatrix u = make_target("w", 1).matrix;
  EXPECT_LT(max_abs(terminal_costate(u, testutil::pauli_x() * u)), 1e-15);
  EXPECT_LT(max_abs(terminal_costate(CMatrix::Identity(4, 4), cnot) - Complex(0, 0.5) * cnot), 1e-15);
  EXPECT_THROW(terminal_costate(CMatrix::Identity(2, 2), cnot), InvalidArgument);
}

TEST(ControlFromCostate, Examples) {
  const auto b = enumerate_basis(1);
  std::mt19937_64 rng(4);
  const CMatrix u = testutil::random_unitary(2, rng);
  // Perfectly converged terminal costate: F = 0, guard must fire.
  const auto deg = control_from_costate(u, Complex(0, 1) * u, b);
  EXPECT_TRUE(deg.degenerate);

  const CMatrix v = testutil::random_unitary(2, rng);
  const auto c1 = control_from_costate(u, v, b);
  ASSERT_FALSE(c1.degenerate);
  EXPECT_NEAR(c1.slice.norm(), std::sqrt(2.0), 1e-12);
  const auto c2 = control_from_costate(u, 3.5 * v, b);
  EXPECT_NEAR(c2.lambda, 3.5 * c1.lambda, 1e-12);
  EXPECT_LT((c2.slice - c1.slice).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(EvaluateSlice, GradientMatchesFiniteDifferences) {
  const auto b = enumerate_basis(2);
  std::mt19937_64 rng(10);
  const CMatrix u = testutil::random_unitary(4, rng);
  const CMatrix v = testutil::random_unitary(4, rng);
  RVector h(15);
  std::normal_distribution<double> g;
  for (auto& x : h) x = g(rng);
  const double dt = 0.3;
  const auto s = evaluate_slice(h, u, v, b, dt);
  for (int a = 0; a < 15; ++a) {
    RVector hp = h, hm = h;
    hp[a] += 1e-6;
    hm[a] -= 1e-6;
    const double fd = (evaluate_slice(hp, u, v, b, dt, false).value - evaluate_slice(hm, u, v, b, dt, false).value) / 2e-6;
    EXPECT_NEAR(s.gradient[a], fd, 1e-8);
  }
  EXPECT_LT(max_abs(s.propagator - step_propagator(assemble_hamiltonian(h, b), dt)), 1e-13);
}

TEST(Sweeps, OrthogonalStartIsDegenerateEverywhere) {
  const auto b = enumerate_basis(1);
  const auto f = seed_random_field(TimeGrid(1.0, 20), b, 2);
  const CMatrix uT = propagate_forward(f, b).back();
  const CMatrix target = testutil::pauli_x() * uT;  // Tr(target^dagger U_T) = 0
  auto state = initial_state(f, target, b);
  EXPECT_NEAR(state.fidelity, 0.0, 1e-14);
  EXPECT_EQ(backward_sweep(state, target, b, ConvergenceCriteria{}), 20);
  EXPECT_EQ(state.field.values, f.values);
}

TEST(Sweeps, OneCycleNeverDecreasesFidelityAndKeepsNormalization) {
  for (const auto mode : {SliceUpdate::Exact, SliceUpdate::UpdateThenStep, SliceUpdate::Midpoint}) {
    ConvergenceCriteria c;
    c.slice_update = mode;
    for (int n = 1; n <= 2; ++n) {
      const auto b = enumerate_basis(n);
      const CMatrix target = make_target("qft", n).matrix;
      for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        auto state = initial_state(seed_random_field(TimeGrid(0.6 * kT2Max, 100), b, seed), target, b);
        for (int cycle = 0; cycle < 3; ++cycle) {
          const double before = state.fidelity;
          backward_sweep(state, target, b, c);
          EXPECT_LT(state.field.normalization_defect(b.dim()), 1e-10);
          forward_sweep(state, target, b, c);
          EXPECT_LT(state.field.normalization_defect(b.dim()), 1e-10);
          EXPECT_GE(state.fidelity * state.fidelity, before * before - 1e-10);
        }
      }
    }
  }
}

TEST(Solve, PauliXWithGenerousTimeReachesHighFidelity) {
  const auto b = enumerate_basis(1);
  const auto r = solve(testutil::pauli_x(), b, seed_random_field(TimeGrid(0.9 * kPi, 100), b, 5), capped(2000));
  EXPECT_GT(r.state.fidelity, 0.999);
  EXPECT_LT(max_drop(r), 1e-10);
}

TEST(Solve, HadamardAboveOptimumSaturates) {
  const auto b = enumerate_basis(1);
  const auto r = solve(make_target("w", 1).matrix, b, seed_random_field(TimeGrid(0.95 * kT2Max, 190), b, 1), ConvergenceCriteria{});
  EXPECT_GT(r.state.fidelity, 0.999);
}

TEST(Solve, HadamardBelowOptimumFollowsSine) {
  // Below T(W) = pi/2 the best reachable fidelity is sin T.
  const auto b = enumerate_basis(1);
  const double T = 0.8 * kT2Max;
  const auto r = solve(make_target("w", 1).matrix, b, seed_random_field(TimeGrid(T, 160), b, 3), ConvergenceCriteria{});
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.state.fidelity, std::sin(T), 1e-8);
  EXPECT_LT(relative_std(r.state.lambda_record), 1e-3);
}

TEST(Solve, CnotBelowOptimumStaysBoundedAwayFromOne) {
  const auto b = enumerate_basis(2);
  const auto r = solve(make_target("cnot", 2).matrix, b, seed_random_field(TimeGrid(0.70 * kT2Max, 140), b, 1), ConvergenceCriteria{});
  ASSERT_TRUE(r.converged);
  EXPECT_LT(r.state.fidelity, 1.0 - 1e-3);
  EXPECT_GT(r.state.fidelity, 0.9);
  EXPECT_LT(max_drop(r), 1e-10);
  EXPECT_LT(r.reports.back().lambda_rel_std, 1e-3);
}

TEST(Solve, ConvergedFixedPointIsStable) {
  const auto b = enumerate_basis(1);
  const CMatrix target = make_target("w", 1).matrix;
  ConvergenceCriteria tight;
  tight.fidelity_tolerance = 1e-16;
  tight.max_cycles = 3000;
  auto r = solve(target, b, seed_random_field(TimeGrid(0.8 * kT2Max, 100), b, 1), tight);
  const RMatrix before = r.state.field.values;
  backward_sweep(r.state, target, b, tight);
  forward_sweep(r.state, target, b, tight);
  EXPECT_LT((r.state.field.values - before).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Solve, GlobalPhaseOfTargetIsIrrelevant) {
  const auto b = enumerate_basis(2);
  const CMatrix target = make_target("qft", 2).matrix;
  const auto start = seed_random_field(TimeGrid(0.6 * kT2Max, 100), b, 3);
  const auto r1 = solve(target, b, start, capped(30));
  const auto r2 = solve(std::polar(1.0, 1.234) * target, b, start, capped(30));
  ASSERT_EQ(r1.reports.size(), r2.reports.size());
  for (std::size_t k = 0; k < r1.reports.size(); ++k)
    EXPECT_NEAR(r1.reports[k].fidelity_after, r2.reports[k].fidelity_after, 1e-10);
  EXPECT_LT((r1.state.field.values - r2.state.field.values).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Solve, NotConvergedFlagWhenCycleCapHit) {
  const auto b = enumerate_basis(2);
  const auto r = solve(make_target("qft", 2).matrix, b, seed_random_field(TimeGrid(0.7 * kT2Max, 100), b, 1), capped(3));
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.reports.size(), 3u);
}

TEST(Criteria, Validation) {
  ConvergenceCriteria c;
  EXPECT_NO_THROW(c.validate());
  c.fidelity_tolerance = 0.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.max_cycles = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.stall_window = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(Monotonicity, RandomSeedsAcrossSizes) {
  ConvergenceCriteria c = capped(15);
  for (int n = 1; n <= 3; ++n) {
    const auto b = enumerate_basis(n);
    const CMatrix target = make_target(n == 1 ? "w" : "asym", n).matrix;
    for (std::uint64_t seed = 100; seed < 104; ++seed) {
      const auto r = solve(target, b, seed_random_field(TimeGrid((0.4 + 0.2 * n) * kT2Max, 100), b, seed), c);
      EXPECT_LT(max_drop(r), 1e-10) << "n=" << n << " seed=" << seed;
    }
  }
}
