#pragma once

// Monotonic Krotov-like sweeps for fidelity-optimal control under the
// normalization constraint |h(t)|^2 = N omega^2. The Lagrange multiplier
// lambda(t) is recomputed from the costate in every slice rather than held
// fixed as a penalty weight.

#include <cstdint>
#include <vector>

#include "qct/linalg.hpp"
#include "qct/pauli_basis.hpp"
#include "qct/propagation.hpp"

namespace qct {

enum class SliceUpdate {
  // Maximize Re(i Tr(V_{m+1}^dagger exp(-i H dt) U_m)) over the sphere, never
  // accepting a slice worse than the incumbent. Monotone in discrete time.
  Exact,
  UpdateThenStep,  // control from the slice boundary being entered, then step
  Midpoint,        // fixed-point iteration on the slice-averaged costate bilinear
};

struct ConvergenceCriteria {
  int max_cycles = 10000;
  double fidelity_tolerance = 1e-9;  // change over the trailing stall window
  int stall_window = 10;
  double lambda_rel_std_tolerance = 1e-3;
  double lambda_guard = 1e-12;  // in units of omega
  SliceUpdate slice_update = SliceUpdate::Exact;
  int midpoint_iterations = 3;
  int slice_iterations = 1;  // gradient evaluations per slice in Exact mode

  void validate() const;
};

struct KrotovState {
  ControlField field;
  UnitaryTrajectory u_traj;
  UnitaryTrajectory v_traj;  // costate; modulus of V_M equals the fidelity
  std::vector<double> lambda_record;
  double fidelity = 0.0;
};

struct IterationReport {
  int cycle = 0;
  double fidelity_before = 0.0;
  double fidelity_after = 0.0;
  bool monotonicity_violation = false;
  double violation_magnitude = 0.0;  // max(0, F_before^2 - F_after^2)
  double lambda_mean = 0.0;
  double lambda_rel_std = 0.0;
  int degenerate_slices = 0;
  double wall_seconds = 0.0;
};

struct CostateControl {
  double lambda = 0.0;
  RVector slice;
  bool degenerate = false;
};

/// Isotropic draw on the sphere |h| = sqrt(N) omega for every slice.
ControlField seed_random_field(const TimeGrid& grid, const GeneratorTable& basis,
                               std::uint64_t rng_seed, double omega = 1.0);

/// V(T) = (i/N) U_f Tr(U_f^dagger U(T)).
CMatrix terminal_costate(const CMatrix& u_final, const CMatrix& target);

/// Costate bilinear F = U V^dagger + V U^dagger.
CMatrix costate_bilinear(const CMatrix& u, const CMatrix& v);

/// lambda h_a = Tr(tau_a F), lambda = (1/omega) sqrt(sum_a Tr(tau_a F)^2 / N).
CostateControl control_from_costate(const CMatrix& u, const CMatrix& v,
                                    const GeneratorTable& basis, double omega = 1.0,
                                    double lambda_guard = 1e-12);

/// Per-slice subproblem shared by both sweeps: u_left = U_m, v_right = V_{m+1}.
struct SliceObjective {
  double value = 0.0;     // Re(i Tr(V^dagger E U))
  RVector gradient;       // d value / d h_a
  CMatrix propagator;     // E = exp(-i H dt)
};

SliceObjective evaluate_slice(const Eigen::Ref<const RVector>& h, const CMatrix& u_left,
                              const CMatrix& v_right, const GeneratorTable& basis, double dt,
                              bool with_gradient = true);

/// Costate sweep from T down to 0 with U held fixed. Replaces the field and
/// lambda record; returns the number of degenerate slices (field kept there).
int backward_sweep(KrotovState& state, const CMatrix& target, const GeneratorTable& basis,
                   const ConvergenceCriteria& criteria);

/// State sweep from 0 up to T with V held fixed; recomputes the fidelity.
int forward_sweep(KrotovState& state, const CMatrix& target, const GeneratorTable& basis,
                  const ConvergenceCriteria& criteria);

/// State after propagating `field` forward (step (ii) of the scheme).
KrotovState initial_state(ControlField field, const CMatrix& target, const GeneratorTable& basis);

struct SolveResult {
  KrotovState state;
  std::vector<IterationReport> reports;
  bool converged = false;
};

/// Alternates backward/forward sweeps until the fidelity stalls and lambda is
/// constant, or max_cycles is hit (converged = false).
SolveResult solve(const CMatrix& target, const GeneratorTable& basis, ControlField start,
                  const ConvergenceCriteria& criteria);

double relative_std(const std::vector<double>& values);

}  // namespace qct
