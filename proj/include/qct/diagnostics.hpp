#pragma once

// Executable checks of the structural properties of converged solutions:
// multiplier constancy, constancy of the one-qubit Hamiltonian part, time
// reversal symmetry, the costate flow i dF/dt = [H, F], and the first two
// lines of the weight-graded evolution equations.

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qct/krotov.hpp"

namespace qct {

/// Population std / |mean|. Throws DegenerateInput for an empty record or
/// |mean| < 1e-14.
double lambda_constancy(const std::vector<double>& lambda_record);

struct ConstancyReport {
  std::vector<double> ranges;  // max_t h_a - min_t h_a, one per weight-1 generator
  std::vector<std::string> labels;
  double aggregate = 0.0;           // max of ranges
  double aggregate_relative = 0.0;  // aggregate / (sqrt(N) omega)
};

ConstancyReport one_qubit_constancy(const ControlField& field, const GeneratorTable& basis);

struct SymmetryReport {
  double tolerance = 5e-2;
  std::vector<std::string> labels;
  std::vector<Parity> parities;
  std::vector<int> weights;
  RMatrix residuals;  // M x K, residual_a(m) in units of omega
  // Max |residual| / (sqrt(N) omega) per (parity, weight) group, e.g. "2a".
  std::map<std::string, double> group_max;
  double aggregate = 0.0;  // relative to sqrt(N) omega
  bool pass = false;
};

/// Symmetric generators: h_a(m) - h_a(M-1-m); antisymmetric: h_a(m) + h_a(M-1-m).
SymmetryReport time_reversal_residual(const ControlField& field, const GeneratorTable& basis,
                                      double tolerance = 5e-2);

struct ReversedSolution {
  UnitaryTrajectory u_traj;
  UnitaryTrajectory v_traj;
  ControlField field;
  std::vector<double> lambda_record;
};

/// U_rev(t) = U*(T-t) U^T(T), V_rev(t) = V*(T-t) U^T(T), H_rev(t) = H*(T-t),
/// lambda_rev(t) = lambda(T-t), all on the reflected grid.
ReversedSolution time_reverse_solution(const UnitaryTrajectory& u_traj, const UnitaryTrajectory& v_traj,
                                       const ControlField& field, const std::vector<double>& lambda_record,
                                       const GeneratorTable& basis);

/// max_m || U_{m+1} - exp(-i H_m dt) U_m ||_max.
double schrodinger_residual(const UnitaryTrajectory& u_traj, const ControlField& field,
                            const GeneratorTable& basis);

/// max over interior grid points of ||(F_{m+1} - F_{m-1}) / 2dt + i [H_m, F_m]||_max
/// with F = U V^dagger + V U^dagger.
double costate_commutator_residual(const KrotovState& state, const GeneratorTable& basis);

struct GradedResidual {
  double leakage = 0.0;           // weight <= 2 part of F not parallel to H, relative
  double h1_rate = 0.0;           // max_m ||dH_1/dt||_max
  double h2_equation = 0.0;       // max_m ||i lambda dH_2/dt - [H_2, F_3]_2||_max
  double h2_rate = 0.0;           // max_m ||dH_2/dt||_max (for reference)
};

struct GradedOptions {
  double leakage_tolerance = 1e-6;
};

/// Uses the slice-averaged bilinear (whose projection the exact slice update
/// makes parallel to h) and central differences across slices. Throws
/// DecompositionInconsistency when the leakage exceeds the tolerance and
/// InvalidArgument for n > 4 or M < 3.
GradedResidual graded_residual(const KrotovState& state, const GeneratorTable& basis,
                               const GradedOptions& opts = {});

/// Per-generator table: slice, then one column per generator (time reversal residuals).
void write_symmetry_csv(const std::filesystem::path& file, const SymmetryReport& report);

}  // namespace qct
