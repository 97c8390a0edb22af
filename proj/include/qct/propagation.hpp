#pragma once

// Piecewise-constant Hamiltonians on a uniform time grid, exact per-slice
// propagation, and trace fidelity.

#include <filesystem>
#include <string>
#include <vector>

#include "qct/linalg.hpp"
#include "qct/pauli_basis.hpp"

namespace qct {

/// [0, T] split into M equal slices. T is in units of 1/omega.
struct TimeGrid {
  double T = 0.0;
  int M = 1;

  TimeGrid() = default;
  TimeGrid(double total, int slices);
  double dt() const { return T / M; }
};

/// M = max(100, ceil(200 * T / T2max)).
int default_slice_count(double T);

/// Slice m holds h_a on [m dt, (m+1) dt); values is M x K in GeneratorTable order.
struct ControlField {
  TimeGrid grid;
  RMatrix values;
  double omega = 1.0;

  int slices() const { return static_cast<int>(values.rows()); }
  int components() const { return static_cast<int>(values.cols()); }
  /// Largest relative deviation of a slice norm from sqrt(N) omega.
  double normalization_defect(int dim) const;
};

struct UnitaryTrajectory {
  std::vector<CMatrix> matrices;  // grid points 0..M

  const CMatrix& at(std::size_t m) const { return matrices[m]; }
  const CMatrix& back() const { return matrices.back(); }
  double max_unitarity_defect() const;
};

/// H = sum_a h_a tau_a.
CMatrix assemble_hamiltonian(const Eigen::Ref<const RVector>& slice, const GeneratorTable& basis);

/// exp(-i H dt) through the Hermitian eigendecomposition of H.
CMatrix step_propagator(const CMatrix& H, double dt);

/// U_0 = 1, U_{m+1} = exp(-i H_m dt) U_m.
UnitaryTrajectory propagate_forward(const ControlField& field, const GeneratorTable& basis);

/// V_M = v_final, V_m = exp(+i H_m dt) V_{m+1}. Linear in v_final, so a scaled
/// costate keeps its scale.
UnitaryTrajectory propagate_backward(const CMatrix& v_final, const ControlField& field,
                                     const GeneratorTable& basis);

/// |Tr(U^dagger U_f)| / N.
double trace_fidelity(const CMatrix& u, const CMatrix& u_f);

/// Scales each slice onto the sphere of radius sqrt(N) omega. Throws
/// DegenerateInput on an all-zero slice.
ControlField normalize_field(const RMatrix& raw, const TimeGrid& grid,
                             const GeneratorTable& basis, double omega = 1.0);

// Field files: <stem>.csv holds one row per slice ("slice,<labels...>"), and
// <stem>.json holds the header (n, T, T/T2max, M, omega, basis ordering).

void write_field(const std::filesystem::path& stem, const ControlField& field,
                 const GeneratorTable& basis);
ControlField read_field(const std::filesystem::path& stem, const GeneratorTable& basis);

}  // namespace qct
