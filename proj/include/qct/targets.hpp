#pragma once

// Target unitaries, the textbook QFT circuit, and exact optimal times of one-
// and two-qubit operations.

#include <string>
#include <variant>
#include <vector>

#include "qct/linalg.hpp"

namespace qct {

struct WalshHadamard {
  int qubit;
};
/// 2 pi / 2^level phase on `target`, controlled by `control`.
struct PhaseShift {
  int level;
  int target;
  int control;
};
struct Swap {
  int first;
  int second;
};
struct Cnot {
  int control;
  int target;
};

using GateSpec = std::variant<WalshHadamard, PhaseShift, Swap, Cnot>;

std::string gate_label(const GateSpec& g);

struct TargetUnitary {
  std::string label;
  int n = 0;
  CMatrix matrix;
};

/// Entry (k, x) = exp(2 pi i k x / N) / sqrt(N).
TargetUnitary qft_unitary(int n);

/// Column 0 is proportional to alpha_k = (k+1)^{1/3} e^{i sqrt(k)}; column j >= 1
/// is (alpha_0..alpha_{j-1}, beta_j, 0, ...) with beta_j making it orthogonal
/// to column 0, then normalized.
TargetUnitary asym_unitary(int n);

/// Named target lookup: "qft", "asym", "cnot", "swap", "identity", "w".
TargetUnitary make_target(const std::string& name, int n);

/// 2x2 or 4x4 building blocks.
CMatrix hadamard_matrix();
CMatrix phase_matrix(int level);

/// Tensor embedding of the gate into n qubits (qubit 1 is most significant).
CMatrix gate_matrix(const GateSpec& spec, int n);

/// Product of the gates, first element applied first.
CMatrix compile_sequence(const std::vector<GateSpec>& seq, int n);

/// Gates in application order. Count is n(n+1)/2 + floor(n/2).
std::vector<GateSpec> qft_gate_sequence(int n);

struct OptimalTimeOptions {
  int offset_window = 2;  // m_j ranges over [-window, window]
};

/// T = (1/2) sqrt(min over chi, m_j of sum_j (theta_j + 2 pi m_j - chi)^2) in
/// units of 1/omega. A 2x2 input is embedded as U (x) 1.
double two_qubit_optimal_time(const CMatrix& u, const OptimalTimeOptions& opts = {});

/// The gate's local action on its qubits (2x2 or 4x4).
CMatrix local_gate_matrix(const GateSpec& g);

/// Sum of two_qubit_optimal_time over the sequence, units of 1/omega.
double sequence_time_cost(const std::vector<GateSpec>& seq);

/// 2n/sqrt5 + sqrt(3/5)(n - 2 + 2^{1-n} + floor(n/2)), in units of T2max.
double qft_time_upper_bound(int n);

}  // namespace qct
