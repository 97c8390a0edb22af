#pragma once

// Control algebra of one- and two-qubit Pauli generators and the full
// weight-graded Pauli expansion used by the diagnostics.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qct/linalg.hpp"

namespace qct {

enum class Axis : std::uint8_t { X = 1, Y = 2, Z = 3 };
enum class Parity : std::uint8_t { Symmetric, Antisymmetric };

char axis_char(Axis a);
const char* parity_name(Parity p);

/// Bumped whenever the generator ordering changes; stored in every field file.
inline constexpr int kBasisOrderingVersion = 1;

/// sigma^{a...}_{j...}: one or two distinct qubits (1-based, increasing) with
/// one axis per qubit.
struct GeneratorIndex {
  std::vector<int> qubits;
  std::vector<Axis> axes;

  int weight() const { return static_cast<int>(qubits.size()); }
  std::string label() const;  // e.g. "x1", "xy12"

  friend bool operator==(const GeneratorIndex&, const GeneratorIndex&) = default;
};

void validate(const GeneratorIndex& idx, int n);
Parity parity_of(const GeneratorIndex& idx);

/// A Pauli string times 1/sqrt(N) is a monomial matrix: row r has a single
/// nonzero at column col[r]. Kept alongside the dense form so that traces and
/// Hamiltonian assembly stay O(N) per generator.
struct MonomialMatrix {
  std::vector<int> col;
  std::vector<Complex> val;

  /// Tr(this * A).
  Complex trace_product(const CMatrix& a) const;
  /// A += coeff * this.
  void add_to(CMatrix& a, double coeff) const;
  CMatrix dense() const;
};

/// Monomial form of sigma_{a_1}^{q_1} ... (identity elsewhere), scaled by
/// `scale`. Qubit 1 is the most significant tensor factor.
MonomialMatrix pauli_string(int n, const std::vector<int>& qubits,
                            const std::vector<Axis>& axes, double scale);

class GeneratorTable {
 public:
  int n() const { return n_; }
  int dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }

  const GeneratorIndex& entry(std::size_t a) const { return entries_[a]; }
  const std::vector<GeneratorIndex>& entries() const { return entries_; }
  const CMatrix& matrix(std::size_t a) const { return matrices_[a]; }
  const MonomialMatrix& monomial(std::size_t a) const { return monomials_[a]; }
  Parity parity(std::size_t a) const { return parity_[a]; }
  int weight(std::size_t a) const { return entries_[a].weight(); }

  /// Position of `idx` in the ordering; throws InvalidArgument if absent.
  std::size_t index_of(const GeneratorIndex& idx) const;

  friend GeneratorTable enumerate_basis(int n);

 private:
  int n_ = 0;
  int dim_ = 0;
  std::vector<GeneratorIndex> entries_;
  std::vector<CMatrix> matrices_;
  std::vector<MonomialMatrix> monomials_;
  std::vector<Parity> parity_;
};

/// Weight-1 entries first (qubit, then axis), then weight-2 entries ordered by
/// (qubit pair, axis pair). Size is 9n(n-1)/2 + 3n.
GeneratorTable enumerate_basis(int n);

/// Full Pauli string key, one character per qubit from {I,X,Y,Z}.
using PauliKey = std::string;

struct PauliExpansion {
  int n = 0;
  std::map<PauliKey, double> coefficients;
  std::map<int, double> weight_norms;  // weight -> sum of squared coefficients

  int weight_of(const PauliKey& key) const;
  /// Sum of c_s tau_s.
  CMatrix reconstruct() const;
  /// Sum of c_s tau_s restricted to strings of the given weight.
  CMatrix component(int weight) const;
};

struct ExpansionOptions {
  double tolerance = 1e-10;
  // Naive dense expansion costs 16^n; above n = 4 the caller must opt in.
  bool allow_large = false;
};

/// Coefficients c_s = Tr(tau_s A) over all 4^n - 1 normalized non-identity
/// Pauli strings.
PauliExpansion expand_traceless(const CMatrix& a, int n,
                                const ExpansionOptions& opts = {});

/// Normalized Pauli string matrix for a full key (used by expansions).
MonomialMatrix pauli_string_from_key(const PauliKey& key);

}  // namespace qct
