#include "qct/pauli_basis.hpp"

#include <algorithm>
#include <cmath>

namespace qct {

char axis_char(Axis a) {
  switch (a) {
    case Axis::X: return 'x';
    case Axis::Y: return 'y';
    case Axis::Z: return 'z';
  }
  return '?';
}

const char* parity_name(Parity p) {
  return p == Parity::Symmetric ? "symmetric" : "antisymmetric";
}

std::string GeneratorIndex::label() const {
  std::string s;
  for (Axis a : axes) s.push_back(axis_char(a));
  for (int q : qubits) s += std::to_string(q);
  return s;
}

void validate(const GeneratorIndex& idx, int n) {
  if (idx.qubits.size() != idx.axes.size())
    throw InvalidArgument("generator index: qubit/axis count mismatch");
  if (idx.qubits.empty() || idx.qubits.size() > 2)
    throw InvalidArgument("generator index: weight must be 1 or 2");
  for (std::size_t i = 0; i < idx.qubits.size(); ++i) {
    if (idx.qubits[i] < 1 || idx.qubits[i] > n)
      throw InvalidArgument("generator index: qubit out of range");
    if (i > 0 && idx.qubits[i] <= idx.qubits[i - 1])
      throw InvalidArgument("generator index: qubits must be strictly increasing");
  }
}

Parity parity_of(const GeneratorIndex& idx) {
  auto ys = std::count(idx.axes.begin(), idx.axes.end(), Axis::Y);
  return ys % 2 == 0 ? Parity::Symmetric : Parity::Antisymmetric;
}

Complex MonomialMatrix::trace_product(const CMatrix& a) const {
  // Tr(P A) = sum_r P[r, col[r]] * A[col[r], r]
  Complex acc = 0.0;
  for (std::size_t r = 0; r < col.size(); ++r) acc += val[r] * a(col[r], r);
  return acc;
}

void MonomialMatrix::add_to(CMatrix& a, double coeff) const {
  for (std::size_t r = 0; r < col.size(); ++r) a(r, col[r]) += coeff * val[r];
}

CMatrix MonomialMatrix::dense() const {
  const auto n = static_cast<Eigen::Index>(col.size());
  CMatrix m = CMatrix::Zero(n, n);
  for (std::size_t r = 0; r < col.size(); ++r) m(r, col[r]) = val[r];
  return m;
}

MonomialMatrix pauli_string(int n, const std::vector<int>& qubits,
                            const std::vector<Axis>& axes, double scale) {
  const int dim = 1 << n;
  MonomialMatrix out;
  out.col.resize(dim);
  out.val.resize(dim);
  for (int r = 0; r < dim; ++r) {
    int c = r;
    Complex v = scale;
    for (std::size_t i = 0; i < qubits.size(); ++i) {
      const int bit = n - qubits[i];  // qubit 1 is the most significant bit
      const bool row_one = (r >> bit) & 1;
      switch (axes[i]) {
        case Axis::X:
          c ^= (1 << bit);
          break;
        case Axis::Y:
          c ^= (1 << bit);
          v *= row_one ? Complex(0, 1) : Complex(0, -1);
          break;
        case Axis::Z:
          if (row_one) v = -v;
          break;
      }
    }
    out.col[r] = c;
    out.val[r] = v;
  }
  return out;
}

std::size_t GeneratorTable::index_of(const GeneratorIndex& idx) const {
  auto it = std::find(entries_.begin(), entries_.end(), idx);
  if (it == entries_.end()) throw InvalidArgument("generator not in table: " + idx.label());
  return static_cast<std::size_t>(it - entries_.begin());
}

GeneratorTable enumerate_basis(int n) {
  if (n < 1) throw InvalidArgument("enumerate_basis: n must be >= 1");
  if (n > 16) throw InvalidArgument("enumerate_basis: n too large");
  constexpr Axis kAxes[] = {Axis::X, Axis::Y, Axis::Z};

  GeneratorTable t;
  t.n_ = n;
  t.dim_ = 1 << n;
  for (int j = 1; j <= n; ++j)
    for (Axis a : kAxes) t.entries_.push_back({{j}, {a}});
  for (int j = 1; j <= n; ++j)
    for (int k = j + 1; k <= n; ++k)
      for (Axis a : kAxes)
        for (Axis b : kAxes) t.entries_.push_back({{j, k}, {a, b}});

  const double scale = 1.0 / std::sqrt(static_cast<double>(t.dim_));
  for (const auto& e : t.entries_) {
    auto mono = pauli_string(n, e.qubits, e.axes, scale);
    t.matrices_.push_back(mono.dense());
    t.monomials_.push_back(std::move(mono));
    t.parity_.push_back(parity_of(e));
  }
  return t;
}

int PauliExpansion::weight_of(const PauliKey& key) const {
  return static_cast<int>(std::count_if(key.begin(), key.end(), [](char c) { return c != 'I'; }));
}

MonomialMatrix pauli_string_from_key(const PauliKey& key) {
  const int n = static_cast<int>(key.size());
  std::vector<int> qubits;
  std::vector<Axis> axes;
  for (int q = 0; q < n; ++q) {
    switch (key[q]) {
      case 'X': qubits.push_back(q + 1); axes.push_back(Axis::X); break;
      case 'Y': qubits.push_back(q + 1); axes.push_back(Axis::Y); break;
      case 'Z': qubits.push_back(q + 1); axes.push_back(Axis::Z); break;
      case 'I': break;
      default: throw InvalidArgument("bad Pauli key: " + key);
    }
  }
  return pauli_string(n, qubits, axes, 1.0 / std::sqrt(static_cast<double>(1 << n)));
}

CMatrix PauliExpansion::reconstruct() const {
  const int dim = 1 << n;
  CMatrix out = CMatrix::Zero(dim, dim);
  for (const auto& [key, c] : coefficients) pauli_string_from_key(key).add_to(out, c);
  return out;
}

CMatrix PauliExpansion::component(int weight) const {
  const int dim = 1 << n;
  CMatrix out = CMatrix::Zero(dim, dim);
  for (const auto& [key, c] : coefficients)
    if (weight_of(key) == weight) pauli_string_from_key(key).add_to(out, c);
  return out;
}

PauliExpansion expand_traceless(const CMatrix& a, int n, const ExpansionOptions& opts) {
  if (n < 1) throw InvalidArgument("expand_traceless: n must be >= 1");
  if (n > 4 && !opts.allow_large)
    throw InvalidArgument("expand_traceless: n > 4 requires allow_large");
  const int dim = 1 << n;
  if (a.rows() != dim || a.cols() != dim)
    throw InvalidArgument("expand_traceless: dimension mismatch");
  if (!is_hermitian(a, opts.tolerance))
    throw InvalidArgument("expand_traceless: input is not Hermitian");
  if (std::abs(a.trace()) > opts.tolerance * dim)
    throw InvalidArgument("expand_traceless: input is not traceless");

  static constexpr char kLetters[] = {'I', 'X', 'Y', 'Z'};
  PauliExpansion out;
  out.n = n;
  const long total = 1L << (2 * n);
  for (long code = 1; code < total; ++code) {
    PauliKey key(n, 'I');
    for (int q = 0; q < n; ++q) key[q] = kLetters[(code >> (2 * (n - 1 - q))) & 3];
    const double c = pauli_string_from_key(key).trace_product(a).real();
    out.coefficients.emplace(key, c);
    out.weight_norms[out.weight_of(key)] += c * c;
  }
  return out;
}

}  // namespace qct
