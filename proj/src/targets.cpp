#include "qct/targets.hpp"

#include <array>
#include <cmath>

namespace qct {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::vector<int> gate_qubits(const GateSpec& g) {
  return std::visit(Overloaded{
                        [](const WalshHadamard& w) { return std::vector<int>{w.qubit}; },
                        [](const PhaseShift& p) { return std::vector<int>{p.control, p.target}; },
                        [](const Swap& s) { return std::vector<int>{s.first, s.second}; },
                        [](const Cnot& c) { return std::vector<int>{c.control, c.target}; },
                    },
                    g);
}

// Embeds `local` acting on `qubits` (first listed = most significant local bit).
CMatrix embed(const CMatrix& local, const std::vector<int>& qubits, int n) {
  const int dim = 1 << n;
  const int k = static_cast<int>(qubits.size());
  int mask = 0;
  for (int q : qubits) mask |= 1 << (n - q);
  auto local_index = [&](int full) {
    int idx = 0;
    for (int q : qubits) idx = (idx << 1) | ((full >> (n - q)) & 1);
    return idx;
  };
  CMatrix out = CMatrix::Zero(dim, dim);
  for (int r = 0; r < dim; ++r) {
    for (int lc = 0; lc < (1 << k); ++lc) {
      int c = r & ~mask;
      for (int i = 0; i < k; ++i)
        if ((lc >> (k - 1 - i)) & 1) c |= 1 << (n - qubits[i]);
      out(r, c) = local(local_index(r), lc);
    }
  }
  return out;
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace

std::string gate_label(const GateSpec& g) {
  return std::visit(
      Overloaded{
          [](const WalshHadamard& w) { return "W_" + std::to_string(w.qubit); },
          [](const PhaseShift& p) {
            return "R_" + std::to_string(p.level) + "," + std::to_string(p.target) + "," +
                   std::to_string(p.control);
          },
          [](const Swap& s) { return "S_" + std::to_string(s.first) + "," + std::to_string(s.second); },
          [](const Cnot& c) {
            return "CNOT_" + std::to_string(c.control) + "," + std::to_string(c.target);
          },
      },
      g);
}

TargetUnitary qft_unitary(int n) {
  if (n < 1) throw InvalidArgument("qft_unitary: n must be >= 1");
  const int N = 1 << n;
  CMatrix u(N, N);
  const double scale = 1.0 / std::sqrt(static_cast<double>(N));
  for (int k = 0; k < N; ++k)
    for (int x = 0; x < N; ++x) {
      // reduce k*x mod N first so the phase argument stays small
      const double angle = 2.0 * kPi * static_cast<double>((static_cast<long>(k) * x) % N) / N;
      u(k, x) = scale * Complex(std::cos(angle), std::sin(angle));
    }
  return {"qft", n, u};
}

TargetUnitary asym_unitary(int n) {
  if (n < 1) throw InvalidArgument("asym_unitary: n must be >= 1");
  const int N = 1 << n;
  std::vector<Complex> alpha(N);
  for (int k = 0; k < N; ++k)
    alpha[k] = std::cbrt(static_cast<double>(k + 1)) * std::exp(Complex(0.0, std::sqrt(static_cast<double>(k))));

  CMatrix u = CMatrix::Zero(N, N);
  for (int k = 0; k < N; ++k) u(k, 0) = alpha[k];
  double head = 0.0;  // sum_{i<j} |alpha_i|^2
  for (int j = 1; j < N; ++j) {
    head += std::norm(alpha[j - 1]);
    for (int i = 0; i < j; ++i) u(i, j) = alpha[i];
    u(j, j) = -head / std::conj(alpha[j]);
  }
  for (int j = 0; j < N; ++j) u.col(j).normalize();
  return {"asym", n, u};
}

CMatrix hadamard_matrix() {
  CMatrix w(2, 2);
  const double s = 1.0 / std::sqrt(2.0);
  w << s, s, s, -s;
  return w;
}

CMatrix phase_matrix(int level) {
  if (level < 1) throw InvalidArgument("phase_matrix: level must be >= 1");
  CMatrix r = CMatrix::Identity(2, 2);
  r(1, 1) = std::exp(Complex(0.0, 2.0 * kPi / std::ldexp(1.0, level)));
  return r;
}

CMatrix local_gate_matrix(const GateSpec& g) {
  return std::visit(Overloaded{
                        [](const WalshHadamard&) { return hadamard_matrix(); },
                        [](const PhaseShift& p) {
                          CMatrix m = CMatrix::Identity(4, 4);
                          m(3, 3) = phase_matrix(p.level)(1, 1);
                          return m;
                        },
                        [](const Swap&) {
                          CMatrix m = CMatrix::Zero(4, 4);
                          m(0, 0) = m(1, 2) = m(2, 1) = m(3, 3) = 1.0;
                          return m;
                        },
                        [](const Cnot&) {
                          CMatrix m = CMatrix::Zero(4, 4);
                          m(0, 0) = m(1, 1) = m(2, 3) = m(3, 2) = 1.0;
                          return m;
                        },
                    },
                    g);
}

CMatrix gate_matrix(const GateSpec& spec, int n) {
  if (n < 1) throw InvalidArgument("gate_matrix: n must be >= 1");
  const auto qubits = gate_qubits(spec);
  for (std::size_t i = 0; i < qubits.size(); ++i) {
    if (qubits[i] < 1 || qubits[i] > n) throw InvalidArgument("gate_matrix: qubit index out of range");
    for (std::size_t j = 0; j < i; ++j)
      if (qubits[i] == qubits[j]) throw InvalidArgument("gate_matrix: repeated qubit index");
  }
  if (const auto* p = std::get_if<PhaseShift>(&spec); p && p->level < 1)
    throw InvalidArgument("gate_matrix: phase level must be >= 1");
  return embed(local_gate_matrix(spec), qubits, n);
}

CMatrix compile_sequence(const std::vector<GateSpec>& seq, int n) {
  CMatrix u = CMatrix::Identity(1 << n, 1 << n);
  for (const auto& g : seq) u = gate_matrix(g, n) * u;
  return u;
}

std::vector<GateSpec> qft_gate_sequence(int n) {
  if (n < 1) throw InvalidArgument("qft_gate_sequence: n must be >= 1");
  std::vector<GateSpec> seq;
  // U_n is applied first; U_j = R_{j,q,n} ... R_{2,q,q+1} W_q with q = n - j + 1.
  for (int j = n; j >= 1; --j) {
    const int q = n - j + 1;
    seq.emplace_back(WalshHadamard{q});
    for (int level = 2; level <= j; ++level) seq.emplace_back(PhaseShift{level, q, q + level - 1});
  }
  for (int j = 1; j <= n / 2; ++j) seq.emplace_back(Swap{j, n + 1 - j});
  return seq;
}

double two_qubit_optimal_time(const CMatrix& u, const OptimalTimeOptions& opts) {
  CMatrix u4;
  if (u.rows() == 2 && u.cols() == 2) {
    u4 = kron(u, CMatrix::Identity(2, 2));
  } else if (u.rows() == 4 && u.cols() == 4) {
    u4 = u;
  } else {
    throw InvalidArgument("two_qubit_optimal_time: expected a 2x2 or 4x4 matrix");
  }
  Eigen::ComplexEigenSolver<CMatrix> eig(u4);
  std::array<double, 4> theta{};
  for (int j = 0; j < 4; ++j) {
    double t = std::arg(eig.eigenvalues()[j]);
    if (t <= -kPi) t += 2.0 * kPi;  // principal branch (-pi, pi]
    theta[j] = t;
  }

  const int w = opts.offset_window;
  const int span = 2 * w + 1;
  double best = std::numeric_limits<double>::infinity();
  int total = span * span * span * span;
  for (int code = 0; code < total; ++code) {
    std::array<double, 4> shifted{};
    int rest = code;
    double mean = 0.0;
    for (int j = 0; j < 4; ++j) {
      shifted[j] = theta[j] + 2.0 * kPi * (rest % span - w);
      rest /= span;
      mean += shifted[j] / 4.0;
    }
    double sum = 0.0;
    for (double s : shifted) sum += (s - mean) * (s - mean);
    best = std::min(best, sum);
  }
  return 0.5 * std::sqrt(best);
}

double sequence_time_cost(const std::vector<GateSpec>& seq) {
  double total = 0.0;
  for (const auto& g : seq) total += two_qubit_optimal_time(local_gate_matrix(g));
  return total;
}

double qft_time_upper_bound(int n) {
  if (n < 1) throw InvalidArgument("qft_time_upper_bound: n must be >= 1");
  return 2.0 * n / std::sqrt(5.0) +
         std::sqrt(3.0 / 5.0) * (n - 2 + std::ldexp(1.0, 1 - n) + n / 2);
}

TargetUnitary make_target(const std::string& name, int n) {
  if (name == "qft") return qft_unitary(n);
  if (name == "asym") return asym_unitary(n);
  if (name == "identity") return {"identity", n, CMatrix::Identity(1 << n, 1 << n)};
  if (name == "w") {
    if (n != 1) throw InvalidArgument("target w requires n = 1");
    return {"w", 1, hadamard_matrix()};
  }
  if (name == "cnot") {
    if (n != 2) throw InvalidArgument("target cnot requires n = 2");
    return {"cnot", 2, local_gate_matrix(Cnot{1, 2})};
  }
  if (name == "swap") {
    if (n != 2) throw InvalidArgument("target swap requires n = 2");
    return {"swap", 2, local_gate_matrix(Swap{1, 2})};
  }
  throw InvalidArgument("unknown target: " + name);
}

}  // namespace qct
