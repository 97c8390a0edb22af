#include "qct/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>

#include <Eigen/Eigenvalues>

namespace qct {

double lambda_constancy(const std::vector<double>& record) {
  if (record.empty()) throw DegenerateInput("lambda_constancy: empty record");
  const double mean = std::accumulate(record.begin(), record.end(), 0.0) / record.size();
  if (std::abs(mean) < 1e-14) throw DegenerateInput("lambda_constancy: degenerate record (mean ~ 0)");
  double var = 0.0;
  for (double v : record) var += (v - mean) * (v - mean);
  return std::sqrt(var / record.size()) / std::abs(mean);
}

namespace {

double sphere_radius(const ControlField& field, const GeneratorTable& basis) {
  return std::sqrt(static_cast<double>(basis.dim())) * field.omega;
}

std::string group_key(Parity p, int weight) {
  return std::to_string(weight) + (p == Parity::Symmetric ? "s" : "a");
}

CMatrix bilinear_at(const KrotovState& s, std::size_t m) {
  return costate_bilinear(s.u_traj.at(m), s.v_traj.at(m));
}

// (1/dt) int_0^dt e^{-iHt} F e^{iHt} dt in closed form through the eigenbasis of H.
CMatrix slice_average(const CMatrix& H, const CMatrix& F, double dt) {
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(H);
  const CMatrix& Q = eig.eigenvectors();
  const RVector& e = eig.eigenvalues();
  CMatrix G = Q.adjoint() * F * Q;
  for (Eigen::Index j = 0; j < G.rows(); ++j)
    for (Eigen::Index k = 0; k < G.cols(); ++k) {
      const double x = 0.5 * (e[j] - e[k]) * dt;
      const double sinc = std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x;
      G(j, k) *= std::polar(sinc, -x);
    }
  return Q * G * Q.adjoint();
}

CMatrix weight_part(const RVector& h, const GeneratorTable& basis, int weight) {
  RVector masked = RVector::Zero(h.size());
  for (std::size_t a = 0; a < basis.size(); ++a)
    if (basis.weight(a) == weight) masked[a] = h[a];
  return assemble_hamiltonian(masked, basis);
}

}  // namespace

ConstancyReport one_qubit_constancy(const ControlField& field, const GeneratorTable& basis) {
  ConstancyReport r;
  for (std::size_t a = 0; a < basis.size(); ++a) {
    if (basis.weight(a) != 1) continue;
    const auto col = field.values.col(static_cast<Eigen::Index>(a));
    const double range = col.size() ? col.maxCoeff() - col.minCoeff() : 0.0;
    r.ranges.push_back(range);
    r.labels.push_back(basis.entry(a).label());
    r.aggregate = std::max(r.aggregate, range);
  }
  r.aggregate_relative = r.aggregate / sphere_radius(field, basis);
  return r;
}

SymmetryReport time_reversal_residual(const ControlField& field, const GeneratorTable& basis,
                                      double tolerance) {
  SymmetryReport r;
  r.tolerance = tolerance;
  const int M = field.slices();
  const double radius = sphere_radius(field, basis);
  r.residuals = RMatrix::Zero(M, field.components());
  for (std::size_t a = 0; a < basis.size(); ++a) {
    const auto ai = static_cast<Eigen::Index>(a);
    const Parity p = basis.parity(a);
    const double sign = p == Parity::Symmetric ? -1.0 : 1.0;
    double worst = 0.0;
    for (int m = 0; m < M; ++m) {
      const double res = field.values(m, ai) + sign * field.values(M - 1 - m, ai);
      r.residuals(m, ai) = res;
      worst = std::max(worst, std::abs(res));
    }
    r.labels.push_back(basis.entry(a).label());
    r.parities.push_back(p);
    r.weights.push_back(basis.weight(a));
    auto& g = r.group_max[group_key(p, basis.weight(a))];
    g = std::max(g, worst / radius);
    r.aggregate = std::max(r.aggregate, worst / radius);
  }
  r.pass = r.aggregate <= tolerance;
  return r;
}

ReversedSolution time_reverse_solution(const UnitaryTrajectory& u_traj, const UnitaryTrajectory& v_traj,
                                       const ControlField& field, const std::vector<double>& lambda_record,
                                       const GeneratorTable& basis) {
  const int M = field.slices();
  if (static_cast<int>(u_traj.matrices.size()) != M + 1 || static_cast<int>(v_traj.matrices.size()) != M + 1)
    throw InvalidArgument("time_reverse_solution: trajectories and field are on different grids");
  if (!lambda_record.empty() && static_cast<int>(lambda_record.size()) != M)
    throw InvalidArgument("time_reverse_solution: lambda record length differs from M");
  ReversedSolution out;
  const CMatrix right = u_traj.back().transpose();
  for (int k = 0; k <= M; ++k) {
    out.u_traj.matrices.push_back(u_traj.at(M - k).conjugate() * right);
    out.v_traj.matrices.push_back(v_traj.at(M - k).conjugate() * right);
  }
  out.field = field;
  for (std::size_t a = 0; a < basis.size(); ++a) {
    // tau_a* = +tau_a for symmetric generators and -tau_a for antisymmetric ones.
    const double sign = basis.parity(a) == Parity::Symmetric ? 1.0 : -1.0;
    const auto ai = static_cast<Eigen::Index>(a);
    for (int k = 0; k < M; ++k) out.field.values(k, ai) = sign * field.values(M - 1 - k, ai);
  }
  out.lambda_record.assign(lambda_record.rbegin(), lambda_record.rend());
  return out;
}

double schrodinger_residual(const UnitaryTrajectory& u_traj, const ControlField& field,
                            const GeneratorTable& basis) {
  const int M = field.slices();
  if (static_cast<int>(u_traj.matrices.size()) != M + 1)
    throw InvalidArgument("schrodinger_residual: trajectory and field are on different grids");
  double worst = 0.0;
  for (int m = 0; m < M; ++m) {
    const CMatrix E = step_propagator(assemble_hamiltonian(field.values.row(m).transpose(), basis),
                                      field.grid.dt());
    worst = std::max(worst, max_abs(u_traj.at(m + 1) - E * u_traj.at(m)));
  }
  return worst;
}

double costate_commutator_residual(const KrotovState& state, const GeneratorTable& basis) {
  const int M = state.field.slices();
  if (M < 3) throw InvalidArgument("costate_commutator_residual: needs M >= 3");
  const double dt = state.field.grid.dt();
  const Complex I(0.0, 1.0);
  double worst = 0.0;
  for (int m = 1; m < M; ++m) {
    const CMatrix H = assemble_hamiltonian(state.field.values.row(m).transpose(), basis);
    const CMatrix F = bilinear_at(state, m);
    const CMatrix dF = (bilinear_at(state, m + 1) - bilinear_at(state, m - 1)) / (2.0 * dt);
    worst = std::max(worst, max_abs(dF + I * (H * F - F * H)));
  }
  return worst;
}

GradedResidual graded_residual(const KrotovState& state, const GeneratorTable& basis,
                               const GradedOptions& opts) {
  const int n = basis.n();
  const int M = state.field.slices();
  if (n > 4) throw InvalidArgument("graded_residual: full Pauli expansion limited to n <= 4");
  if (M < 3) throw InvalidArgument("graded_residual: needs M >= 3");
  const double dt = state.field.grid.dt();
  const Complex I(0.0, 1.0);
  const auto K = static_cast<Eigen::Index>(basis.size());

  std::vector<double> lambda(M);
  std::vector<CMatrix> f3(M);
  GradedResidual out;
  ExpansionOptions xo;
  xo.tolerance = 1e-8;
  for (int m = 0; m < M; ++m) {
    const RVector h = state.field.values.row(m).transpose();
    const CMatrix H = assemble_hamiltonian(h, basis);
    CMatrix Fbar = slice_average(H, bilinear_at(state, m), dt);
    Fbar = 0.5 * (Fbar + Fbar.adjoint());
    Fbar -= (Fbar.trace() / static_cast<double>(basis.dim())) * CMatrix::Identity(basis.dim(), basis.dim());
    RVector c(K);
    for (Eigen::Index a = 0; a < K; ++a) c[a] = basis.monomial(a).trace_product(Fbar).real();
    lambda[m] = c.dot(h) / h.squaredNorm();
    if (c.norm() > 0.0) out.leakage = std::max(out.leakage, (c - lambda[m] * h).norm() / c.norm());
    f3[m] = n >= 3 ? expand_traceless(Fbar, n, xo).component(3) : CMatrix::Zero(basis.dim(), basis.dim());
  }
  if (out.leakage > opts.leakage_tolerance)
    throw DecompositionInconsistency("graded_residual: weight <= 2 part of F is not parallel to H (leakage " +
                                     std::to_string(out.leakage) + ")");

  for (int m = 1; m + 1 < M; ++m) {
    const RVector dh = (state.field.values.row(m + 1) - state.field.values.row(m - 1)).transpose() / (2.0 * dt);
    out.h1_rate = std::max(out.h1_rate, max_abs(weight_part(dh, basis, 1)));
    const CMatrix dH2 = weight_part(dh, basis, 2);
    out.h2_rate = std::max(out.h2_rate, max_abs(dH2));
    const CMatrix H2 = weight_part(state.field.values.row(m).transpose(), basis, 2);
    CMatrix comm2 = CMatrix::Zero(basis.dim(), basis.dim());
    if (n >= 3) {
      // i[H2, F3] is Hermitian and traceless, so it can be graded directly.
      const CMatrix icomm = I * (H2 * f3[m] - f3[m] * H2);
      comm2 = -I * expand_traceless(icomm, n, xo).component(2);
    }
    out.h2_equation = std::max(out.h2_equation, max_abs(I * lambda[m] * dH2 - comm2));
  }
  return out;
}

void write_symmetry_csv(const std::filesystem::path& file, const SymmetryReport& report) {
  std::ofstream out(file);
  if (!out) throw InvalidArgument("cannot write " + file.string());
  out << "slice";
  for (const auto& l : report.labels) out << ',' << l;
  out << '\n' << std::setprecision(17);
  for (Eigen::Index m = 0; m < report.residuals.rows(); ++m) {
    out << m;
    for (Eigen::Index a = 0; a < report.residuals.cols(); ++a) out << ',' << report.residuals(m, a);
    out << '\n';
  }
}

}  // namespace qct
