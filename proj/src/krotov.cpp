#include "qct/krotov.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

namespace qct {

void ConvergenceCriteria::validate() const {
  if (max_cycles < 1) throw InvalidArgument("criteria: max_cycles must be positive");
  if (!(fidelity_tolerance > 0.0)) throw InvalidArgument("criteria: fidelity tolerance must be positive");
  if (stall_window < 1) throw InvalidArgument("criteria: stall window must be positive");
  if (!(lambda_rel_std_tolerance > 0.0)) throw InvalidArgument("criteria: lambda tolerance must be positive");
  if (!(lambda_guard > 0.0)) throw InvalidArgument("criteria: lambda guard must be positive");
  if (midpoint_iterations < 1) throw InvalidArgument("criteria: midpoint iterations must be positive");
  if (slice_iterations < 1) throw InvalidArgument("criteria: slice iterations must be positive");
}

ControlField seed_random_field(const TimeGrid& grid, const GeneratorTable& basis,
                               std::uint64_t rng_seed, double omega) {
  std::mt19937_64 rng(rng_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  RMatrix raw(grid.M, static_cast<Eigen::Index>(basis.size()));
  for (int m = 0; m < grid.M; ++m)
    for (Eigen::Index a = 0; a < raw.cols(); ++a) raw(m, a) = normal(rng);
  return normalize_field(raw, grid, basis, omega);
}

CMatrix terminal_costate(const CMatrix& u_final, const CMatrix& target) {
  if (u_final.rows() != target.rows() || u_final.cols() != target.cols())
    throw InvalidArgument("terminal_costate: dimension mismatch");
  const double N = static_cast<double>(target.rows());
  const Complex overlap = (target.adjoint() * u_final).trace();
  return (Complex(0.0, 1.0) / N) * overlap * target;
}

CMatrix costate_bilinear(const CMatrix& u, const CMatrix& v) {
  const CMatrix uv = u * v.adjoint();
  return uv + uv.adjoint();
}

namespace {

// c_a = Tr(tau_a F) with F = W + W^dagger, W = U V^dagger, so c_a = 2 Re Tr(tau_a W).
RVector projections(const CMatrix& w, const GeneratorTable& basis) {
  RVector c(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t a = 0; a < basis.size(); ++a)
    c[a] = 2.0 * basis.monomial(a).trace_product(w).real();
  return c;
}

CostateControl control_from_projections(const RVector& c, int dim, double omega, double guard) {
  CostateControl out;
  out.lambda = std::sqrt(c.squaredNorm() / dim) / omega;
  if (!(out.lambda > guard * omega)) {
    out.degenerate = true;
    return out;
  }
  out.slice = c / out.lambda;
  return out;
}

}  // namespace

CostateControl control_from_costate(const CMatrix& u, const CMatrix& v,
                                    const GeneratorTable& basis, double omega,
                                    double lambda_guard) {
  if (u.rows() != basis.dim() || v.rows() != basis.dim() || u.cols() != v.cols())
    throw InvalidArgument("control_from_costate: dimension mismatch");
  return control_from_projections(projections(u * v.adjoint(), basis), basis.dim(), omega,
                                  lambda_guard);
}

KrotovState initial_state(ControlField field, const CMatrix& target, const GeneratorTable& basis) {
  if (target.rows() != basis.dim() || target.cols() != basis.dim())
    throw InvalidArgument("target dimension does not match basis");
  if (static_cast<std::size_t>(field.components()) != basis.size())
    throw InvalidArgument("field component count does not match basis");
  KrotovState s;
  s.u_traj = propagate_forward(field, basis);
  s.fidelity = trace_fidelity(s.u_traj.back(), target);
  s.field = std::move(field);
  s.lambda_record.assign(s.field.slices(), 0.0);
  return s;
}

SliceObjective evaluate_slice(const Eigen::Ref<const RVector>& h, const CMatrix& u_left,
                              const CMatrix& v_right, const GeneratorTable& basis, double dt,
                              bool with_gradient) {
  const CMatrix H = assemble_hamiltonian(h, basis);
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(H);
  const CMatrix& Q = eig.eigenvectors();
  const RVector& eps = eig.eigenvalues();
  const Eigen::Index N = H.rows();

  Eigen::VectorXcd phase(N);
  for (Eigen::Index j = 0; j < N; ++j) phase[j] = std::exp(Complex(0.0, -eps[j] * dt));

  SliceObjective out;
  out.propagator = Q * phase.asDiagonal() * Q.adjoint();
  const CMatrix bq = (u_left * v_right.adjoint()) * Q;
  Complex tr = 0.0;
  for (Eigen::Index j = 0; j < N; ++j) tr += phase[j] * Q.col(j).dot(bq.col(j));
  out.value = (Complex(0.0, 1.0) * tr).real();
  if (!with_gradient) return out;
  const CMatrix b = Q.adjoint() * bq;

  // Divided differences of exp(-i eps dt) written as a sinc so that nearly
  // degenerate eigenvalues need no special case.
  CMatrix x(N, N);
  for (Eigen::Index j = 0; j < N; ++j) {
    for (Eigen::Index k = 0; k < N; ++k) {
      const double half = 0.5 * (eps[j] - eps[k]) * dt;
      const double sinc = std::abs(half) < 1e-8 ? 1.0 - half * half / 6.0 : std::sin(half) / half;
      const Complex dd = Complex(0.0, -dt) * std::exp(Complex(0.0, -0.5 * (eps[j] + eps[k]) * dt)) * sinc;
      x(k, j) = dd * b(k, j);
    }
  }
  const CMatrix y = Q * x * Q.adjoint();
  out.gradient.resize(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t a = 0; a < basis.size(); ++a)
    out.gradient[a] = -basis.monomial(a).trace_product(y).imag();
  return out;
}

namespace {

struct SliceChoice {
  double lambda = 0.0;
  bool degenerate = false;
  CMatrix propagator;  // exp(-i H dt) for the chosen slice
};

double lambda_from_gradient(const RVector& g, double dt, int dim, double omega) {
  return 2.0 * g.norm() / (dt * std::sqrt(static_cast<double>(dim)) * omega);
}

// Ascent on the slice objective over the sphere |h| = sqrt(N) omega, starting
// from the incumbent. Only improvements are accepted.
SliceChoice exact_slice(Eigen::Ref<RVector> h, const CMatrix& u_left, const CMatrix& v_right,
                        const GeneratorTable& basis, double dt, double omega,
                        const ConvergenceCriteria& criteria) {
  const double radius = std::sqrt(static_cast<double>(basis.dim())) * omega;
  SliceObjective best = evaluate_slice(h, u_left, v_right, basis, dt, true);
  SliceChoice out;
  out.lambda = lambda_from_gradient(best.gradient, dt, basis.dim(), omega);
  if (!(out.lambda > criteria.lambda_guard * omega)) {
    out.degenerate = true;
    out.propagator = std::move(best.propagator);
    return out;
  }
  RVector best_h = h;
  RVector direction = best.gradient;
  for (int it = 0; it < criteria.slice_iterations; ++it) {
    RVector trial = radius * direction / direction.norm();
    if ((trial - best_h).norm() <= 1e-13 * radius) break;
    bool improved = false;
    for (int halving = 0; halving < 8 && !improved; ++halving) {
      const bool last = it + 1 == criteria.slice_iterations;
      SliceObjective cand = evaluate_slice(trial, u_left, v_right, basis, dt, !last);
      if (cand.value >= best.value) {
        if (!last) direction = cand.gradient;
        best = std::move(cand);
        best_h = trial;
        improved = true;
      } else {
        trial = best_h + 0.5 * (trial - best_h);
        trial *= radius / trial.norm();
      }
    }
    if (!improved) break;
  }
  // lambda is reported from the gradient that set the last accepted direction;
  // at a fixed point it equals the gradient at the accepted slice.
  h = best_h;
  out.lambda = lambda_from_gradient(direction, dt, basis.dim(), omega);
  out.propagator = std::move(best.propagator);
  return out;
}

}  // namespace

int backward_sweep(KrotovState& state, const CMatrix& target, const GeneratorTable& basis,
                   const ConvergenceCriteria& criteria) {
  auto& field = state.field;
  const int M = field.slices();
  const double dt = field.grid.dt();
  const double omega = field.omega;
  const auto& U = state.u_traj.matrices;
  if (static_cast<int>(U.size()) != M + 1)
    throw InvalidArgument("backward_sweep: state trajectory does not match the field");
  auto& V = state.v_traj.matrices;
  V.assign(M + 1, CMatrix());
  V[M] = terminal_costate(U[M], target);
  state.lambda_record.assign(M, 0.0);

  int degenerate = 0;
  for (int m = M - 1; m >= 0; --m) {
    if (criteria.slice_update == SliceUpdate::Exact) {
      RVector h = field.values.row(m).transpose();
      SliceChoice choice = exact_slice(h, U[m], V[m + 1], basis, dt, omega, criteria);
      degenerate += choice.degenerate ? 1 : 0;
      field.values.row(m) = h.transpose();
      state.lambda_record[m] = choice.lambda;
      V[m] = choice.propagator.adjoint() * V[m + 1];
      continue;
    }
    const RVector c_end = projections(U[m + 1] * V[m + 1].adjoint(), basis);
    CostateControl ctl = control_from_projections(c_end, basis.dim(), omega, criteria.lambda_guard);
    if (!ctl.degenerate && criteria.slice_update == SliceUpdate::Midpoint) {
      for (int it = 0; it < criteria.midpoint_iterations; ++it) {
        const CMatrix v_trial =
            step_propagator(assemble_hamiltonian(ctl.slice, basis), -dt) * V[m + 1];
        const RVector c_mid = 0.5 * (c_end + projections(U[m] * v_trial.adjoint(), basis));
        CostateControl next = control_from_projections(c_mid, basis.dim(), omega, criteria.lambda_guard);
        if (next.degenerate) break;
        ctl = std::move(next);
      }
    }
    if (ctl.degenerate) {
      ++degenerate;
    } else {
      field.values.row(m) = ctl.slice.transpose();
    }
    state.lambda_record[m] = ctl.lambda;
    V[m] = step_propagator(assemble_hamiltonian(field.values.row(m).transpose(), basis), -dt) * V[m + 1];
  }
  return degenerate;
}

int forward_sweep(KrotovState& state, const CMatrix& target, const GeneratorTable& basis,
                  const ConvergenceCriteria& criteria) {
  auto& field = state.field;
  const int M = field.slices();
  const double dt = field.grid.dt();
  const double omega = field.omega;
  const auto& V = state.v_traj.matrices;
  if (static_cast<int>(V.size()) != M + 1)
    throw InvalidArgument("forward_sweep: costate trajectory missing; run backward_sweep first");
  auto& U = state.u_traj.matrices;
  U.assign(M + 1, CMatrix());
  U[0] = CMatrix::Identity(basis.dim(), basis.dim());
  state.lambda_record.assign(M, 0.0);

  int degenerate = 0;
  for (int m = 0; m < M; ++m) {
    if (criteria.slice_update == SliceUpdate::Exact) {
      RVector h = field.values.row(m).transpose();
      SliceChoice choice = exact_slice(h, U[m], V[m + 1], basis, dt, omega, criteria);
      degenerate += choice.degenerate ? 1 : 0;
      field.values.row(m) = h.transpose();
      state.lambda_record[m] = choice.lambda;
      U[m + 1] = choice.propagator * U[m];
      continue;
    }
    const RVector c_start = projections(U[m] * V[m].adjoint(), basis);
    CostateControl ctl = control_from_projections(c_start, basis.dim(), omega, criteria.lambda_guard);
    if (!ctl.degenerate && criteria.slice_update == SliceUpdate::Midpoint) {
      for (int it = 0; it < criteria.midpoint_iterations; ++it) {
        const CMatrix u_trial = step_propagator(assemble_hamiltonian(ctl.slice, basis), dt) * U[m];
        const RVector c_mid = 0.5 * (c_start + projections(u_trial * V[m + 1].adjoint(), basis));
        CostateControl next = control_from_projections(c_mid, basis.dim(), omega, criteria.lambda_guard);
        if (next.degenerate) break;
        ctl = std::move(next);
      }
    }
    if (ctl.degenerate) {
      ++degenerate;
    } else {
      field.values.row(m) = ctl.slice.transpose();
    }
    state.lambda_record[m] = ctl.lambda;
    U[m + 1] = step_propagator(assemble_hamiltonian(field.values.row(m).transpose(), basis), dt) * U[m];
  }
  state.fidelity = trace_fidelity(U[M], target);
  return degenerate;
}

double relative_std(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= n;
  if (std::abs(mean) < 1e-300) return std::numeric_limits<double>::infinity();
  return std::sqrt(var) / std::abs(mean);
}

SolveResult solve(const CMatrix& target, const GeneratorTable& basis, ControlField start,
                  const ConvergenceCriteria& criteria) {
  criteria.validate();
  SolveResult result;
  result.state = initial_state(std::move(start), target, basis);
  auto& state = result.state;

  std::vector<double> history{state.fidelity};
  for (int cycle = 1; cycle <= criteria.max_cycles; ++cycle) {
    const auto t0 = std::chrono::steady_clock::now();
    IterationReport rep;
    rep.cycle = cycle;
    rep.fidelity_before = state.fidelity;
    rep.degenerate_slices = backward_sweep(state, target, basis, criteria);
    rep.degenerate_slices += forward_sweep(state, target, basis, criteria);
    rep.fidelity_after = state.fidelity;
    const double drop = rep.fidelity_before * rep.fidelity_before - rep.fidelity_after * rep.fidelity_after;
    rep.violation_magnitude = std::max(0.0, drop);
    rep.monotonicity_violation = drop > 1e-10;
    const auto& lam = state.lambda_record;
    rep.lambda_mean = std::accumulate(lam.begin(), lam.end(), 0.0) / static_cast<double>(lam.size());
    rep.lambda_rel_std = relative_std(lam);
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.reports.push_back(rep);
    history.push_back(state.fidelity);

    if (cycle >= criteria.stall_window) {
      const double change = std::abs(history[cycle] - history[cycle - criteria.stall_window]);
      if (change < criteria.fidelity_tolerance && rep.lambda_rel_std < criteria.lambda_rel_std_tolerance) {
        result.converged = true;
        break;
      }
    }
  }
  return result;
}

}  // namespace qct
