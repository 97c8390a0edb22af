#include "qct/propagation.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace qct {

TimeGrid::TimeGrid(double total, int slices) : T(total), M(slices) {
  if (slices < 1) throw InvalidArgument("TimeGrid: M must be >= 1");
  if (!(total > 0.0)) throw InvalidArgument("TimeGrid: T must be positive");
}

int default_slice_count(double T) {
  return std::max(100, static_cast<int>(std::ceil(200.0 * T / kT2Max)));
}

double ControlField::normalization_defect(int dim) const {
  const double radius = std::sqrt(static_cast<double>(dim)) * omega;
  double worst = 0.0;
  for (int m = 0; m < slices(); ++m)
    worst = std::max(worst, std::abs(values.row(m).norm() - radius) / radius);
  return worst;
}

double UnitaryTrajectory::max_unitarity_defect() const {
  double worst = 0.0;
  for (const auto& u : matrices) worst = std::max(worst, unitarity_defect(u));
  return worst;
}

CMatrix assemble_hamiltonian(const Eigen::Ref<const RVector>& slice, const GeneratorTable& basis) {
  if (static_cast<std::size_t>(slice.size()) != basis.size())
    throw InvalidArgument("assemble_hamiltonian: coefficient count does not match basis");
  CMatrix h = CMatrix::Zero(basis.dim(), basis.dim());
  for (std::size_t a = 0; a < basis.size(); ++a)
    if (slice[a] != 0.0) basis.monomial(a).add_to(h, slice[a]);
  return h;
}

CMatrix step_propagator(const CMatrix& H, double dt) {
  if (!is_hermitian(H, 1e-10)) throw InvalidArgument("step_propagator: H is not Hermitian");
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(H);
  const auto& vecs = eig.eigenvectors();
  Eigen::VectorXcd phases(H.rows());
  for (Eigen::Index k = 0; k < H.rows(); ++k)
    phases[k] = std::exp(Complex(0.0, -eig.eigenvalues()[k] * dt));
  return vecs * phases.asDiagonal() * vecs.adjoint();
}

UnitaryTrajectory propagate_forward(const ControlField& field, const GeneratorTable& basis) {
  const int M = field.slices();
  const double dt = field.grid.dt();
  UnitaryTrajectory traj;
  traj.matrices.reserve(M + 1);
  traj.matrices.push_back(CMatrix::Identity(basis.dim(), basis.dim()));
  for (int m = 0; m < M; ++m) {
    const CMatrix step = step_propagator(assemble_hamiltonian(field.values.row(m).transpose(), basis), dt);
    traj.matrices.push_back(step * traj.matrices.back());
  }
  return traj;
}

UnitaryTrajectory propagate_backward(const CMatrix& v_final, const ControlField& field,
                                     const GeneratorTable& basis) {
  const int M = field.slices();
  const double dt = field.grid.dt();
  UnitaryTrajectory traj;
  traj.matrices.assign(M + 1, CMatrix());
  traj.matrices[M] = v_final;
  for (int m = M - 1; m >= 0; --m) {
    const CMatrix step = step_propagator(assemble_hamiltonian(field.values.row(m).transpose(), basis), -dt);
    traj.matrices[m] = step * traj.matrices[m + 1];
  }
  return traj;
}

double trace_fidelity(const CMatrix& u, const CMatrix& u_f) {
  if (u.rows() != u_f.rows() || u.cols() != u_f.cols() || u.rows() != u.cols())
    throw InvalidArgument("trace_fidelity: dimension mismatch");
  return std::abs((u.adjoint() * u_f).trace()) / static_cast<double>(u.rows());
}

ControlField normalize_field(const RMatrix& raw, const TimeGrid& grid,
                             const GeneratorTable& basis, double omega) {
  if (static_cast<std::size_t>(raw.cols()) != basis.size())
    throw InvalidArgument("normalize_field: column count does not match basis");
  if (raw.rows() != grid.M) throw InvalidArgument("normalize_field: row count does not match grid");
  const double radius = std::sqrt(static_cast<double>(basis.dim())) * omega;
  ControlField f{grid, raw, omega};
  for (int m = 0; m < grid.M; ++m) {
    const double norm = raw.row(m).norm();
    if (norm == 0.0) throw DegenerateInput("normalize_field: all-zero slice " + std::to_string(m));
    f.values.row(m) *= radius / norm;
  }
  return f;
}

void write_field(const std::filesystem::path& stem, const ControlField& field,
                 const GeneratorTable& basis) {
  std::ofstream csv(stem.string() + ".csv");
  if (!csv) throw InvalidArgument("cannot write " + stem.string() + ".csv");
  csv << "slice";
  for (const auto& e : basis.entries()) csv << ',' << e.label();
  csv << '\n' << std::setprecision(17);
  for (int m = 0; m < field.slices(); ++m) {
    csv << m;
    for (int a = 0; a < field.components(); ++a) csv << ',' << field.values(m, a);
    csv << '\n';
  }

  nlohmann::json header = {
      {"n", basis.n()},
      {"T", field.grid.T},
      {"T_over_T2max", field.grid.T / kT2Max},
      {"T2max", kT2Max},
      {"M", field.grid.M},
      {"omega", field.omega},
      {"basis_ordering_version", kBasisOrderingVersion},
      {"generator_count", basis.size()},
  };
  std::ofstream js(stem.string() + ".json");
  if (!js) throw InvalidArgument("cannot write " + stem.string() + ".json");
  js << std::setprecision(17) << header.dump(2) << '\n';
}

ControlField read_field(const std::filesystem::path& stem, const GeneratorTable& basis) {
  std::ifstream js(stem.string() + ".json");
  if (!js) throw InvalidArgument("cannot read " + stem.string() + ".json");
  const auto header = nlohmann::json::parse(js);
  if (header.at("n").get<int>() != basis.n())
    throw InvalidArgument("field file: qubit count does not match basis");
  if (header.at("basis_ordering_version").get<int>() != kBasisOrderingVersion)
    throw InvalidArgument("field file: unsupported basis ordering version");

  const TimeGrid grid(header.at("T").get<double>(), header.at("M").get<int>());
  ControlField f{grid, RMatrix::Zero(grid.M, static_cast<Eigen::Index>(basis.size())),
                 header.at("omega").get<double>()};

  std::ifstream csv(stem.string() + ".csv");
  if (!csv) throw InvalidArgument("cannot read " + stem.string() + ".csv");
  std::string line;
  std::getline(csv, line);  // column labels
  for (int m = 0; m < grid.M; ++m) {
    if (!std::getline(csv, line)) throw InvalidArgument("field file: too few rows");
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    if (std::stoi(cell) != m) throw InvalidArgument("field file: slice index out of order");
    for (int a = 0; a < f.components(); ++a) {
      if (!std::getline(row, cell, ',')) throw InvalidArgument("field file: too few columns");
      f.values(m, a) = std::stod(cell);
    }
  }
  return f;
}

}  // namespace qct
