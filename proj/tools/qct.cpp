// qct: command-line front end for solves, sweeps, fits and diagnostics.
//
// Exit codes: 0 ok, 1 invalid configuration or missing inputs, 2 solve not
// converged, 3 fit has insufficient data in its window.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>

#include <CLI11.hpp>

#include "qct/continuation.hpp"
#include "qct/diagnostics.hpp"
#include "qct/fitting.hpp"
#include "qct/records.hpp"
#include "qct/targets.hpp"

namespace fs = std::filesystem;
using namespace qct;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitNotConverged = 2;
constexpr int kExitInsufficient = 3;

// Relative output paths are placed under QCT_OUTPUT_ROOT when it is set.
fs::path output_path(const std::string& p) {
  fs::path path(p);
  if (const char* root = std::getenv("QCT_OUTPUT_ROOT"); root && *root && path.is_relative())
    return fs::path(root) / path;
  return path;
}

int jobs_from(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("QCT_JOBS"); env && *env) {
    try {
      const int j = std::stoi(env);
      if (j >= 1) return j;
    } catch (const std::exception&) {
    }
    throw InvalidArgument(std::string("QCT_JOBS must be a positive integer, got ") + env);
  }
  return 1;
}

std::pair<double, double> parse_window(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw InvalidArgument("window must be lo:hi, got " + s);
  const double lo = std::stod(s.substr(0, colon));
  const double hi = std::stod(s.substr(colon + 1));
  if (!(lo < hi)) throw InvalidArgument("window must satisfy lo < hi");
  return {lo, hi};
}

std::vector<FitPoint> read_points_csv(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw InvalidArgument("cannot read " + file.string());
  std::vector<FitPoint> pts;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    std::string xs, ys;
    std::getline(row, xs, ',');
    std::getline(row, ys, ',');
    try {
      pts.push_back({std::stod(xs), std::stod(ys)});
    } catch (const std::exception&) {
      if (!first) throw InvalidArgument("malformed row in " + file.string() + ": " + line);
    }
    first = false;
  }
  return pts;
}

void emit(const Json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    const fs::path p = output_path(out);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    write_json(p, j);
  }
}

// ---- basis ----------------------------------------------------------------

int cmd_basis(int n, const std::string& out) {
  const auto basis = enumerate_basis(n);
  std::ostringstream csv;
  csv << "index,label,weight,parity\n";
  for (std::size_t a = 0; a < basis.size(); ++a)
    csv << a << ',' << basis.entry(a).label() << ',' << basis.weight(a) << ','
        << parity_name(basis.parity(a)) << '\n';
  if (out.empty()) {
    std::cout << csv.str();
  } else {
    const fs::path p = output_path(out);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream(p) << csv.str();
  }
  return kExitOk;
}

// ---- target ---------------------------------------------------------------

int cmd_target(const std::string& name, int n, const std::string& out) {
  const auto t = make_target(name, n);
  Json j = {{"label", t.label}, {"n", t.n}, {"unitarity_defect", unitarity_defect(t.matrix)}};
  if (n <= 2) j["optimal_T_over_T2max"] = two_qubit_optimal_time(t.matrix) / kT2Max;
  if (name == "qft") {
    Json gates = Json::array();
    for (const auto& g : qft_gate_sequence(n)) gates.push_back(gate_label(g));
    j["circuit"] = gates;
    j["circuit_T_over_T2max"] = sequence_time_cost(qft_gate_sequence(n)) / kT2Max;
    j["upper_bound_T_over_T2max"] = qft_time_upper_bound(n);
  }
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < t.matrix.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < t.matrix.cols(); ++c)
      row.push_back({t.matrix(r, c).real(), t.matrix(r, c).imag()});
    rows.push_back(row);
  }
  j["matrix"] = rows;
  stamp_provenance(j, Json{{"target", name}, {"n", n}});
  emit(j, out);
  return kExitOk;
}

// ---- solve ----------------------------------------------------------------

struct SolveArgs {
  std::string config;
  std::string target;
  int n = 0;
  double T = 0.0;  // T2max units
  int M = 0;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string criteria_json;
};

Json solve_inputs(const SolveArgs& a, const ConvergenceCriteria& c, int M) {
  return {{"target", a.target}, {"n", a.n},       {"T_over_T2max", a.T},
          {"M", M},             {"seed", *a.seed}, {"criteria", to_json(c)}};
}

int cmd_solve(SolveArgs a) {
  ConvergenceCriteria criteria;
  if (!a.config.empty()) {
    const Json cfg = read_json(a.config);
    if (a.target.empty()) a.target = cfg.value("target", std::string());
    if (a.n == 0) a.n = cfg.value("n", 0);
    if (a.T == 0.0) a.T = cfg.value("T", 0.0);
    if (a.M == 0) a.M = cfg.value("M", 0);
    if (!a.seed && cfg.contains("seed")) a.seed = cfg.at("seed").get<std::uint64_t>();
    if (a.out.empty()) a.out = cfg.value("out", std::string());
    if (cfg.contains("criteria")) criteria = criteria_from_json(cfg.at("criteria"));
  }
  if (!a.criteria_json.empty()) criteria = criteria_from_json(Json::parse(a.criteria_json));
  if (a.target.empty() || a.n < 1) throw InvalidArgument("solve needs a target and n >= 1");
  if (!(a.T > 0.0)) throw InvalidArgument("solve needs a single positive T (units of T2max)");
  if (!a.seed) throw InvalidArgument("solve needs an explicit --seed");
  if (a.out.empty()) throw InvalidArgument("solve needs an output directory (--out)");

  const auto basis = enumerate_basis(a.n);
  const auto target = make_target(a.target, a.n);
  const double T = a.T * kT2Max;
  const int M = a.M > 0 ? a.M : default_slice_count(T);
  const TimeGrid grid(T, M);

  const auto t0 = std::chrono::steady_clock::now();
  auto result = solve(target.matrix, basis, seed_random_field(grid, basis, *a.seed), criteria);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const fs::path dir = output_path(a.out);
  fs::create_directories(dir);
  write_field(dir / "field", result.state.field, basis);

  const Json inputs = solve_inputs(a, criteria, M);
  Json rec = {{"kind", "solve"}, {"inputs", inputs}};
  stamp_provenance(rec, inputs);
  rec["converged"] = result.converged;
  rec["fidelity"] = result.state.fidelity;
  rec["cycles"] = result.reports.size();
  rec["lambda_rel_std"] = result.reports.empty() ? 0.0 : result.reports.back().lambda_rel_std;
  rec["lambda_record"] = result.state.lambda_record;
  Json rows = Json::array();
  for (const auto& r : result.reports) {
    Json row = to_json(r);
    row.erase("wall_seconds");  // timing lives in one top-level key only
    rows.push_back(row);
  }
  rec["reports"] = rows;
  rec["field"] = "field";
  rec["wall_seconds"] = wall;
  write_json(dir / "record.json", rec);

  std::cerr << "F = " << std::setprecision(12) << result.state.fidelity << " after " << result.reports.size()
            << " cycles" << (result.converged ? "" : " (not converged)") << "\n";
  return result.converged ? kExitOk : kExitNotConverged;
}

// ---- sweep ----------------------------------------------------------------

int cmd_sweep(const std::string& config, const std::string& out, bool resume, int jobs, bool quiet) {
  if (config.empty()) throw InvalidArgument("sweep needs --config plan.json");
  if (out.empty()) throw InvalidArgument("sweep needs an output directory (--out)");
  SweepPlan plan = plan_from_json(read_json(config));
  plan.jobs = jobs_from(jobs);
  plan.validate();
  const fs::path dir = output_path(out);
  fs::create_directories(dir);

  SweepOptions opts;
  opts.store = dir / "branches";
  opts.resume = resume;
  if (!quiet) opts.log = [](const std::string& msg) { std::cerr << msg << '\n'; };
  const auto result = run_sweep(plan, opts);

  write_envelope_csv(dir / "envelope.csv", result.envelope);
  Json summary = {{"kind", "sweep"}, {"plan", to_json(plan)}};
  stamp_provenance(summary, to_json(plan));
  summary["branches"] = result.branches.size();
  summary["crossovers"] = result.envelope.crossovers;
  Json env = Json::array();
  for (const auto& e : result.envelope.entries)
    env.push_back({{"T_over_T2max", e.T_over_T2max},
                   {"best_fidelity", e.fidelity},
                   {"branch_id", e.branch_id},
                   {"converged", e.converged}});
  summary["envelope"] = env;
  write_json(dir / "sweep.json", summary);
  return kExitOk;
}

// ---- estimate / fit -------------------------------------------------------

int cmd_estimate(const std::string& envelope, const std::string& window, const std::string& out) {
  if (envelope.empty()) throw InvalidArgument("estimate needs --envelope envelope.csv");
  PowerFitOptions opts;
  std::tie(opts.window_low, opts.window_high) = parse_window(window);
  const auto env = read_envelope_csv(envelope);
  const auto fit = estimate_time_complexity(env, opts);
  Json j = to_json(fit);
  j["kind"] = "estimate";
  stamp_provenance(j, Json{{"envelope", fs::path(envelope).filename().string()}, {"window", window}});
  emit(j, out);
  return kExitOk;
}

int cmd_fit(const std::string& model, const std::string& in, const std::string& window, const std::string& out) {
  if (in.empty()) throw InvalidArgument("fit needs --in points.csv");
  const auto pts = read_points_csv(in);
  FitResult fit;
  switch (parse_model(model)) {
    case FitModel::Power: {
      PowerFitOptions opts;
      std::tie(opts.window_low, opts.window_high) = parse_window(window);
      fit = fit_power(pts, opts);
      break;
    }
    case FitModel::Linear: fit = fit_linear(pts); break;
    case FitModel::Exp2: fit = fit_exp2(pts); break;
  }
  Json j = to_json(fit);
  j["kind"] = "fit";
  stamp_provenance(j, Json{{"model", model}, {"in", fs::path(in).filename().string()}, {"window", window}});
  emit(j, out);
  return kExitOk;
}

// ---- verify ---------------------------------------------------------------

int cmd_verify(const std::string& record, const std::string& out, double symmetry_tolerance) {
  if (record.empty()) throw InvalidArgument("verify needs --record record.json");
  const fs::path rec_path(record);
  const Json rec = read_json(rec_path);
  const Json& in = rec.at("inputs");
  const int n = in.at("n").get<int>();
  const auto basis = enumerate_basis(n);
  const auto target = make_target(in.at("target").get<std::string>(), n);
  ControlField field = read_field(rec_path.parent_path() / rec.at("field").get<std::string>(), basis);
  KrotovState state = initial_state(std::move(field), target.matrix, basis);
  state.lambda_record = rec.at("lambda_record").get<std::vector<double>>();
  state.v_traj = propagate_backward(terminal_costate(state.u_traj.back(), target.matrix), state.field, basis);

  Json j = {{"kind", "verify"}, {"record", rec_path.filename().string()}, {"fidelity", state.fidelity}};
  stamp_provenance(j, in);
  try {
    j["lambda_constancy"] = lambda_constancy(state.lambda_record);
  } catch (const DegenerateInput& e) {
    j["lambda_constancy"] = {{"error", "degenerate-record"}, {"message", e.what()}};
  }
  const auto oq = one_qubit_constancy(state.field, basis);
  j["one_qubit_constancy"] = {{"aggregate_relative", oq.aggregate_relative}, {"labels", oq.labels}, {"ranges", oq.ranges}};
  const auto sym = time_reversal_residual(state.field, basis, symmetry_tolerance);
  j["time_reversal"] = {{"aggregate", sym.aggregate}, {"tolerance", sym.tolerance}, {"pass", sym.pass}, {"groups", sym.group_max}};
  const auto rev = time_reverse_solution(state.u_traj, state.v_traj, state.field, state.lambda_record, basis);
  j["time_reversal_transform"] = {{"schrodinger_residual_original", schrodinger_residual(state.u_traj, state.field, basis)},
                                  {"schrodinger_residual_reversed", schrodinger_residual(rev.u_traj, rev.field, basis)},
                                  {"reversed_initial_defect", max_abs(rev.u_traj.at(0) - CMatrix::Identity(basis.dim(), basis.dim()))}};
  if (state.field.slices() >= 3) {
    j["costate_commutator_residual"] = costate_commutator_residual(state, basis);
    if (n <= 4) {
      // Measure without the leakage gate, then report the gate separately so an
      // inconsistent state still yields its numbers.
      GradedOptions ungated;
      ungated.leakage_tolerance = std::numeric_limits<double>::infinity();
      const auto g = graded_residual(state, basis, ungated);
      j["graded"] = {{"leakage", g.leakage}, {"h1_rate", g.h1_rate}, {"h2_equation", g.h2_equation}, {"h2_rate", g.h2_rate},
                     {"leakage_tolerance", GradedOptions{}.leakage_tolerance}};
      if (g.leakage > GradedOptions{}.leakage_tolerance) j["graded"]["error"] = "decomposition-inconsistency";
    }
  }
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    const fs::path dir = output_path(out);
    fs::create_directories(dir);
    write_json(dir / "verify.json", j);
    write_symmetry_csv(dir / "time_reversal.csv", sym);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-optimal quantum control: Krotov solves, fidelity-time sweeps, fits and diagnostics"};
  app.require_subcommand(1);

  int basis_n = 1;
  std::string basis_out;
  auto* basis = app.add_subcommand("basis", "List the control generators for n qubits");
  basis->add_option("--n", basis_n, "Number of qubits")->required()->check(CLI::PositiveNumber);
  basis->add_option("--out", basis_out, "CSV output file (stdout if omitted)");

  std::string target_name = "qft", target_out;
  int target_n = 1;
  auto* target = app.add_subcommand("target", "Describe a target unitary, its optimal time and circuit");
  target->add_option("--name", target_name, "qft, asym, identity, w, cnot or swap");
  target->add_option("--n", target_n, "Number of qubits")->required()->check(CLI::PositiveNumber);
  target->add_option("--out", target_out, "JSON output file (stdout if omitted)");

  SolveArgs sa;
  std::uint64_t seed = 0;
  auto* solve_cmd = app.add_subcommand("solve", "Run one Krotov solve at a single T");
  solve_cmd->add_option("--config", sa.config, "JSON config (flags override its keys)");
  solve_cmd->add_option("--target", sa.target, "Target name");
  solve_cmd->add_option("--n", sa.n, "Number of qubits");
  solve_cmd->add_option("--T", sa.T, "Duration in units of T2max");
  solve_cmd->add_option("--M", sa.M, "Time slices (default from T)");
  auto* seed_opt = solve_cmd->add_option("--seed", seed, "RNG seed for the initial field");
  solve_cmd->add_option("--criteria", sa.criteria_json, "Convergence criteria as inline JSON");
  solve_cmd->add_option("--out", sa.out, "Output directory for record.json and the field");

  std::string sweep_config, sweep_out;
  bool sweep_resume = false, sweep_quiet = false;
  int sweep_jobs = 0;
  auto* sweep = app.add_subcommand("sweep", "Fidelity-time sweep with output recycling");
  sweep->add_option("--config", sweep_config, "Sweep plan JSON")->required();
  sweep->add_option("--out", sweep_out, "Output directory")->required();
  sweep->add_flag("--resume", sweep_resume, "Continue from the branch store in the output directory");
  sweep->add_option("--jobs", sweep_jobs, "Parallel solves (env QCT_JOBS)");
  sweep->add_flag("--quiet", sweep_quiet, "No progress log");

  std::string est_env, est_window = "0.002:0.01", est_out;
  auto* estimate = app.add_subcommand("estimate", "Fit 1-F = a(b-x)^c on a sweep envelope");
  estimate->add_option("--envelope", est_env, "envelope.csv from a sweep")->required();
  estimate->add_option("--window", est_window, "1-F window lo:hi");
  estimate->add_option("--out", est_out, "JSON output file (stdout if omitted)");

  std::string fit_model = "power", fit_in, fit_window = "0.002:0.01", fit_out;
  auto* fit = app.add_subcommand("fit", "Fit a model to x,y points");
  fit->add_option("--model", fit_model, "power, linear or exp2");
  fit->add_option("--in", fit_in, "CSV with x,y columns")->required();
  fit->add_option("--window", fit_window, "y window lo:hi (power model)");
  fit->add_option("--out", fit_out, "JSON output file (stdout if omitted)");

  std::string verify_record, verify_out;
  double verify_tol = 5e-2;
  auto* verify = app.add_subcommand("verify", "Run the structural diagnostics on a solve record");
  verify->add_option("--record", verify_record, "record.json written by solve")->required();
  verify->add_option("--out", verify_out, "Output directory (stdout if omitted)");
  verify->add_option("--symmetry-tolerance", verify_tol, "Time reversal tolerance relative to sqrt(N) omega");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (*basis) return cmd_basis(basis_n, basis_out);
    if (*target) return cmd_target(target_name, target_n, target_out);
    if (*solve_cmd) {
      if (*seed_opt) sa.seed = seed;
      return cmd_solve(sa);
    }
    if (*sweep) return cmd_sweep(sweep_config, sweep_out, sweep_resume, sweep_jobs, sweep_quiet);
    if (*estimate) return cmd_estimate(est_env, est_window, est_out);
    if (*fit) return cmd_fit(fit_model, fit_in, fit_window, fit_out);
    if (*verify) return cmd_verify(verify_record, verify_out, verify_tol);
  } catch (const InsufficientData& e) {
    std::cerr << "insufficient data: " << e.what() << '\n';
    return kExitInsufficient;
  } catch (const NoConvergence& e) {
    std::cerr << "no convergence: " << e.what() << '\n';
    return kExitNotConverged;
  } catch (const Json::exception& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  return kExitInvalid;
}
