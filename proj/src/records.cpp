#include "qct/records.hpp"

#include <cstdio>
#include <fstream>

namespace qct {

namespace {

const char* slice_update_name(SliceUpdate s) {
  switch (s) {
    case SliceUpdate::Exact: return "exact";
    case SliceUpdate::UpdateThenStep: return "update-then-step";
    case SliceUpdate::Midpoint: return "midpoint";
  }
  return "?";
}

SliceUpdate parse_slice_update(const std::string& s) {
  if (s == "exact") return SliceUpdate::Exact;
  if (s == "update-then-step") return SliceUpdate::UpdateThenStep;
  if (s == "midpoint") return SliceUpdate::Midpoint;
  throw InvalidArgument("unknown slice update: " + s);
}

}  // namespace

Json to_json(const ConvergenceCriteria& c) {
  return {
      {"max_cycles", c.max_cycles},
      {"fidelity_tolerance", c.fidelity_tolerance},
      {"stall_window", c.stall_window},
      {"lambda_rel_std_tolerance", c.lambda_rel_std_tolerance},
      {"lambda_guard", c.lambda_guard},
      {"slice_update", slice_update_name(c.slice_update)},
      {"midpoint_iterations", c.midpoint_iterations},
      {"slice_iterations", c.slice_iterations},
  };
}

ConvergenceCriteria criteria_from_json(const Json& j) {
  ConvergenceCriteria c;
  c.max_cycles = j.value("max_cycles", c.max_cycles);
  c.fidelity_tolerance = j.value("fidelity_tolerance", c.fidelity_tolerance);
  c.stall_window = j.value("stall_window", c.stall_window);
  c.lambda_rel_std_tolerance = j.value("lambda_rel_std_tolerance", c.lambda_rel_std_tolerance);
  c.lambda_guard = j.value("lambda_guard", c.lambda_guard);
  if (j.contains("slice_update")) c.slice_update = parse_slice_update(j.at("slice_update").get<std::string>());
  c.midpoint_iterations = j.value("midpoint_iterations", c.midpoint_iterations);
  c.slice_iterations = j.value("slice_iterations", c.slice_iterations);
  c.validate();
  return c;
}

Json to_json(const SweepPlan& p) {
  return {
      {"target", p.target},
      {"n", p.n},
      {"T_values", p.T_values},
      {"seeds_per_T", p.seeds_per_T},
      {"recycle", p.recycle},
      {"direction", direction_name(p.direction)},
      {"max_recycled_per_T", p.max_recycled_per_T},
      {"slices", p.slices},
      {"master_seed", p.master_seed},
      {"criteria", to_json(p.criteria)},
  };
}

SweepPlan plan_from_json(const Json& j) {
  SweepPlan p;
  p.target = j.at("target").get<std::string>();
  p.n = j.at("n").get<int>();
  if (j.contains("T_values")) {
    p.T_values = j.at("T_values").get<std::vector<double>>();
  } else if (j.contains("T_range")) {
    // {"from": x0, "to": x1, "step": dx}
    const auto& r = j.at("T_range");
    const double from = r.at("from").get<double>();
    const double to = r.at("to").get<double>();
    const double step = r.at("step").get<double>();
    if (!(step > 0.0)) throw InvalidArgument("T_range.step must be positive");
    for (int k = 0; from + k * step <= to + 1e-12; ++k) p.T_values.push_back(from + k * step);
  } else {
    throw InvalidArgument("plan needs T_values or T_range");
  }
  p.seeds_per_T = j.value("seeds_per_T", p.seeds_per_T);
  p.recycle = j.value("recycle", p.recycle);
  if (j.contains("direction")) p.direction = parse_direction(j.at("direction").get<std::string>());
  p.max_recycled_per_T = j.value("max_recycled_per_T", p.max_recycled_per_T);
  p.slices = j.value("slices", p.slices);
  if (!j.contains("master_seed")) throw InvalidArgument("plan needs an explicit master_seed");
  p.master_seed = j.at("master_seed").get<std::uint64_t>();
  if (j.contains("criteria")) p.criteria = criteria_from_json(j.at("criteria"));
  p.jobs = j.value("jobs", p.jobs);
  p.validate();
  return p;
}

Json to_json(const IterationReport& r) {
  return {
      {"cycle", r.cycle},
      {"fidelity_before", r.fidelity_before},
      {"fidelity_after", r.fidelity_after},
      {"monotonicity_violation", r.monotonicity_violation},
      {"violation_magnitude", r.violation_magnitude},
      {"lambda_mean", r.lambda_mean},
      {"lambda_rel_std", r.lambda_rel_std},
      {"degenerate_slices", r.degenerate_slices},
      {"wall_seconds", r.wall_seconds},
  };
}

Json to_json(const FitResult& f) {
  Json j = {
      {"model", model_name(f.model)},
      {"parameters", f.parameters},
      {"residual_sum_squares", f.residual_sum_squares},
      {"point_count", f.point_count},
      {"window", {f.window_low, f.window_high}},
      {"iterations", f.iterations},
      {"converged", f.converged},
  };
  switch (f.model) {
    case FitModel::Power:
      j["a"] = f.parameters[0];
      j["b"] = f.parameters[1];
      j["c"] = f.parameters[2];
      j["T_over_T2max_estimate"] = f.parameters[1];
      break;
    case FitModel::Linear:
      j["slope"] = f.parameters[0];
      j["intercept"] = f.parameters[1];
      break;
    case FitModel::Exp2:
      j["prefactor"] = f.parameters[0];
      j["rate"] = f.parameters[1];
      break;
  }
  return j;
}

std::string config_hash(const Json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : config.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void stamp_provenance(Json& record, const Json& config) {
  record["config_hash"] = config_hash(config);
  record["basis_ordering_version"] = kBasisOrderingVersion;
  record["T2max"] = kT2Max;
  record["time_unit"] = "T2max";
}

Json read_json(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw InvalidArgument("cannot read " + file.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InvalidArgument("malformed JSON in " + file.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& file, const Json& j) {
  std::ofstream out(file);
  if (!out) throw InvalidArgument("cannot write " + file.string());
  out << j.dump(2) << '\n';
}

}  // namespace qct
