#include "qct/continuation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <iomanip>
#include <map>
#include <sstream>

#include "qct/records.hpp"
#include "qct/targets.hpp"

namespace qct {

const char* direction_name(RecycleDirection d) {
  switch (d) {
    case RecycleDirection::Up: return "up";
    case RecycleDirection::Down: return "down";
    case RecycleDirection::Both: return "both";
  }
  return "?";
}

RecycleDirection parse_direction(const std::string& s) {
  if (s == "up") return RecycleDirection::Up;
  if (s == "down") return RecycleDirection::Down;
  if (s == "both") return RecycleDirection::Both;
  throw InvalidArgument("unknown recycling direction: " + s);
}

void SweepPlan::validate() const {
  if (n < 1) throw InvalidArgument("plan: n must be >= 1");
  if (T_values.empty()) throw InvalidArgument("plan: no T values");
  for (std::size_t i = 0; i < T_values.size(); ++i) {
    if (!(T_values[i] > 0.0)) throw InvalidArgument("plan: T values must be positive");
    if (i > 0 && !(T_values[i] > T_values[i - 1]))
      throw InvalidArgument("plan: T values must be strictly increasing");
  }
  if (seeds_per_T < 0) throw InvalidArgument("plan: seeds_per_T must be >= 0");
  if (max_recycled_per_T < 1) throw InvalidArgument("plan: max_recycled_per_T must be >= 1");
  if (slices < 0) throw InvalidArgument("plan: slices must be >= 0");
  if (jobs < 1) throw InvalidArgument("plan: jobs must be >= 1");
  criteria.validate();
}

int SweepPlan::slice_count() const {
  return slices > 0 ? slices : default_slice_count(T_values.back() * kT2Max);
}

const BranchRecord* SweepBranch::record_at(double x) const {
  for (const auto& r : records)
    if (r.T_over_T2max == x) return &r;
  return nullptr;
}

ControlField recycle_field(const ControlField& field, double T_new) {
  if (!(T_new > 0.0)) throw InvalidArgument("recycle_field: T must be positive");
  ControlField out = field;
  out.grid = TimeGrid(T_new, field.grid.M);
  return out;
}

Envelope envelope_of(const std::vector<SweepBranch>& branches) {
  std::map<double, EnvelopeEntry> best;
  for (const auto& b : branches) {
    for (const auto& r : b.records) {
      auto [it, fresh] = best.try_emplace(r.T_over_T2max,
                                          EnvelopeEntry{r.T_over_T2max, r.fidelity, b.id, r.converged});
      if (!fresh && r.fidelity > it->second.fidelity)
        it->second = {r.T_over_T2max, r.fidelity, b.id, r.converged};
    }
  }
  if (best.empty()) throw InvalidArgument("envelope_of: no branch records");
  Envelope env;
  for (const auto& [x, e] : best) {
    if (!env.entries.empty() && env.entries.back().branch_id != e.branch_id) env.crossovers.push_back(x);
    env.entries.push_back(e);
  }
  return env;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t t_index, std::uint64_t seed_index) {
  // splitmix64 finalizer over a mixed key
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (t_index * 1000003ULL + seed_index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

struct Task {
  ControlField start;
  int branch = -1;  // existing branch to extend; -1 for a new branch
  std::optional<std::uint64_t> seed;
  std::optional<int> parent;
};

std::string field_stem(int branch, std::size_t t_index) {
  std::ostringstream s;
  s << "fields/b" << std::setw(4) << std::setfill('0') << branch << "_t" << std::setw(3) << t_index;
  return s.str();
}

// Best distinct records at T: sorted by fidelity, duplicates (same local optimum
// reached from different starts) dropped.
std::vector<std::pair<int, const BranchRecord*>> sources_at(const std::vector<SweepBranch>& branches,
                                                            double x, int limit) {
  std::vector<std::pair<int, const BranchRecord*>> all;
  for (std::size_t b = 0; b < branches.size(); ++b)
    if (const auto* r = branches[b].record_at(x)) all.emplace_back(static_cast<int>(b), r);
  std::stable_sort(all.begin(), all.end(),
                   [](const auto& l, const auto& r) { return l.second->fidelity > r.second->fidelity; });
  std::vector<std::pair<int, const BranchRecord*>> picked;
  for (const auto& cand : all) {
    const bool dup = std::any_of(picked.begin(), picked.end(), [&](const auto& p) {
      return std::abs(p.second->fidelity - cand.second->fidelity) < 1e-9;
    });
    if (!dup) picked.push_back(cand);
    if (static_cast<int>(picked.size()) >= limit) break;
  }
  return picked;
}

}  // namespace

SweepResult run_sweep(const SweepPlan& plan, const SweepOptions& options) {
  plan.validate();
  const auto basis = enumerate_basis(plan.n);
  const auto target = make_target(plan.target, plan.n);
  const int M = plan.slice_count();
  const auto& xs = plan.T_values;
  auto log = [&](const std::string& msg) {
    if (options.log) options.log(msg);
  };

  std::vector<SweepBranch> branches;
  std::vector<std::string> completed;
  if (options.store && options.resume && std::filesystem::exists(*options.store / "index.json")) {
    auto loaded = load_store(*options.store, plan);
    branches = std::move(loaded.branches);
    completed = std::move(loaded.completed);
    log("resumed " + std::to_string(completed.size()) + " completed steps");
  }
  auto done = [&](const std::string& step) {
    return std::find(completed.begin(), completed.end(), step) != completed.end();
  };

  auto run_step = [&](const std::string& step, std::size_t t_index, std::vector<Task> tasks) {
    const double x = xs[t_index];
    std::vector<SolveResult> results(tasks.size());
    for (std::size_t first = 0; first < tasks.size(); first += plan.jobs) {
      const std::size_t last = std::min(tasks.size(), first + static_cast<std::size_t>(plan.jobs));
      std::vector<std::future<SolveResult>> running;
      for (std::size_t k = first; k < last; ++k)
        running.push_back(std::async(plan.jobs > 1 ? std::launch::async : std::launch::deferred,
                                     [&, k] { return solve(target.matrix, basis, tasks[k].start, plan.criteria); }));
      for (std::size_t k = first; k < last; ++k) results[k] = running[k - first].get();
    }
    // Appending happens in task order so the branch set does not depend on jobs.
    for (std::size_t k = 0; k < tasks.size(); ++k) {
      auto& task = tasks[k];
      int b = task.branch;
      if (b < 0 || branches[b].record_at(x)) {
        SweepBranch nb;
        nb.id = static_cast<int>(branches.size());
        nb.seed = task.seed;
        nb.parent = task.branch >= 0 ? std::optional<int>(task.branch) : task.parent;
        branches.push_back(std::move(nb));
        b = static_cast<int>(branches.size()) - 1;
      }
      BranchRecord rec;
      rec.T_over_T2max = x;
      rec.fidelity = results[k].state.fidelity;
      rec.converged = results[k].converged;
      rec.cycles = static_cast<int>(results[k].reports.size());
      rec.field = std::move(results[k].state.field);
      if (options.store) rec.field_file = field_stem(b, t_index);
      std::ostringstream msg;
      msg << step << " T/T2max=" << x << " branch " << b << " F=" << std::setprecision(12)
          << rec.fidelity << (rec.converged ? "" : " (not converged)") << " cycles=" << rec.cycles;
      log(msg.str());
      branches[b].records.push_back(std::move(rec));
    }
    completed.push_back(step);
    if (options.store) save_store(*options.store, plan, branches, completed);
  };

  const bool up = plan.recycle && plan.direction != RecycleDirection::Down;
  const bool down = plan.recycle && plan.direction != RecycleDirection::Up;

  for (std::size_t i = 0; i < xs.size(); ++i) {
    const std::string step = "up:" + std::to_string(i);
    if (done(step)) continue;
    const TimeGrid grid(xs[i] * kT2Max, M);
    std::vector<Task> tasks;
    for (int s = 0; s < plan.seeds_per_T; ++s) {
      const auto seed = derive_seed(plan.master_seed, i, static_cast<std::uint64_t>(s));
      tasks.push_back({seed_random_field(grid, basis, seed), -1, seed, std::nullopt});
    }
    if (up && i > 0)
      for (const auto& [b, rec] : sources_at(branches, xs[i - 1], plan.max_recycled_per_T))
        tasks.push_back({recycle_field(rec->field, grid.T), b, std::nullopt, std::nullopt});
    run_step(step, i, std::move(tasks));
  }
  if (down) {
    for (std::size_t i = xs.size() - 1; i-- > 0;) {
      const std::string step = "down:" + std::to_string(i);
      if (done(step)) continue;
      std::vector<Task> tasks;
      for (const auto& [b, rec] : sources_at(branches, xs[i + 1], plan.max_recycled_per_T))
        tasks.push_back({recycle_field(rec->field, xs[i] * kT2Max), b, std::nullopt, std::nullopt});
      run_step(step, i, std::move(tasks));
    }
  }

  SweepResult out;
  out.envelope = envelope_of(branches);
  out.branches = std::move(branches);
  return out;
}

void save_store(const std::filesystem::path& dir, const SweepPlan& plan,
                const std::vector<SweepBranch>& branches, const std::vector<std::string>& completed) {
  std::filesystem::create_directories(dir / "fields");
  const auto basis = enumerate_basis(plan.n);
  Json index;
  index["plan"] = to_json(plan);
  stamp_provenance(index, to_json(plan));
  index["completed"] = completed;
  Json jb = Json::array();
  for (const auto& b : branches) {
    Json rec = Json::array();
    for (const auto& r : b.records) {
      if (r.field_file.empty()) throw InvalidArgument("save_store: record without a field file name");
      if (!std::filesystem::exists(dir / (r.field_file + ".csv"))) write_field(dir / r.field_file, r.field, basis);
      rec.push_back({{"T_over_T2max", r.T_over_T2max},
                     {"fidelity", r.fidelity},
                     {"converged", r.converged},
                     {"cycles", r.cycles},
                     {"field", r.field_file}});
    }
    Json entry = {{"id", b.id}, {"records", rec}};
    entry["seed"] = b.seed ? Json(*b.seed) : Json(nullptr);
    entry["parent"] = b.parent ? Json(*b.parent) : Json(nullptr);
    jb.push_back(entry);
  }
  index["branches"] = jb;
  // Write then rename so an interrupted run never leaves a truncated index.
  write_json(dir / "index.json.tmp", index);
  std::filesystem::rename(dir / "index.json.tmp", dir / "index.json");
}

LoadedStore load_store(const std::filesystem::path& dir, const SweepPlan& plan) {
  const Json index = read_json(dir / "index.json");
  if (index.at("config_hash").get<std::string>() != config_hash(to_json(plan)))
    throw InvalidArgument("branch store was written by a different plan: " + dir.string());
  const auto basis = enumerate_basis(plan.n);
  LoadedStore out;
  out.completed = index.at("completed").get<std::vector<std::string>>();
  for (const auto& jb : index.at("branches")) {
    SweepBranch b;
    b.id = jb.at("id").get<int>();
    if (!jb.at("seed").is_null()) b.seed = jb.at("seed").get<std::uint64_t>();
    if (!jb.at("parent").is_null()) b.parent = jb.at("parent").get<int>();
    for (const auto& jr : jb.at("records")) {
      BranchRecord r;
      r.T_over_T2max = jr.at("T_over_T2max").get<double>();
      r.fidelity = jr.at("fidelity").get<double>();
      r.converged = jr.at("converged").get<bool>();
      r.cycles = jr.at("cycles").get<int>();
      r.field_file = jr.at("field").get<std::string>();
      r.field = read_field(dir / r.field_file, basis);
      b.records.push_back(std::move(r));
    }
    out.branches.push_back(std::move(b));
  }
  for (const auto& b : out.branches)
    if (b.parent && (*b.parent < 0 || *b.parent >= static_cast<int>(out.branches.size())))
      throw InvalidArgument("branch store: dangling parent reference");
  return out;
}

void write_envelope_csv(const std::filesystem::path& file, const Envelope& env) {
  std::ofstream out(file);
  if (!out) throw InvalidArgument("cannot write " + file.string());
  out << "T_over_T2max,best_fidelity,branch_id,converged\n" << std::setprecision(17);
  for (const auto& e : env.entries)
    out << e.T_over_T2max << ',' << e.fidelity << ',' << e.branch_id << ',' << (e.converged ? 1 : 0) << '\n';
}

Envelope read_envelope_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw InvalidArgument("cannot read " + file.string());
  std::string line;
  std::getline(in, line);
  Envelope env;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    EnvelopeEntry e;
    std::getline(row, cell, ',');
    e.T_over_T2max = std::stod(cell);
    std::getline(row, cell, ',');
    e.fidelity = std::stod(cell);
    std::getline(row, cell, ',');
    e.branch_id = std::stoi(cell);
    e.converged = true;
    if (std::getline(row, cell, ',')) e.converged = std::stoi(cell) != 0;
    if (!env.entries.empty() && env.entries.back().branch_id != e.branch_id)
      env.crossovers.push_back(e.T_over_T2max);
    env.entries.push_back(e);
  }
  return env;
}

}  // namespace qct
