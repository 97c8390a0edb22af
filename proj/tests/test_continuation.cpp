#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "qct/continuation.hpp"
#include "qct/records.hpp"
#include "qct/targets.hpp"

using namespace qct;
namespace fs = std::filesystem;

namespace {

SweepBranch branch(int id, std::vector<std::pair<double, double>> pts) {
  SweepBranch b;
  b.id = id;
  for (auto [x, f] : pts) {
    BranchRecord r;
    r.T_over_T2max = x;
    r.fidelity = f;
    r.converged = true;
    b.records.push_back(r);
  }
  return b;
}

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("qct_test_" + name);
  fs::remove_all(dir);
  return dir;
}

bool same_branches(const std::vector<SweepBranch>& a, const std::vector<SweepBranch>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].seed != b[i].seed || a[i].parent != b[i].parent || a[i].records.size() != b[i].records.size())
      return false;
    for (std::size_t k = 0; k < a[i].records.size(); ++k) {
      const auto& r = a[i].records[k];
      const auto& s = b[i].records[k];
      if (r.T_over_T2max != s.T_over_T2max || r.fidelity != s.fidelity || r.cycles != s.cycles ||
          r.field.values != s.field.values)
        return false;
    }
  }
  return true;
}

}  // namespace

TEST(RecycleField, Examples) {
  const auto b = enumerate_basis(2);
  const auto f = seed_random_field(TimeGrid(1.0, 30), b, 1);
  const auto same = recycle_field(f, 1.0);
  EXPECT_EQ(same.values, f.values);
  EXPECT_EQ(same.grid.T, 1.0);
  const auto doubled = recycle_field(f, 2.0);
  EXPECT_EQ(doubled.values, f.values);
  EXPECT_DOUBLE_EQ(doubled.grid.dt(), 2.0 * f.grid.dt());
  EXPECT_LT(doubled.normalization_defect(4), 1e-12);
  EXPECT_THROW(recycle_field(f, 0.0), InvalidArgument);
}

TEST(Envelope, SingleBranchHasNoCrossovers) {
  const auto env = envelope_of({branch(0, {{0.1, 0.5}, {0.2, 0.6}, {0.3, 0.7}})});
  ASSERT_EQ(env.entries.size(), 3u);
  EXPECT_EQ(env.entries[1].fidelity, 0.6);
  EXPECT_TRUE(env.crossovers.empty());
}

TEST(Envelope, OneIntersectionGivesOneCrossover) {
  const std::vector<SweepBranch> bs = {branch(0, {{0.1, 0.9}, {0.2, 0.8}, {0.3, 0.7}, {0.4, 0.6}}),
                                       branch(1, {{0.1, 0.5}, {0.2, 0.6}, {0.3, 0.75}, {0.4, 0.9}})};
  const auto env = envelope_of(bs);
  ASSERT_EQ(env.crossovers.size(), 1u);
  EXPECT_EQ(env.crossovers[0], 0.3);
  for (const auto& e : env.entries)
    for (const auto& b : bs)
      if (const auto* r = b.record_at(e.T_over_T2max)) { EXPECT_GE(e.fidelity, r->fidelity); }
  EXPECT_THROW(envelope_of({}), InvalidArgument);
}

TEST(Plan, Validation) {
  SweepPlan p;
  EXPECT_THROW(p.validate(), InvalidArgument);  // no T values
  p.T_values = {0.5, 0.4};
  EXPECT_THROW(p.validate(), InvalidArgument);
  p.T_values = {0.0, 0.4};
  EXPECT_THROW(p.validate(), InvalidArgument);
  p.T_values = {0.4, 0.5};
  EXPECT_NO_THROW(p.validate());
  EXPECT_EQ(p.slice_count(), default_slice_count(0.5 * kT2Max));
  EXPECT_EQ(parse_direction(direction_name(RecycleDirection::Down)), RecycleDirection::Down);
  EXPECT_THROW(parse_direction("sideways"), InvalidArgument);
}

TEST(DeriveSeed, DistinctAcrossIndices) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t t = 0; t < 20; ++t)
    for (std::uint64_t s = 0; s < 20; ++s) seen.insert(derive_seed(7, t, s));
  EXPECT_EQ(seen.size(), 400u);
  EXPECT_NE(derive_seed(7, 0, 0), derive_seed(8, 0, 0));
}

TEST(Sweep, SingleTGivesOneBranchPerSeed) {
  SweepPlan p;
  p.n = 1;
  p.target = "qft";
  p.T_values = {0.7};
  p.seeds_per_T = 3;
  const auto r = run_sweep(p);
  ASSERT_EQ(r.branches.size(), 3u);
  double best = 0.0;
  for (const auto& b : r.branches) best = std::max(best, b.records.at(0).fidelity);
  EXPECT_EQ(r.envelope.entries.at(0).fidelity, best);
}

TEST(Sweep, HadamardEnvelopeThresholdAndMonotonicity) {
  SweepPlan p;
  p.n = 1;
  p.target = "qft";
  p.T_values = {0.5, 0.6, 0.7, 0.8, 0.85, 0.92, 1.0, 1.1, 1.2};
  p.seeds_per_T = 2;
  p.master_seed = 3;
  const auto r = run_sweep(p);
  const auto& env = r.envelope.entries;
  ASSERT_EQ(env.size(), p.T_values.size());
  for (const auto& e : env) {
    if (e.T_over_T2max >= 0.92) { EXPECT_GT(e.fidelity, 0.999) << e.T_over_T2max; }
    if (e.T_over_T2max <= 0.85) { EXPECT_LT(e.fidelity, 1.0 - 1e-3) << e.T_over_T2max; }
  }
  for (std::size_t i = 1; i < env.size(); ++i) EXPECT_GE(env[i].fidelity, env[i - 1].fidelity - 1e-6);
  // Every recycled branch points at an existing parent.
  for (const auto& b : r.branches) {
    EXPECT_TRUE(b.seed.has_value() != b.parent.has_value());
    if (b.parent) { EXPECT_LT(*b.parent, static_cast<int>(r.branches.size())); }
    std::set<double> ts;
    for (const auto& rec : b.records) EXPECT_TRUE(ts.insert(rec.T_over_T2max).second);
  }
}

TEST(Sweep, DeterministicAndIndependentOfJobs) {
  SweepPlan p;
  p.n = 2;
  p.target = "cnot";
  p.T_values = {0.5, 0.55};
  p.seeds_per_T = 2;
  p.criteria.max_cycles = 40;
  p.master_seed = 9;
  const auto a = run_sweep(p);
  const auto b = run_sweep(p);
  p.jobs = 3;
  const auto c = run_sweep(p);
  EXPECT_TRUE(same_branches(a.branches, b.branches));
  EXPECT_TRUE(same_branches(a.branches, c.branches));
}

TEST(Sweep, StoreRoundTripAndResume) {
  SweepPlan p;
  p.n = 1;
  p.target = "qft";
  p.T_values = {0.6, 0.7, 0.8};
  p.seeds_per_T = 2;
  p.master_seed = 4;
  const auto dir = scratch_dir("store");
  SweepOptions opts;
  opts.store = dir;
  const auto full = run_sweep(p, opts);
  EXPECT_TRUE(fs::exists(dir / "index.json"));

  const auto loaded = load_store(dir, p);
  EXPECT_TRUE(same_branches(full.branches, loaded.branches));
  EXPECT_EQ(loaded.completed.size(), 5u);  // 3 upward + 2 downward steps

  // Simulate an interruption after the upward pass: the upward pass does not
  // depend on the direction setting, so an up-only run reproduces that state.
  SweepPlan up_only = p;
  up_only.direction = RecycleDirection::Up;
  fs::remove_all(dir);
  run_sweep(up_only, opts);
  save_store(dir, p, load_store(dir, up_only).branches, {"up:0", "up:1", "up:2"});
  opts.resume = true;
  const auto resumed = run_sweep(p, opts);
  EXPECT_TRUE(same_branches(full.branches, resumed.branches));

  SweepPlan other = p;
  other.master_seed = 5;
  EXPECT_THROW(load_store(dir, other), InvalidArgument);
  fs::remove_all(dir);
}

TEST(Sweep, EnvelopeCsvRoundTrip) {
  Envelope env;
  env.entries = {{0.5, 0.9, 0, true}, {0.6, 0.95, 1, false}, {0.7, 0.99, 1, true}};
  env.crossovers = {0.6};
  const auto dir = scratch_dir("envcsv");
  fs::create_directories(dir);
  write_envelope_csv(dir / "env.csv", env);
  const auto back = read_envelope_csv(dir / "env.csv");
  ASSERT_EQ(back.entries.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back.entries[i].T_over_T2max, env.entries[i].T_over_T2max);
    EXPECT_EQ(back.entries[i].fidelity, env.entries[i].fidelity);
    EXPECT_EQ(back.entries[i].branch_id, env.entries[i].branch_id);
    EXPECT_EQ(back.entries[i].converged, env.entries[i].converged);
  }
  EXPECT_EQ(back.crossovers, env.crossovers);
  fs::remove_all(dir);
}

TEST(Recycling, FewerCyclesThanFreshSeeds) {
  const auto b = enumerate_basis(2);
  const CMatrix target = qft_unitary(2).matrix;
  const ConvergenceCriteria c;
  const int M = default_slice_count(0.68 * kT2Max);
  std::vector<int> fresh, recycled;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto base = solve(target, b, seed_random_field(TimeGrid(0.66 * kT2Max, M), b, 50 + s), c);
    const auto re = solve(target, b, recycle_field(base.state.field, 0.68 * kT2Max), c);
    const auto fr = solve(target, b, seed_random_field(TimeGrid(0.68 * kT2Max, M), b, 80 + s), c);
    recycled.push_back(static_cast<int>(re.reports.size()));
    fresh.push_back(static_cast<int>(fr.reports.size()));
  }
  std::sort(fresh.begin(), fresh.end());
  std::sort(recycled.begin(), recycled.end());
  EXPECT_LT(recycled[5], fresh[5]);
}
