#pragma once

// Fidelity-time sweeps: fresh random seeds at every T plus "output recycling",
// where a converged field at one T seeds the solve at the neighbouring T. Each
// chain of recycled solves forms a branch; the envelope is the pointwise best.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qct/krotov.hpp"

namespace qct {

enum class RecycleDirection { Up, Down, Both };

const char* direction_name(RecycleDirection d);
RecycleDirection parse_direction(const std::string& s);

struct SweepPlan {
  std::string target = "qft";
  int n = 1;
  std::vector<double> T_values;  // units of T2max, strictly increasing
  int seeds_per_T = 8;
  bool recycle = true;
  RecycleDirection direction = RecycleDirection::Both;
  int max_recycled_per_T = 4;  // distinct best endpoints carried to the next T
  int slices = 0;              // 0: default_slice_count(max T), shared by all T
  std::uint64_t master_seed = 1;
  ConvergenceCriteria criteria;
  int jobs = 1;

  void validate() const;
  int slice_count() const;
};

struct BranchRecord {
  double T_over_T2max = 0.0;
  double fidelity = 0.0;
  bool converged = false;
  int cycles = 0;
  std::string field_file;  // stem relative to the store directory, empty in memory-only runs
  ControlField field;
};

struct SweepBranch {
  int id = 0;
  // Provenance: fresh branches carry the seed; recycled children carry the parent id.
  std::optional<std::uint64_t> seed;
  std::optional<int> parent;
  std::vector<BranchRecord> records;

  const BranchRecord* record_at(double T_over_T2max) const;
};

struct EnvelopeEntry {
  double T_over_T2max = 0.0;
  double fidelity = 0.0;
  int branch_id = -1;
  bool converged = false;
};

struct Envelope {
  std::vector<EnvelopeEntry> entries;  // increasing T
  std::vector<double> crossovers;      // T where the owning branch changes
};

/// Same coefficients and M, dt rescaled to T_new / M.
ControlField recycle_field(const ControlField& field, double T_new);

/// Pointwise max over all records, with branch attribution and crossovers.
Envelope envelope_of(const std::vector<SweepBranch>& branches);

struct SweepResult {
  std::vector<SweepBranch> branches;
  Envelope envelope;
};

struct SweepOptions {
  std::optional<std::filesystem::path> store;  // persist after every T when set
  bool resume = false;
  std::function<void(const std::string&)> log;
};

SweepResult run_sweep(const SweepPlan& plan, const SweepOptions& options = {});

/// Deterministic per-solve seed derived from the plan's master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t t_index, std::uint64_t seed_index);

// Branch store: <dir>/index.json plus <dir>/fields/<stem>.{csv,json} per record.
void save_store(const std::filesystem::path& dir, const SweepPlan& plan,
                const std::vector<SweepBranch>& branches, const std::vector<std::string>& completed);
struct LoadedStore {
  std::vector<SweepBranch> branches;
  std::vector<std::string> completed;
};
LoadedStore load_store(const std::filesystem::path& dir, const SweepPlan& plan);

void write_envelope_csv(const std::filesystem::path& file, const Envelope& env);
Envelope read_envelope_csv(const std::filesystem::path& file);

}  // namespace qct
