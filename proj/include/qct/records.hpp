#pragma once

// JSON forms of configs, plans, reports and fits; provenance stamping.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "qct/continuation.hpp"
#include "qct/fitting.hpp"
#include "qct/krotov.hpp"

namespace qct {

using Json = nlohmann::json;

Json to_json(const ConvergenceCriteria& c);
ConvergenceCriteria criteria_from_json(const Json& j);

Json to_json(const SweepPlan& p);
SweepPlan plan_from_json(const Json& j);

Json to_json(const IterationReport& r);
Json to_json(const FitResult& f);

/// FNV-1a over the canonical (key-sorted, compact) dump.
std::string config_hash(const Json& config);

/// Adds config hash, basis ordering version and T2max to a record.
void stamp_provenance(Json& record, const Json& config);

Json read_json(const std::filesystem::path& file);
void write_json(const std::filesystem::path& file, const Json& j);

}  // namespace qct
