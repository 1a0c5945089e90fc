#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bridge/orchestrator.hpp"

namespace bridge {

// One line of milestones.jsonl.
struct MilestoneRecord {
  std::string config_hash;
  std::uint64_t seed = 0;
  MilestoneEntry entry;
};

nlohmann::ordered_json to_json(const MilestoneRecord& record);
MilestoneRecord milestone_record_from_json(const nlohmann::ordered_json& j);
std::vector<MilestoneRecord> load_milestones(const std::filesystem::path& path);

enum class Rank { none, best, second };

struct MilestoneSummary {
  std::string milestone;
  std::size_t runs = 0;
  double mean = 0.0;
  // Sample standard deviation; 0 for a single run.
  double stdev = 0.0;
  Rank rank = Rank::none;
};

struct Report {
  std::string config_hash;
  std::vector<std::uint64_t> seeds;
  // Canonical milestone order; only milestones present in the ledgers.
  std::vector<MilestoneSummary> columns;
  std::vector<std::string> notes;
};

// One entry per run. Throws if the runs disagree on config hash.
Report aggregate_milestones(const std::vector<std::vector<MilestoneRecord>>& runs);

// Collects every milestones.jsonl under `dir` (the directory itself included).
Report build_report(const std::filesystem::path& dir);

std::string format_report(const Report& report);
std::string report_csv(const Report& report);

}  // namespace bridge
