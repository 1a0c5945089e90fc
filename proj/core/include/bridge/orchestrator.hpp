#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bridge/baselines.hpp"
#include "bridge/ledger.hpp"
#include "bridge/optimizer.hpp"
#include "bridge/runtime.hpp"

namespace bridge {

enum class OptimizeSlot { bo, rs, retrieval, diversity };
enum class Mode { standard, iterative_reinforced, restricted, mt };

std::string_view to_string(OptimizeSlot slot);
std::string_view to_string(Mode mode);
OptimizeSlot slot_from_string(std::string_view name);
Mode mode_from_string(std::string_view name);

struct BaselineConfig {
  TopK retrieval_k = 10;
  std::size_t diversity_k = 10;
};

struct OrchestratorConfig {
  int rounds = 3;
  OptimizerConfig optimizer;
  OptimizeSlot slot = OptimizeSlot::bo;
  Mode mode = Mode::standard;
  // Milestones that get a held-out evaluation and a ledger entry. Empty
  // means the default set: 1O, 1G, ..., (K-1)G, KO.
  std::vector<std::string> milestones;
  BaselineConfig baseline;

  void validate() const;
  std::vector<std::string> resolved_milestones() const;
};

// Canonical milestone order: 1O 1G 2O 2G ... (iterative-reinforced runs
// use bare round numbers).
std::vector<std::string> default_milestones(int rounds);
int milestone_rank(std::string_view milestone);

// Train / validation / unlabeled handles. Validation may alias train.
struct DatasetRefs {
  std::vector<Example> train;
  std::vector<Example> validation;
  std::vector<Example> unlabeled;
  // Used instead of an initial generate call when present.
  std::optional<ExamplePool> initial_pool;
};

struct Backends {
  Evaluator& validation;
  Generator& generator;
  // Held-out evaluator for milestone metrics; never used to optimize.
  Evaluator* test = nullptr;
  Embedder* embedder = nullptr;
};

struct MilestoneEntry {
  int round = 0;
  std::string milestone;
  std::vector<std::string> subset_ids;
  std::string pool_path;
  std::optional<double> metric;

  bool operator==(const MilestoneEntry&) const = default;
};

class RunStore {
 public:
  virtual ~RunStore() = default;
  // Persists the pool of `round`; returns the path recorded in the ledger.
  virtual std::string save_pool(int round, const ExamplePool& pool) = 0;
  virtual void save_milestone(const MilestoneEntry& entry) = 0;
};

struct RunContext {
  RunLedger* ledger = nullptr;
  RunStore* store = nullptr;
  bool record_timing = false;
};

struct RoundArtifacts {
  int round = 0;
  // Indexes the pool the optimize step ran on (E_{k-1}); empty for
  // iterative-reinforced runs.
  SubsetVector e_star;
  std::vector<std::string> e_star_ids;
  std::optional<ExamplePool> pool;
};

struct RunStats {
  std::size_t optimize_evaluations = 0;
  std::size_t milestone_evaluations = 0;
  std::size_t optimize_calls = 0;
  std::size_t generate_calls = 0;
};

struct MilestoneLedger {
  ExamplePool pool0;
  std::vector<RoundArtifacts> rounds;
  std::vector<MilestoneEntry> entries;
  RunStats stats;

  const MilestoneEntry* find(std::string_view milestone) const;
  // Highest metric among evaluated entries; earliest wins ties.
  const MilestoneEntry* best() const;
};

MilestoneLedger run_bridge(const OrchestratorConfig& cfg, const DatasetRefs& data,
                           const Backends& backends, const RunContext& ctx = {});
MilestoneLedger run_iterative_reinforced(const OrchestratorConfig& cfg,
                                         const DatasetRefs& data, const Backends& backends,
                                         const RunContext& ctx = {});
MilestoneLedger run_restricted(const OrchestratorConfig& cfg, const DatasetRefs& data,
                               const Backends& backends, const RunContext& ctx = {});
MilestoneLedger run_mt(const OrchestratorConfig& cfg, const DatasetRefs& data,
                       const Backends& backends, const RunContext& ctx = {});
// Dispatches on cfg.mode.
MilestoneLedger run(const OrchestratorConfig& cfg, const DatasetRefs& data,
                    const Backends& backends, const RunContext& ctx = {});

// Serves persisted pools instead of regenerating them, so a resumed run
// with an external generator does not repeat generate calls.
class ReplayingGenerator final : public Generator {
 public:
  using Lookup = std::function<std::optional<ExamplePool>(int round)>;
  ReplayingGenerator(Generator& inner, Lookup lookup)
      : inner_(inner), lookup_(std::move(lookup)) {}
  ExamplePool generate(const GenerateRequest& request) override;

 private:
  Generator& inner_;
  Lookup lookup_;
};

}  // namespace bridge
