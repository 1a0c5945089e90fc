#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>

#include "bridge/config.hpp"
#include "bridge/orchestrator.hpp"

namespace bridge {

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;

// BRIDGE_OUT wins over the configured output_dir.
std::filesystem::path resolve_output_dir(const RunConfig& cfg);

// Evaluators, generator and embedder assembled from a RunConfig.
struct BackendSet {
  std::optional<SyntheticPopulation> population;
  std::unique_ptr<Evaluator> validation;
  std::unique_ptr<Evaluator> test;
  std::unique_ptr<Generator> generator;
  // Wrapped by `generator` when snapshots are replayed.
  std::unique_ptr<Generator> inner_generator;
  std::unique_ptr<Embedder> embedder;
  DatasetRefs data;

  Backends view();
};

// `pool_dir` (may be empty) holds pool snapshots that an external
// generator should serve from instead of regenerating.
BackendSet make_backends(const RunConfig& cfg, const std::filesystem::path& pool_dir = {});

struct OptimizeOptions {
  bool resume = false;
  std::optional<OptimizeSlot> slot;
};

int cmd_optimize(const std::filesystem::path& config, const OptimizeOptions& options,
                 std::ostream& out, std::ostream& err);
int cmd_baseline(const std::filesystem::path& config, OptimizeSlot slot, bool resume,
                 std::ostream& out, std::ostream& err);
int cmd_analyze(const std::filesystem::path& config, std::ostream& out, std::ostream& err);
int cmd_report(const std::filesystem::path& dir, std::ostream& out, std::ostream& err);

// Library entry points behind the commands; they throw instead of
// returning exit codes. run_optimize returns nullopt when resuming an
// already complete run.
std::optional<MilestoneLedger> run_optimize(const RunConfig& cfg,
                                            const std::filesystem::path& out_dir, bool resume,
                                            std::ostream& log);
void run_analyze(const RunConfig& cfg, const std::filesystem::path& out_dir,
                 std::ostream& log);

}  // namespace bridge
