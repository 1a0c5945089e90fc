#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bridge/pool.hpp"
#include "bridge/runtime.hpp"

namespace bridge {

// One line of the run ledger, in id space (pool-independent).
struct LedgerLine {
  Phase phase = Phase::init;
  int round = 0;
  int iteration = 0;
  std::vector<std::string> subset_ids;
  double metric = 0.0;
  std::optional<double> beta;
  std::uint64_t wallclock_ms = 0;

  bool operator==(const LedgerLine&) const = default;
};

std::string serialize_ledger_line(const LedgerLine& line);
LedgerLine parse_ledger_line(std::string_view text);

// Append-only run ledger. When opened for resume, the existing lines are
// handed back in order to the evaluation session instead of calling the
// evaluator again; a torn trailing line is discarded.
class RunLedger {
 public:
  // In-memory ledger, nothing persisted.
  RunLedger() = default;
  static RunLedger create(const std::filesystem::path& path);
  static RunLedger resume(const std::filesystem::path& path);

  RunLedger(RunLedger&&) = default;
  RunLedger& operator=(RunLedger&&) = default;

  // Next unconsumed line from a resumed file, if any.
  const LedgerLine* pending_replay() const;
  void consume_replay();
  std::size_t replay_remaining() const { return replay_.size() - cursor_; }

  void append(const LedgerLine& line);
  const std::vector<LedgerLine>& lines() const { return lines_; }
  bool persistent() const { return out_.has_value(); }

 private:
  std::optional<std::ofstream> out_;
  std::vector<LedgerLine> replay_;
  std::size_t cursor_ = 0;
  std::vector<LedgerLine> lines_;
};

// Routes every evaluation through the ledger: replays persisted results
// during resume, otherwise calls the evaluator and appends the record.
class EvaluationSession {
 public:
  explicit EvaluationSession(Evaluator& evaluator, RunLedger* ledger = nullptr,
                             bool record_timing = false);

  double evaluate(const ExamplePool& pool, const SubsetVector& subset, Phase phase,
                  int round, int iteration, std::optional<double> beta = std::nullopt);

  const std::vector<EvaluationRecord>& records() const { return records_; }
  std::size_t evaluator_calls() const { return calls_; }

 private:
  Evaluator& evaluator_;
  RunLedger* ledger_;
  bool record_timing_;
  std::vector<EvaluationRecord> records_;
  std::size_t calls_ = 0;
};

}  // namespace bridge
