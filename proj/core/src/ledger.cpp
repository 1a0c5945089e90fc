#include "bridge/ledger.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "bridge/error.hpp"

namespace bridge {

namespace {

const char* const kLedgerFields[] = {"phase",  "round", "iteration",  "subset_ids",
                                     "metric", "beta",  "wallclock_ms"};

std::string describe(const LedgerLine& l) {
  return std::string(to_string(l.phase)) + " round " + std::to_string(l.round) +
         " iteration " + std::to_string(l.iteration);
}

}  // namespace

std::string serialize_ledger_line(const LedgerLine& l) {
  nlohmann::ordered_json j;
  j["phase"] = to_string(l.phase);
  j["round"] = l.round;
  j["iteration"] = l.iteration;
  j["subset_ids"] = l.subset_ids;
  j["metric"] = l.metric;
  j["beta"] = l.beta ? nlohmann::ordered_json(*l.beta) : nlohmann::ordered_json(nullptr);
  j["wallclock_ms"] = l.wallclock_ms;
  return j.dump();
}

LedgerLine parse_ledger_line(std::string_view text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("ledger line: ") + e.what());
  }
  if (!j.is_object() || j.size() != std::size(kLedgerFields)) {
    throw ParseError("ledger line: unexpected field set");
  }
  for (const char* f : kLedgerFields) {
    if (!j.contains(f)) throw ParseError(std::string("ledger line: missing \"") + f + "\"");
  }
  try {
    LedgerLine l;
    l.phase = phase_from_string(j["phase"].get<std::string>());
    l.round = j["round"].get<int>();
    l.iteration = j["iteration"].get<int>();
    l.subset_ids = j["subset_ids"].get<std::vector<std::string>>();
    l.metric = j["metric"].get<double>();
    if (!j["beta"].is_null()) l.beta = j["beta"].get<double>();
    l.wallclock_ms = j["wallclock_ms"].get<std::uint64_t>();
    return l;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("ledger line: ") + e.what());
  }
}

RunLedger RunLedger::create(const std::filesystem::path& path) {
  RunLedger ledger;
  ledger.out_.emplace(path, std::ios::binary | std::ios::trunc);
  if (!*ledger.out_) throw Error("cannot create ledger " + path.string());
  return ledger;
}

RunLedger RunLedger::resume(const std::filesystem::path& path) {
  RunLedger ledger;
  std::string content;
  if (std::filesystem::exists(path)) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    content = buf.str();
  }
  std::size_t keep = 0;
  std::size_t start = 0;
  while (start < content.size()) {
    const auto end = content.find('\n', start);
    if (end == std::string::npos) break;  // torn write
    ledger.replay_.push_back(parse_ledger_line(std::string_view(content).substr(start, end - start)));
    start = end + 1;
    keep = start;
  }
  if (keep != content.size()) std::filesystem::resize_file(path, keep);
  ledger.out_.emplace(path, std::ios::binary | std::ios::app);
  if (!*ledger.out_) throw Error("cannot open ledger " + path.string());
  return ledger;
}

const LedgerLine* RunLedger::pending_replay() const {
  return cursor_ < replay_.size() ? &replay_[cursor_] : nullptr;
}

void RunLedger::consume_replay() {
  if (cursor_ >= replay_.size()) throw Error("ledger: nothing to replay");
  lines_.push_back(replay_[cursor_++]);
}

void RunLedger::append(const LedgerLine& line) {
  if (replay_remaining() > 0) throw Error("ledger: append while replay is pending");
  lines_.push_back(line);
  if (out_) {
    *out_ << serialize_ledger_line(line) << '\n';
    out_->flush();
    if (!*out_) throw Error("ledger: write failed");
  }
}

EvaluationSession::EvaluationSession(Evaluator& evaluator, RunLedger* ledger,
                                     bool record_timing)
    : evaluator_(evaluator), ledger_(ledger), record_timing_(record_timing) {}

double EvaluationSession::evaluate(const ExamplePool& pool, const SubsetVector& subset,
                                   Phase phase, int round, int iteration,
                                   std::optional<double> beta) {
  LedgerLine line;
  line.phase = phase;
  line.round = round;
  line.iteration = iteration;
  line.subset_ids = ids_of(pool, subset);
  line.beta = beta;

  EvaluationRecord record;
  record.subset = subset;
  record.phase = phase;
  record.round = round;
  record.iteration = iteration;
  record.beta = beta;

  if (ledger_ != nullptr) {
    if (const auto* replay = ledger_->pending_replay()) {
      line.metric = replay->metric;
      line.wallclock_ms = replay->wallclock_ms;
      if (!(line == *replay)) {
        throw Error("resume mismatch at " + describe(line) + ": ledger holds " +
                    describe(*replay));
      }
      ledger_->consume_replay();
      record.metric = replay->metric;
      record.wallclock_ms = replay->wallclock_ms;
      records_.push_back(std::move(record));
      return records_.back().metric;
    }
  }

  const auto t0 = std::chrono::steady_clock::now();
  double metric = 0.0;
  try {
    ++calls_;
    metric = evaluator_.evaluate(pool, subset, EvalContext{phase, round, iteration});
  } catch (const std::exception& e) {
    std::string ids;
    for (const auto& id : line.subset_ids) ids += (ids.empty() ? "" : ",") + id;
    const std::string msg =
        "evaluation failed at " + describe(line) + " for subset {" + ids + "}: " + e.what();
    if (dynamic_cast<const TimeoutError*>(&e)) throw TimeoutError(msg);
    if (dynamic_cast<const ProtocolError*>(&e)) throw ProtocolError(msg);
    throw Error(msg);
  }
  if (!std::isfinite(metric)) {
    throw Error("evaluator returned a non-finite metric at " + describe(line));
  }
  const auto elapsed = std::chrono::steady_clock::now() - t0;
  line.metric = metric;
  if (record_timing_) {
    line.wallclock_ms = static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count());
  }
  if (ledger_ != nullptr) ledger_->append(line);
  record.metric = metric;
  record.wallclock_ms = line.wallclock_ms;
  records_.push_back(std::move(record));
  return metric;
}

}  // namespace bridge
