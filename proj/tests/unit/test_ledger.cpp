#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "../support/fixtures.hpp"
#include "bridge/commands.hpp"
#include "bridge/error.hpp"
#include "bridge/ledger.hpp"

namespace bridge {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("bridge_ledger_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

LedgerLine sample_line() {
  LedgerLine l;
  l.phase = Phase::bo;
  l.round = 2;
  l.iteration = 17;
  l.subset_ids = {"ex1", "ex4#r1"};
  l.metric = 0.625;
  l.beta = 0.4;
  return l;
}

TEST(LedgerLine, RoundTrip) {
  const auto l = sample_line();
  const auto text = serialize_ledger_line(l);
  EXPECT_EQ(text,
            R"({"phase":"bo","round":2,"iteration":17,"subset_ids":["ex1","ex4#r1"],)"
            R"("metric":0.625,"beta":0.4,"wallclock_ms":0})");
  EXPECT_EQ(parse_ledger_line(text), l);
  auto init = l;
  init.phase = Phase::init;
  init.beta.reset();
  EXPECT_EQ(parse_ledger_line(serialize_ledger_line(init)), init);
}

TEST(LedgerLine, StrictParsing) {
  const std::string good = serialize_ledger_line(sample_line());
  EXPECT_THROW(parse_ledger_line(good.substr(0, good.size() - 1)), ParseError);
  EXPECT_THROW(parse_ledger_line(R"({"phase":"bo"})"), ParseError);
  auto extra = nlohmann::ordered_json::parse(good);
  extra["extra"] = 1;
  EXPECT_THROW(parse_ledger_line(extra.dump()), ParseError);
  auto bad_phase = nlohmann::ordered_json::parse(good);
  bad_phase["phase"] = "warmup";
  EXPECT_THROW(parse_ledger_line(bad_phase.dump()), Error);
  auto bad_type = nlohmann::ordered_json::parse(good);
  bad_type["metric"] = "0.6";
  EXPECT_THROW(parse_ledger_line(bad_type.dump()), ParseError);
}

TEST(Ledger, TornTailIsDiscarded) {
  const auto dir = scratch("torn");
  const auto path = dir / "ledger.jsonl";
  const auto full = serialize_ledger_line(sample_line()) + "\n";
  {
    std::ofstream out(path, std::ios::binary);
    out << full << full.substr(0, 20);
  }
  auto ledger = RunLedger::resume(path);
  EXPECT_EQ(ledger.replay_remaining(), 1u);
  EXPECT_EQ(slurp(path), full);
  fs::remove_all(dir);
}

TEST(Ledger, ResumeReplaysWithoutCallingEvaluator) {
  const auto dir = scratch("replay");
  const auto path = dir / "ledger.jsonl";
  const auto pool = fixture::plain_pool(4);
  fixture::FnEvaluator ev([](const SubsetVector& s) { return 0.1 * s.cardinality(); });
  {
    auto ledger = RunLedger::create(path);
    EvaluationSession session(ev, &ledger);
    session.evaluate(pool, SubsetVector::from_string("1100"), Phase::init, 1, 1);
    session.evaluate(pool, SubsetVector::from_string("1110"), Phase::bo, 1, 2, 0.5);
  }
  EXPECT_EQ(ev.calls, 2);
  auto ledger = RunLedger::resume(path);
  EvaluationSession session(ev, &ledger);
  EXPECT_DOUBLE_EQ(session.evaluate(pool, SubsetVector::from_string("1100"), Phase::init, 1, 1),
                   0.2);
  EXPECT_DOUBLE_EQ(
      session.evaluate(pool, SubsetVector::from_string("1110"), Phase::bo, 1, 2, 0.5), 0.3);
  EXPECT_EQ(ev.calls, 2);
  EXPECT_EQ(session.evaluator_calls(), 0u);
  session.evaluate(pool, SubsetVector::from_string("1111"), Phase::bo, 1, 3, 0.5);
  EXPECT_EQ(ev.calls, 3);
  EXPECT_EQ(ledger.lines().size(), 3u);
  fs::remove_all(dir);
}

TEST(Ledger, ReplayMismatchIsAnError) {
  const auto dir = scratch("mismatch");
  const auto path = dir / "ledger.jsonl";
  const auto pool = fixture::plain_pool(4);
  fixture::FnEvaluator ev([](const SubsetVector&) { return 0.5; });
  {
    auto ledger = RunLedger::create(path);
    EvaluationSession session(ev, &ledger);
    session.evaluate(pool, SubsetVector::from_string("1100"), Phase::init, 1, 1);
  }
  auto ledger = RunLedger::resume(path);
  EvaluationSession session(ev, &ledger);
  try {
    session.evaluate(pool, SubsetVector::from_string("0011"), Phase::init, 1, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("resume mismatch"), std::string::npos);
  }
  fs::remove_all(dir);
}

TEST(Ledger, TimingOnlyWhenRequested) {
  const auto pool = fixture::plain_pool(3);
  fixture::FnEvaluator ev([](const SubsetVector&) { return 0.5; });
  RunLedger ledger;
  EvaluationSession session(ev, &ledger);
  session.evaluate(pool, SubsetVector::from_string("100"), Phase::init, 1, 1);
  EXPECT_EQ(ledger.lines().back().wallclock_ms, 0u);
}

TEST(Ledger, NonFiniteMetricRejected) {
  const auto pool = fixture::plain_pool(3);
  fixture::FnEvaluator ev([](const SubsetVector&) { return std::nan(""); });
  RunLedger ledger;
  EvaluationSession session(ev, &ledger);
  EXPECT_THROW(session.evaluate(pool, SubsetVector::from_string("100"), Phase::init, 1, 1),
               Error);
  EXPECT_TRUE(ledger.lines().empty());
}

// Counts calls that reach the wrapped evaluator.
class Counting final : public Evaluator {
 public:
  Counting(Evaluator& inner, std::size_t& calls) : inner_(inner), calls_(calls) {}
  double evaluate(const ExamplePool& pool, const SubsetVector& subset,
                  const EvalContext& ctx) override {
    ++calls_;
    return inner_.evaluate(pool, subset, ctx);
  }

 private:
  Evaluator& inner_;
  std::size_t& calls_;
};

RunConfig small_config() {
  RunConfig cfg;
  cfg.seed = 11;
  cfg.orchestrator.rounds = 2;
  cfg.orchestrator.optimizer.n_eval = 6;
  cfg.orchestrator.optimizer.n_starts = 2;
  cfg.population.size = 8;
  cfg.evaluator.noise_sd = 0.05;
  cfg.test_evaluator = EvaluatorSpec{};
  cfg.test_evaluator->noise_sd = 0.05;
  cfg.orchestrator.optimizer.seed = cfg.seed;
  return cfg;
}

struct Outcome {
  std::string ledger;
  std::vector<MilestoneEntry> entries;
  std::size_t calls = 0;
};

Outcome run_with(const RunConfig& cfg, RunLedger ledger, const fs::path& path) {
  auto backends = make_backends(cfg);
  Outcome o;
  Counting val(*backends.validation, o.calls);
  Counting test(*backends.test, o.calls);
  Backends view{val, *backends.generator, &test, nullptr};
  RunContext ctx{&ledger, nullptr, false};
  const auto result = run(cfg.orchestrator, backends.data, view, ctx);
  EXPECT_EQ(ledger.replay_remaining(), 0u);
  o.entries = result.entries;
  o.ledger = slurp(path);
  return o;
}

TEST(Ledger, KillAndResumeAtEveryLine) {
  const auto dir = scratch("kill");
  const auto path = dir / "ledger.jsonl";
  const auto cfg = small_config();
  const auto reference = run_with(cfg, RunLedger::create(path), path);
  std::vector<std::string> lines;
  {
    std::istringstream in(reference.ledger);
    for (std::string l; std::getline(in, l);) lines.push_back(l);
  }
  ASSERT_EQ(lines.size(), reference.calls);
  ASSERT_GT(lines.size(), 12u);
  for (std::size_t n = 0; n <= lines.size(); ++n) {
    {
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      for (std::size_t i = 0; i < n; ++i) out << lines[i] << '\n';
      if (n < lines.size()) out << lines[n].substr(0, lines[n].size() / 2);
    }
    const auto resumed = run_with(cfg, RunLedger::resume(path), path);
    EXPECT_EQ(resumed.ledger, reference.ledger) << "killed after " << n;
    EXPECT_EQ(resumed.entries, reference.entries) << "killed after " << n;
    EXPECT_EQ(resumed.calls, lines.size() - n) << "killed after " << n;
  }
  fs::remove_all(dir);
}

}  // namespace
}  // namespace bridge
