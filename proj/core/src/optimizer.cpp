#include "bridge/optimizer.hpp"

#include <algorithm>

#include "bridge/error.hpp"
#include "bridge/surrogate.hpp"

namespace bridge {

namespace {

constexpr std::uint64_t kBoStream = 0xb0;
constexpr std::uint64_t kRsStream = 0x25;
constexpr int kMaxRedraws = 100;

OptimizerResult summarize(std::vector<EvaluationRecord> records) {
  OptimizerResult r;
  for (const auto& rec : records) {
    if (r.best_subset.size() == 0 || rec.metric > r.best_metric) {
      r.best_metric = rec.metric;
      r.best_subset = rec.subset;
    }
  }
  r.records = std::move(records);
  return r;
}

void check_pool(const ExamplePool& pool) {
  if (pool.empty()) throw Error("optimizer needs a non-empty pool");
}

}  // namespace

std::size_t OptimizerConfig::resolved_n_init() const {
  if (n_init) return *n_init;
  return std::max<std::size_t>(1, std::min<std::size_t>(16, n_eval / 2));
}

void OptimizerConfig::validate() const {
  if (n_eval < 1) throw Error("n_eval must be >= 1");
  const auto init = resolved_n_init();
  if (init < 1) throw Error("n_init must be >= 1");
  if (init > n_eval) {
    throw Error("n_init (" + std::to_string(init) + ") exceeds n_eval (" +
                std::to_string(n_eval) + ")");
  }
  if (n_starts < 1) throw Error("n_starts must be >= 1");
  scalarization.validate();
}

OptimizerResult bayes_opt(EvaluationSession& session, const ExamplePool& pool,
                          const OptimizerConfig& cfg, int round) {
  cfg.validate();
  check_pool(pool);
  const std::size_t m = pool.size();
  Rng rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(round), kBoStream}));

  std::vector<EvaluationRecord> records;
  std::vector<SubsetVector> inputs;
  std::vector<double> metrics;
  std::vector<std::size_t> cards;
  SubsetSet tabu;
  auto observe = [&](const SubsetVector& s, Phase phase, int iteration,
                     std::optional<double> beta) {
    const double g = session.evaluate(pool, s, phase, round, iteration, beta);
    records.push_back(session.records().back());
    inputs.push_back(s);
    metrics.push_back(g);
    cards.push_back(s.cardinality());
    tabu.insert(s);
  };

  const auto n_init = cfg.resolved_n_init();
  for (std::size_t i = 0; i < n_init; ++i) {
    observe(sample_subset(m, rng), Phase::init, static_cast<int>(i + 1), std::nullopt);
  }

  for (std::size_t t = n_init; t < cfg.n_eval; ++t) {
    const double beta = sample_beta(cfg.scalarization, rng);
    const auto h = tch(metrics, cards, beta);
    const auto model = fit_gp(inputs, h);
    const auto& y = model.train_targets();
    const double incumbent = y.maxCoeff();
    ProposalConfig proposal{cfg.n_starts, cfg.max_steps, tabu};
    const auto next = propose(model, incumbent, proposal, rng);
    observe(next, Phase::bo, static_cast<int>(t + 1), beta);
  }
  return summarize(std::move(records));
}

OptimizerResult bayes_opt(Evaluator& evaluator, const ExamplePool& pool,
                          const OptimizerConfig& cfg) {
  EvaluationSession session(evaluator);
  return bayes_opt(session, pool, cfg, 0);
}

OptimizerResult random_search(EvaluationSession& session, const ExamplePool& pool,
                              const OptimizerConfig& cfg, int round) {
  if (cfg.n_eval < 1) throw Error("n_eval must be >= 1");
  check_pool(pool);
  const std::size_t m = pool.size();
  Rng rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(round), kRsStream}));
  SubsetSet seen;
  std::vector<EvaluationRecord> records;
  for (std::size_t i = 0; i < cfg.n_eval; ++i) {
    auto s = sample_subset(m, rng);
    for (int attempt = 1; attempt < kMaxRedraws && seen.contains(s); ++attempt) {
      s = sample_subset(m, rng);
    }
    seen.insert(s);
    session.evaluate(pool, s, Phase::rs, round, static_cast<int>(i + 1));
    records.push_back(session.records().back());
  }
  return summarize(std::move(records));
}

OptimizerResult random_search(Evaluator& evaluator, const ExamplePool& pool,
                              const OptimizerConfig& cfg) {
  EvaluationSession session(evaluator);
  return random_search(session, pool, cfg, 0);
}

}  // namespace bridge
