#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "bridge/acquisition.hpp"
#include "bridge/ledger.hpp"
#include "bridge/scalarization.hpp"

namespace bridge {

struct OptimizerConfig {
  std::size_t n_eval = 32;
  // Defaults to min(16, n_eval / 2), floored at 1.
  std::optional<std::size_t> n_init;
  ScalarizationConfig scalarization;
  std::size_t n_starts = 16;
  std::size_t max_steps = 0;  // 0: 2m
  std::uint64_t seed = 0;

  std::size_t resolved_n_init() const;
  void validate() const;
};

struct OptimizerResult {
  SubsetVector best_subset;
  double best_metric = 0.0;
  std::vector<EvaluationRecord> records;
};

// Budget-controlled BO with a fresh random Tchebyshev weight per iteration.
OptimizerResult bayes_opt(EvaluationSession& session, const ExamplePool& pool,
                          const OptimizerConfig& cfg, int round = 0);
OptimizerResult bayes_opt(Evaluator& evaluator, const ExamplePool& pool,
                          const OptimizerConfig& cfg);

// Same budget spent on cardinality-uniform random subsets.
OptimizerResult random_search(EvaluationSession& session, const ExamplePool& pool,
                              const OptimizerConfig& cfg, int round = 0);
OptimizerResult random_search(Evaluator& evaluator, const ExamplePool& pool,
                              const OptimizerConfig& cfg);

}  // namespace bridge
