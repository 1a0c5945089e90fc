#pragma once

#include <cstddef>
#include <optional>
#include <unordered_set>

#include "bridge/pool.hpp"
#include "bridge/surrogate.hpp"

namespace bridge {

using SubsetSet = std::unordered_set<SubsetVector, SubsetHash>;

struct ProposalConfig {
  std::size_t n_starts = 16;
  // 0 means 2m.
  std::size_t max_steps = 0;
  SubsetSet tabu;
};

double normal_pdf(double z);
double normal_cdf(double z);

// Closed-form EI for maximization.
double expected_improvement(double mean, double var, double incumbent);

// EI of a subset under the standardized posterior of `model`.
double subset_ei(const GPModel& model, const SubsetVector& e, double incumbent);

// Multi-start Hamming-1 hill climbing on EI. `incumbent` is in the
// model's standardized units.
SubsetVector propose(const GPModel& model, double incumbent, const ProposalConfig& cfg,
                     Rng& rng);

}  // namespace bridge
