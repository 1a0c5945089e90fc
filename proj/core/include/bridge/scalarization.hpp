#pragma once

#include <span>
#include <vector>

#include "bridge/rng.hpp"

namespace bridge {

// Bounds of the performance weight beta; the sparsity weight is 1 - beta.
struct ScalarizationConfig {
  double beta_lb = 0.25;
  double beta_ub = 1.0;

  void validate() const;
};

double sample_beta(const ScalarizationConfig& cfg, Rng& rng);

// Tchebyshev scalarization of (performance, -cardinality):
//   h_i = max{ beta (g_i - max_k g_k), -(1 - beta) |e_i| }
std::vector<double> tch(std::span<const double> metrics,
                        std::span<const std::size_t> cardinalities, double beta);

}  // namespace bridge
