#include "bridge/scalarization.hpp"

#include <algorithm>
#include <cmath>

#include "bridge/error.hpp"

namespace bridge {

void ScalarizationConfig::validate() const {
  if (!(beta_lb >= 0.0 && beta_ub <= 1.0 && beta_lb <= beta_ub)) {
    throw Error("scalarization bounds must satisfy 0 <= beta_lb <= beta_ub <= 1");
  }
}

double sample_beta(const ScalarizationConfig& cfg, Rng& rng) {
  cfg.validate();
  if (cfg.beta_lb == cfg.beta_ub) return cfg.beta_lb;
  std::uniform_real_distribution<double> dist(cfg.beta_lb, cfg.beta_ub);
  return dist(rng);
}

std::vector<double> tch(std::span<const double> metrics,
                        std::span<const std::size_t> cardinalities, double beta) {
  if (metrics.empty()) throw Error("tch: no evaluated points");
  if (metrics.size() != cardinalities.size()) throw Error("tch: length mismatch");
  const double g_max = *std::max_element(metrics.begin(), metrics.end());
  std::vector<double> h(metrics.size());
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    if (cardinalities[i] == 0) throw Error("tch: empty subset among evaluated points");
    const double performance = beta * (metrics[i] - g_max);
    const double sparsity = -(1.0 - beta) * static_cast<double>(cardinalities[i]);
    h[i] = std::max(performance, sparsity);
  }
  return h;
}

}  // namespace bridge
