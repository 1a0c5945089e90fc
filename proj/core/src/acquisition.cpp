#include "bridge/acquisition.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <unordered_map>

#include "bridge/error.hpp"

namespace bridge {

namespace {

constexpr double kVarTolerance = 1e-10;

SubsetVector random_non_tabu(std::size_t m, const SubsetSet& tabu, Rng& rng) {
  if (m < 63) {
    const std::uint64_t lattice = (std::uint64_t{1} << m) - 1;
    std::uint64_t tabu_nonempty = 0;
    for (const auto& s : tabu) {
      if (s.size() == m && !s.empty_selection()) ++tabu_nonempty;
    }
    if (tabu_nonempty >= lattice) throw Error("search space exhausted");
    if (m <= 20) {
      std::vector<std::uint64_t> free;
      for (std::uint64_t code = 1; code <= lattice; ++code) {
        SubsetVector s(m);
        for (std::size_t j = 0; j < m; ++j) s.set(j, (code >> j) & 1U);
        if (!tabu.contains(s)) free.push_back(code);
      }
      std::uniform_int_distribution<std::size_t> pick(0, free.size() - 1);
      const auto code = free[pick(rng)];
      SubsetVector s(m);
      for (std::size_t j = 0; j < m; ++j) s.set(j, (code >> j) & 1U);
      return s;
    }
  }
  std::bernoulli_distribution coin(0.5);
  while (true) {
    SubsetVector s(m);
    for (std::size_t j = 0; j < m; ++j) s.set(j, coin(rng));
    if (!s.empty_selection() && !tabu.contains(s)) return s;
  }
}

}  // namespace

double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double expected_improvement(double mean, double var, double incumbent) {
  if (var < 0.0) {
    if (var < -kVarTolerance) throw Error("expected_improvement: negative variance");
    var = 0.0;
  }
  const double sigma = std::sqrt(var);
  const double delta = mean - incumbent;
  if (sigma == 0.0) return std::max(0.0, delta);
  const double z = delta / sigma;
  return sigma * (z * normal_cdf(z) + normal_pdf(z));
}

double subset_ei(const GPModel& model, const SubsetVector& e, double incumbent) {
  const auto post = posterior_standardized(model, e);
  return expected_improvement(post.mean, post.var, incumbent);
}

SubsetVector propose(const GPModel& model, double incumbent, const ProposalConfig& cfg,
                     Rng& rng) {
  if (cfg.n_starts == 0) throw Error("propose: n_starts must be >= 1");
  const std::size_t m = model.dimension();
  if (m == 0) throw Error("propose: model has zero dimension");
  const std::size_t max_steps = cfg.max_steps ? cfg.max_steps : 2 * m;
  constexpr double kNone = -std::numeric_limits<double>::infinity();

  std::unordered_map<SubsetVector, double, SubsetHash> cache;
  auto ei = [&](const SubsetVector& s) {
    auto it = cache.find(s);
    if (it != cache.end()) return it->second;
    const double v = subset_ei(model, s, incumbent);
    cache.emplace(s, v);
    return v;
  };
  auto eligible = [&](const SubsetVector& s) {
    return !s.empty_selection() && !cfg.tabu.contains(s);
  };

  std::vector<SubsetVector> starts;
  if (model.num_points() > 0) {
    const auto& y = model.train_targets();
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < y.size(); ++i) {
      if (y(i) > y(best)) best = i;
    }
    starts.push_back(model.train_inputs()[static_cast<std::size_t>(best)]);
  }
  while (starts.size() < cfg.n_starts) starts.push_back(sample_subset(m, rng));

  std::optional<SubsetVector> best;
  double best_value = kNone;
  for (const auto& start : starts) {
    SubsetVector current = start;
    // A tabu start is only a launch point; any eligible neighbour beats it.
    double current_value = eligible(current) ? ei(current) : kNone;
    if (current_value > best_value) {
      best_value = current_value;
      best = current;
    }
    for (std::size_t step = 0; step < max_steps; ++step) {
      std::optional<std::size_t> move;
      double move_value = current_value;
      for (std::size_t j = 0; j < m; ++j) {
        current.flip(j);
        if (eligible(current)) {
          const double v = ei(current);
          if (v > move_value) {
            move_value = v;
            move = j;
          }
        }
        current.flip(j);
      }
      if (!move) break;
      current.flip(*move);
      current_value = move_value;
      if (current_value > best_value) {
        best_value = current_value;
        best = current;
      }
    }
  }
  if (best) return *best;
  return random_non_tabu(m, cfg.tabu, rng);
}

}  // namespace bridge
