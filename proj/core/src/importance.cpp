#include "bridge/importance.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>

#include "bridge/error.hpp"
#include "bridge/surrogate.hpp"

namespace bridge {

Eigen::VectorXd importance_from_designs(const std::vector<SubsetVector>& designs,
                                        const std::vector<double>& metrics) {
  if (designs.empty()) throw Error("importance: no designs");
  const auto model = fit_gp(designs, metrics);
  Eigen::VectorXd total = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.dimension()));
  for (const auto& e : model.train_inputs()) total += posterior_gradient(model, e);
  return total / static_cast<double>(designs.size());
}

ImportanceVector importance_scores(EvaluationSession& session, const ExamplePool& pool,
                                   std::size_t n_design, std::uint64_t seed) {
  if (n_design < 2) throw Error("importance_scores: n_design must be >= 2");
  if (pool.size() < 2) throw Error("importance_scores: pool needs at least 2 examples");
  Rng rng(derive_seed(seed, {0x1a}));
  std::vector<SubsetVector> designs;
  std::vector<double> metrics;
  for (std::size_t i = 0; i < n_design; ++i) {
    designs.push_back(sample_subset(pool.size(), rng));
    metrics.push_back(
        session.evaluate(pool, designs.back(), Phase::init, 0, static_cast<int>(i + 1)));
  }
  return {importance_from_designs(designs, metrics), n_design, seed};
}

std::string_view to_string(Direction d) {
  return d == Direction::ascending ? "ascending" : "descending";
}

std::vector<std::size_t> ranking_order(const Eigen::VectorXd& scores) {
  std::vector<std::size_t> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores(static_cast<Eigen::Index>(a)) < scores(static_cast<Eigen::Index>(b));
  });
  return order;
}

SubsetVector build_ranked_sets(const Eigen::VectorXd& scores, std::size_t t,
                               Direction direction) {
  const auto m = static_cast<std::size_t>(scores.size());
  if (t < 1 || t > m) {
    throw Error("build_ranked_sets: t=" + std::to_string(t) + " outside [1, " +
                std::to_string(m) + "]");
  }
  const auto order = ranking_order(scores);
  SubsetVector s(m);
  if (direction == Direction::ascending) {
    for (std::size_t i = 0; i < t; ++i) s.set(order[i]);
  } else {
    for (std::size_t i = m - t; i < m; ++i) s.set(order[i]);
  }
  return s;
}

std::vector<std::size_t> sweep_grid(std::size_t m, std::size_t step) {
  if (step < 1) throw Error("sweep: step must be >= 1");
  std::vector<std::size_t> grid;
  for (std::size_t t = 1; t <= m; t += step) grid.push_back(t);
  if (grid.empty() || grid.back() != m) grid.push_back(m);
  return grid;
}

RankedSweep sweep(EvaluationSession& session, const ExamplePool& pool,
                  const Eigen::VectorXd& scores, std::size_t step, std::size_t replicates) {
  if (replicates < 1) throw Error("sweep: replicates must be >= 1");
  if (static_cast<std::size_t>(scores.size()) != pool.size()) {
    throw Error("sweep: score vector does not match pool size");
  }
  RankedSweep out;
  out.order = ranking_order(scores);
  int iteration = 0;
  for (auto direction : {Direction::ascending, Direction::descending}) {
    for (auto t : sweep_grid(pool.size(), step)) {
      const auto subset = build_ranked_sets(scores, t, direction);
      for (std::size_t r = 0; r < replicates; ++r) {
        const double g = session.evaluate(pool, subset, Phase::sweep, 0, ++iteration);
        out.points.push_back({direction, t, r, g});
      }
    }
  }
  return out;
}

std::string sweep_table(const RankedSweep& s) {
  std::ostringstream out;
  out.precision(17);
  out << "direction,t,replicate,metric\n";
  for (const auto& p : s.points) {
    out << to_string(p.direction) << ',' << p.t << ',' << p.replicate << ',' << p.metric
        << '\n';
  }
  return out.str();
}

double sweep_area(const RankedSweep& s, Direction direction) {
  std::map<std::size_t, std::pair<double, std::size_t>> by_t;
  for (const auto& p : s.points) {
    if (p.direction != direction) continue;
    auto& [sum, n] = by_t[p.t];
    sum += p.metric;
    ++n;
  }
  double area = 0.0;
  for (const auto& [t, acc] : by_t) area += acc.first / static_cast<double>(acc.second);
  return area;
}

}  // namespace bridge
