#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bridge/ledger.hpp"
#include "bridge/pool.hpp"

namespace bridge {

struct ImportanceVector {
  Eigen::VectorXd scores;
  std::size_t n_design = 0;
  std::uint64_t seed = 0;
};

// Average over the GP training points of the posterior-mean input gradient.
Eigen::VectorXd importance_from_designs(const std::vector<SubsetVector>& designs,
                                        const std::vector<double>& metrics);

// Samples n_design random subsets, evaluates them (phase init, round 0)
// and scores every example by its averaged surrogate gradient.
ImportanceVector importance_scores(EvaluationSession& session, const ExamplePool& pool,
                                   std::size_t n_design, std::uint64_t seed);

enum class Direction { ascending, descending };
std::string_view to_string(Direction d);

// Pool indices sorted by score, ties by index.
std::vector<std::size_t> ranking_order(const Eigen::VectorXd& scores);

// ascending: the t lowest-scored examples; descending: the t highest.
SubsetVector build_ranked_sets(const Eigen::VectorXd& scores, std::size_t t,
                               Direction direction);

struct SweepPoint {
  Direction direction;
  std::size_t t;
  std::size_t replicate;
  double metric;
};

struct RankedSweep {
  std::vector<std::size_t> order;
  std::vector<SweepPoint> points;
};

// {1, 1+step, 1+2 step, ...} with m always appended.
std::vector<std::size_t> sweep_grid(std::size_t m, std::size_t step);

// Evaluates a_t and d_t over the grid, `replicates` times each. Points are
// recorded in (direction, t, replicate) order.
RankedSweep sweep(EvaluationSession& session, const ExamplePool& pool,
                  const Eigen::VectorXd& scores, std::size_t step, std::size_t replicates);

// "direction,t,replicate,metric" table.
std::string sweep_table(const RankedSweep& sweep);

// Sum over the grid of the replicate-mean metric, per direction.
double sweep_area(const RankedSweep& sweep, Direction direction);

}  // namespace bridge
