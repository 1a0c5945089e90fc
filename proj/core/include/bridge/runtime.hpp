#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bridge/pool.hpp"

namespace bridge {

struct EvalContext {
  Phase phase = Phase::init;
  int round = 0;
  int iteration = 0;
};

// Black-box metric g(e); higher is better.
class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual double evaluate(const ExamplePool& pool, const SubsetVector& subset,
                          const EvalContext& ctx) = 0;
};

struct GenerateRequest {
  int round = 0;
  // Demonstrations to condition on; empty for the initial pool.
  std::vector<Example> seeds;
  // Pool the seeds came from, for id de-duplication. May be null.
  const ExamplePool* previous = nullptr;
};

// Re-predicts the train (or unlabeled) set; returns every generated
// example with its correctness flag. Filtering is the caller's job.
class Generator {
 public:
  virtual ~Generator() = default;
  virtual ExamplePool generate(const GenerateRequest& request) = 0;
};

enum class OracleKind { additive, interference };

struct GenerationModelSpec {
  double pull_rate = 0.5;
  double quality_noise_sd = 0.0;
  double correctness_slope = 4.0;

  void validate() const;
};

// Latent per-item quality and symmetric pairwise interaction.
struct SyntheticPopulation {
  std::vector<std::string> ids;
  Eigen::VectorXd quality;
  Eigen::MatrixXd interaction;
  // Fixed metric scale; defaults to sum of positive qualities.
  double normalizer = 1.0;
  std::vector<bool> correct;

  std::size_t size() const { return ids.size(); }
  void validate() const;
};

double default_normalizer(const Eigen::VectorXd& quality);

struct PopulationSpec {
  std::size_t size = 20;
  double quality_mean = 0.3;
  double quality_sd = 0.5;
  // Probability that a pair interacts, and the mean magnitude of the
  // (negative) interaction.
  double interaction_density = 0.0;
  double interaction_scale = 0.0;
  std::string id_prefix = "ex";
};

SyntheticPopulation make_population(const PopulationSpec& spec, Rng& rng);
SyntheticPopulation make_additive_population(const std::vector<double>& quality);

double additive_oracle(const SyntheticPopulation& population, const SubsetVector& subset,
                       double noise = 0.0);
double interference_oracle(const SyntheticPopulation& population,
                           const SubsetVector& subset, double noise = 0.0);

// Pool of the population's items, restricted to correct ones if asked.
// Meta carries {"item": index, "quality": q}.
ExamplePool population_pool(const SyntheticPopulation& population, int round,
                            bool only_correct);

// Samples correctness from logistic(slope * q) without changing quality.
SyntheticPopulation resample_correctness(const SyntheticPopulation& population,
                                         const GenerationModelSpec& spec, Rng& rng);

// q' = q + pull_rate (seed mean - q) + noise; correctness resampled.
SyntheticPopulation regenerate(const SyntheticPopulation& population, double seed_mean,
                               const GenerationModelSpec& spec, Rng& rng);

struct GenerationResult {
  SyntheticPopulation population;
  ExamplePool pool;
};

// `seed` is aligned with the population's items. The returned pool holds
// correct examples only, ids suffixed with the round.
GenerationResult synthetic_generate(const SyntheticPopulation& population,
                                    const SubsetVector& seed,
                                    const GenerationModelSpec& spec, int round, Rng& rng);

// Oracle-backed evaluator. Reads item index and quality from example meta,
// so it keeps working as pools are regenerated across rounds. Noise is a
// pure function of (seed, subset, context).
class SyntheticEvaluator final : public Evaluator {
 public:
  SyntheticEvaluator(OracleKind kind, Eigen::MatrixXd interaction, double normalizer,
                     double noise_sd, std::uint64_t seed);

  double evaluate(const ExamplePool& pool, const SubsetVector& subset,
                  const EvalContext& ctx) override;

  SyntheticPopulation align(const ExamplePool& pool) const;

 private:
  OracleKind kind_;
  Eigen::MatrixXd interaction_;
  double normalizer_;
  double noise_sd_;
  std::uint64_t seed_;
};

// Stateful generator over a population; state advances with each call.
class SyntheticGenerator final : public Generator {
 public:
  SyntheticGenerator(SyntheticPopulation population, GenerationModelSpec spec,
                     std::uint64_t seed);

  ExamplePool generate(const GenerateRequest& request) override;
  const SyntheticPopulation& population() const { return population_; }

 private:
  SyntheticPopulation population_;
  GenerationModelSpec spec_;
  std::uint64_t seed_;
};

}  // namespace bridge
