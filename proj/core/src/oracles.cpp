#include "bridge/runtime.hpp"

#include <algorithm>
#include <cmath>

#include "bridge/error.hpp"

namespace bridge {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

void check_aligned(const SyntheticPopulation& p, const SubsetVector& s) {
  if (s.size() != p.size()) throw Error("oracle: subset length does not match population");
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::uint64_t context_tag(const EvalContext& ctx) {
  return (static_cast<std::uint64_t>(ctx.phase) << 56) ^
         (static_cast<std::uint64_t>(static_cast<std::uint32_t>(ctx.round)) << 32) ^
         static_cast<std::uint32_t>(ctx.iteration);
}

}  // namespace

void GenerationModelSpec::validate() const {
  if (!(pull_rate >= 0.0 && pull_rate <= 1.0)) throw Error("pull_rate must lie in [0,1]");
  if (!(quality_noise_sd >= 0.0)) throw Error("quality_noise_sd must be non-negative");
  if (!(correctness_slope > 0.0)) throw Error("correctness_slope must be positive");
}

void SyntheticPopulation::validate() const {
  const auto m = static_cast<Eigen::Index>(ids.size());
  if (quality.size() != m || interaction.rows() != m || interaction.cols() != m ||
      correct.size() != ids.size()) {
    throw Error("synthetic population: inconsistent sizes");
  }
  if (!quality.allFinite() || !interaction.allFinite()) {
    throw Error("synthetic population: non-finite entries");
  }
  if (m > 0 && (interaction - interaction.transpose()).cwiseAbs().maxCoeff() > 0.0) {
    throw Error("synthetic population: interaction matrix is not symmetric");
  }
}

double default_normalizer(const Eigen::VectorXd& quality) {
  const double s = quality.cwiseMax(0.0).sum();
  return s > 0.0 ? s : 1.0;
}

SyntheticPopulation make_population(const PopulationSpec& spec, Rng& rng) {
  if (spec.size == 0) throw Error("population size must be >= 1");
  const auto m = static_cast<Eigen::Index>(spec.size);
  SyntheticPopulation p;
  p.quality.resize(m);
  p.interaction = Eigen::MatrixXd::Zero(m, m);
  std::normal_distribution<double> q(spec.quality_mean, spec.quality_sd);
  for (Eigen::Index j = 0; j < m; ++j) {
    p.ids.push_back(spec.id_prefix + std::to_string(j));
    p.quality(j) = q(rng);
  }
  if (spec.interaction_density > 0.0 && spec.interaction_scale > 0.0) {
    std::bernoulli_distribution pair(std::min(1.0, spec.interaction_density));
    std::uniform_real_distribution<double> magnitude(0.5, 1.5);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = i + 1; j < m; ++j) {
        if (pair(rng)) {
          p.interaction(i, j) = p.interaction(j, i) = -spec.interaction_scale * magnitude(rng);
        }
      }
    }
  }
  p.normalizer = default_normalizer(p.quality);
  p.correct.assign(spec.size, true);
  return p;
}

SyntheticPopulation make_additive_population(const std::vector<double>& quality) {
  SyntheticPopulation p;
  const auto m = static_cast<Eigen::Index>(quality.size());
  p.quality = Eigen::Map<const Eigen::VectorXd>(quality.data(), m);
  p.interaction = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index j = 0; j < m; ++j) p.ids.push_back("ex" + std::to_string(j));
  p.normalizer = default_normalizer(p.quality);
  p.correct.assign(quality.size(), true);
  return p;
}

double additive_oracle(const SyntheticPopulation& p, const SubsetVector& s, double noise) {
  check_aligned(p, s);
  double total = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (s.test(j)) total += p.quality(static_cast<Eigen::Index>(j));
  }
  return clamp01(total / p.normalizer + noise);
}

double interference_oracle(const SyntheticPopulation& p, const SubsetVector& s,
                           double noise) {
  check_aligned(p, s);
  const auto idx = s.indices();
  double total = 0.0;
  for (auto j : idx) total += p.quality(static_cast<Eigen::Index>(j));
  for (std::size_t a = 0; a < idx.size(); ++a) {
    for (std::size_t b = a + 1; b < idx.size(); ++b) {
      total += p.interaction(static_cast<Eigen::Index>(idx[a]), static_cast<Eigen::Index>(idx[b]));
    }
  }
  return clamp01(total / p.normalizer + noise);
}

ExamplePool population_pool(const SyntheticPopulation& p, int round, bool only_correct) {
  std::vector<Example> examples;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (only_correct && !p.correct[j]) continue;
    Example e;
    e.id = round == 0 ? p.ids[j] : round_id(p.ids[j], round);
    e.input = "item " + p.ids[j];
    e.rationale = "synthetic rationale, round " + std::to_string(round);
    e.output = p.ids[j];
    e.correct = p.correct[j];
    e.meta["item"] = j;
    e.meta["quality"] = p.quality(static_cast<Eigen::Index>(j));
    examples.push_back(std::move(e));
  }
  return ExamplePool(std::move(examples), round);
}

SyntheticPopulation resample_correctness(const SyntheticPopulation& population,
                                         const GenerationModelSpec& spec, Rng& rng) {
  spec.validate();
  SyntheticPopulation next = population;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t j = 0; j < next.size(); ++j) {
    next.correct[j] = u(rng) < logistic(spec.correctness_slope * next.quality(static_cast<Eigen::Index>(j)));
  }
  return next;
}

SyntheticPopulation regenerate(const SyntheticPopulation& population, double seed_mean,
                               const GenerationModelSpec& spec, Rng& rng) {
  spec.validate();
  SyntheticPopulation next = population;
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t j = 0; j < next.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    double q = population.quality(jj);
    q += spec.pull_rate * (seed_mean - q);
    if (spec.quality_noise_sd > 0.0) q += spec.quality_noise_sd * noise(rng);
    next.quality(jj) = q;
    next.correct[j] = u(rng) < logistic(spec.correctness_slope * q);
  }
  return next;
}

GenerationResult synthetic_generate(const SyntheticPopulation& population,
                                    const SubsetVector& seed,
                                    const GenerationModelSpec& spec, int round, Rng& rng) {
  if (seed.size() != population.size()) throw Error("synthetic_generate: seed length mismatch");
  if (seed.empty_selection()) throw Error("synthetic_generate: seed subset is empty");
  double total = 0.0;
  for (auto j : seed.indices()) total += population.quality(static_cast<Eigen::Index>(j));
  const double mean = total / static_cast<double>(seed.cardinality());
  auto next = regenerate(population, mean, spec, rng);
  auto pool = population_pool(next, round, true);
  return {std::move(next), std::move(pool)};
}

SyntheticEvaluator::SyntheticEvaluator(OracleKind kind, Eigen::MatrixXd interaction,
                                       double normalizer, double noise_sd,
                                       std::uint64_t seed)
    : kind_(kind),
      interaction_(std::move(interaction)),
      normalizer_(normalizer > 0.0 ? normalizer : 1.0),
      noise_sd_(noise_sd),
      seed_(seed) {
  if (noise_sd < 0.0) throw Error("noise_sd must be non-negative");
}

SyntheticPopulation SyntheticEvaluator::align(const ExamplePool& pool) const {
  const auto m = static_cast<Eigen::Index>(pool.size());
  SyntheticPopulation p;
  p.quality.resize(m);
  p.interaction = Eigen::MatrixXd::Zero(m, m);
  std::vector<Eigen::Index> items(pool.size());
  for (std::size_t j = 0; j < pool.size(); ++j) {
    const auto& e = pool[j];
    if (!e.meta.contains("item") || !e.meta.contains("quality") ||
        !e.meta["item"].is_number_integer() || !e.meta["quality"].is_number()) {
      throw Error("example \"" + e.id + "\" lacks synthetic item/quality meta");
    }
    items[j] = e.meta["item"].get<Eigen::Index>();
    if (items[j] < 0 || items[j] >= interaction_.rows()) {
      throw Error("example \"" + e.id + "\" references an unknown item");
    }
    p.ids.push_back(e.id);
    p.quality(static_cast<Eigen::Index>(j)) = e.meta["quality"].get<double>();
  }
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) p.interaction(a, b) = interaction_(items[a], items[b]);
  }
  p.normalizer = normalizer_;
  p.correct.assign(pool.size(), true);
  return p;
}

double SyntheticEvaluator::evaluate(const ExamplePool& pool, const SubsetVector& subset,
                                    const EvalContext& ctx) {
  const auto population = align(pool);
  double noise = 0.0;
  if (noise_sd_ > 0.0) {
    Rng rng(derive_seed(seed_, {SubsetHash{}(subset), context_tag(ctx)}));
    noise = std::normal_distribution<double>(0.0, noise_sd_)(rng);
  }
  return kind_ == OracleKind::additive ? additive_oracle(population, subset, noise)
                                       : interference_oracle(population, subset, noise);
}

SyntheticGenerator::SyntheticGenerator(SyntheticPopulation population,
                                       GenerationModelSpec spec, std::uint64_t seed)
    : population_(std::move(population)), spec_(spec), seed_(seed) {
  population_.validate();
  spec_.validate();
}

ExamplePool SyntheticGenerator::generate(const GenerateRequest& request) {
  Rng rng(derive_seed(seed_, {static_cast<std::uint64_t>(request.round)}));
  if (request.seeds.empty()) {
    if (request.round != 0) {
      throw Error("synthetic generation at round " + std::to_string(request.round) +
                  " needs a non-empty seed set");
    }
    population_ = resample_correctness(population_, spec_, rng);
  } else {
    double total = 0.0;
    for (const auto& e : request.seeds) {
      if (!e.meta.contains("quality") || !e.meta["quality"].is_number()) {
        throw Error("seed example \"" + e.id + "\" lacks quality meta");
      }
      total += e.meta["quality"].get<double>();
    }
    population_ = regenerate(population_, total / double(request.seeds.size()), spec_, rng);
  }
  return population_pool(population_, request.round, false);
}

}  // namespace bridge
