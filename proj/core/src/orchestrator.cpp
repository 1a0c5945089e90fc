#include "bridge/orchestrator.hpp"

#include <algorithm>
#include <charconv>
#include <unordered_set>

#include "bridge/error.hpp"

namespace bridge {

namespace {

std::optional<std::pair<int, char>> parse_milestone(std::string_view s) {
  if (s.empty()) return std::nullopt;
  char kind = 0;
  std::string_view digits = s;
  if (s.back() == 'O' || s.back() == 'G') {
    kind = s.back();
    digits = s.substr(0, s.size() - 1);
  }
  int round = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), round);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || round < 1) {
    return std::nullopt;
  }
  return std::make_pair(round, kind);
}

std::string optimize_key(int round) { return std::to_string(round) + "O"; }
std::string generate_key(int round) { return std::to_string(round) + "G"; }

bool wants(const std::vector<std::string>& milestones, const std::string& key) {
  return std::find(milestones.begin(), milestones.end(), key) != milestones.end();
}

struct OptimizeOutcome {
  SubsetVector e_star;
  double validation_metric = 0.0;
};

// Runs whichever selection procedure fills the optimize slot.
OptimizeOutcome optimize_step(const OrchestratorConfig& cfg, const ExamplePool& pool,
                              int round, EvaluationSession& session,
                              const Backends& backends) {
  switch (cfg.slot) {
    case OptimizeSlot::bo: {
      auto r = bayes_opt(session, pool, cfg.optimizer, round);
      return {r.best_subset, r.best_metric};
    }
    case OptimizeSlot::rs: {
      auto r = random_search(session, pool, cfg.optimizer, round);
      return {r.best_subset, r.best_metric};
    }
    case OptimizeSlot::retrieval:
    case OptimizeSlot::diversity: {
      if (backends.embedder == nullptr) {
        throw Error("optimize slot \"" + std::string(to_string(cfg.slot)) +
                    "\" needs an embedder");
      }
      const auto emb = embed_pool(*backends.embedder, pool);
      SubsetVector chosen;
      if (cfg.slot == OptimizeSlot::retrieval) {
        TopK k = cfg.baseline.retrieval_k;
        if (k && *k > pool.size()) k = pool.size();
        const auto idx = retrieve_topk(emb, mean_query(emb), k);
        chosen = SubsetVector::from_indices(pool.size(), idx);
      } else {
        Rng rng(derive_seed(cfg.optimizer.seed, {static_cast<std::uint64_t>(round), 0xd1}));
        chosen = diverse_k(emb, std::min(cfg.baseline.diversity_k, pool.size()), rng);
      }
      // One validation pass on the chosen subset.
      const double g = session.evaluate(pool, chosen, Phase::init, round, 1);
      return {chosen, g};
    }
  }
  throw Error("unknown optimize slot");
}

std::unordered_set<std::string> base_ids(const ExamplePool& pool) {
  std::unordered_set<std::string> out;
  for (const auto& e : pool.examples()) out.insert(base_id(e.id));
  return out;
}

ExamplePool restrict_to(const ExamplePool& pool, const std::unordered_set<std::string>& allowed) {
  std::vector<Example> kept;
  for (const auto& e : pool.examples()) {
    if (allowed.contains(base_id(e.id))) kept.push_back(e);
  }
  return ExamplePool(std::move(kept), pool.round());
}

class Runner {
 public:
  Runner(const OrchestratorConfig& cfg, const DatasetRefs& data, const Backends& backends,
         const RunContext& ctx)
      : cfg_(cfg),
        data_(data),
        backends_(backends),
        ctx_(ctx),
        validation_(backends.validation, ctx.ledger, ctx.record_timing),
        milestones_(cfg.resolved_milestones()) {
    cfg_.validate();
    if (backends.test != nullptr) {
      test_.emplace(*backends.test, ctx.ledger, ctx.record_timing);
    }
  }

  MilestoneLedger optimize_generate_loop() {
    const bool mt = cfg_.mode == Mode::mt;
    const bool restricted = cfg_.mode == Mode::restricted;
    if (mt) check_mt_preconditions();

    ExamplePool current = initial_pool(mt);
    std::unordered_set<std::string> allowed;
    if (restricted) allowed = base_ids(current);
    ledger_.pool0 = current;
    const auto pool0_path = save_pool(0, current);
    (void)pool0_path;

    for (int k = 1; k <= cfg_.rounds; ++k) {
      const ExamplePool& candidates = current;
      ++ledger_.stats.optimize_calls;
      const auto before = validation_.evaluator_calls();
      const auto outcome = optimize_step(cfg_, candidates, k, validation_, backends_);
      ledger_.stats.optimize_evaluations += validation_.evaluator_calls() - before;

      RoundArtifacts art;
      art.round = k;
      art.e_star = outcome.e_star;
      art.e_star_ids = ids_of(candidates, outcome.e_star);

      const auto o_key = optimize_key(k);
      if (wants(milestones_, o_key)) {
        std::optional<double> metric = outcome.validation_metric;
        if (test_) metric = milestone_eval(candidates, outcome.e_star, k, 1);
        record({k, o_key, art.e_star_ids, pool_paths_[k - 1], metric});
      }

      const auto g_key = generate_key(k);
      if (k < cfg_.rounds || wants(milestones_, g_key)) {
        GenerateRequest req;
        req.round = k;
        req.seeds = examples_of(candidates, outcome.e_star);
        if (mt) req.seeds.insert(req.seeds.end(), data_.train.begin(), data_.train.end());
        req.previous = &candidates;
        ExamplePool next = generate(req);
        if (!mt) next = next.filter_correct();
        if (restricted) next = restrict_to(next, allowed);
        if (next.empty()) {
          throw Error("no correct examples generated at round " + std::to_string(k));
        }
        save_pool(k, next);
        if (wants(milestones_, g_key)) {
          std::optional<double> metric;
          if (test_) metric = milestone_eval(next, SubsetVector::full(next.size()), k, 2);
          record({k, g_key, ids_of(next, SubsetVector::full(next.size())), pool_paths_[k],
                  metric});
        }
        art.pool = next;
        current = std::move(next);
      }
      ledger_.rounds.push_back(std::move(art));
    }
    return std::move(ledger_);
  }

  MilestoneLedger iterative_reinforced_loop() {
    ExamplePool current = initial_pool(false);
    ledger_.pool0 = current;
    save_pool(0, current);
    for (int k = 1; k <= cfg_.rounds; ++k) {
      GenerateRequest req;
      req.round = k;
      req.seeds = current.examples();
      req.previous = &current;
      ExamplePool next = generate(req).filter_correct();
      if (next.empty()) {
        throw Error("no correct examples generated at round " + std::to_string(k));
      }
      save_pool(k, next);
      const auto key = std::to_string(k);
      const auto all = SubsetVector::full(next.size());
      if (wants(milestones_, key)) {
        std::optional<double> metric;
        if (test_) metric = milestone_eval(next, all, k, 2);
        record({k, key, ids_of(next, all), pool_paths_[k], metric});
      }
      RoundArtifacts art;
      art.round = k;
      art.pool = next;
      ledger_.rounds.push_back(std::move(art));
      current = std::move(next);
    }
    return std::move(ledger_);
  }

 private:
  void check_mt_preconditions() const {
    if (data_.unlabeled.empty()) throw Error("mt mode needs a non-empty unlabeled set");
    std::unordered_set<std::string> train_ids;
    for (const auto& e : data_.train) train_ids.insert(e.id);
    for (const auto& e : data_.validation) {
      if (train_ids.contains(e.id)) {
        throw Error("mt mode: train and validation sets overlap on \"" + e.id + "\"");
      }
    }
  }

  ExamplePool initial_pool(bool mt) {
    ExamplePool pool;
    if (data_.initial_pool) {
      pool = *data_.initial_pool;
    } else {
      GenerateRequest req;
      req.round = 0;
      if (mt) {
        req.seeds = data_.train;
        req.seeds.insert(req.seeds.end(), data_.validation.begin(), data_.validation.end());
      }
      pool = generate(req);
    }
    if (!mt) pool = pool.filter_correct();
    if (pool.empty()) throw Error("no correct examples generated at round 0");
    return pool;
  }

  ExamplePool generate(const GenerateRequest& req) {
    ++ledger_.stats.generate_calls;
    return backends_.generator.generate(req);
  }

  double milestone_eval(const ExamplePool& pool, const SubsetVector& subset, int round,
                        int slot) {
    const auto before = test_->evaluator_calls();
    const double g = test_->evaluate(pool, subset, Phase::milestone, round, slot);
    ledger_.stats.milestone_evaluations += test_->evaluator_calls() - before;
    return g;
  }

  std::string save_pool(int round, const ExamplePool& pool) {
    std::string path = ctx_.store ? ctx_.store->save_pool(round, pool) : std::string();
    if (pool_paths_.size() <= static_cast<std::size_t>(round)) pool_paths_.resize(round + 1);
    pool_paths_[round] = path;
    return path;
  }

  void record(MilestoneEntry entry) {
    if (ctx_.store) ctx_.store->save_milestone(entry);
    ledger_.entries.push_back(std::move(entry));
  }

  OrchestratorConfig cfg_;
  const DatasetRefs& data_;
  const Backends& backends_;
  RunContext ctx_;
  EvaluationSession validation_;
  std::optional<EvaluationSession> test_;
  std::vector<std::string> milestones_;
  std::vector<std::string> pool_paths_;
  MilestoneLedger ledger_;
};

}  // namespace

std::string_view to_string(OptimizeSlot slot) {
  switch (slot) {
    case OptimizeSlot::bo: return "bo";
    case OptimizeSlot::rs: return "rs";
    case OptimizeSlot::retrieval: return "retrieval";
    case OptimizeSlot::diversity: return "diversity";
  }
  return "bo";
}

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::standard: return "standard";
    case Mode::iterative_reinforced: return "iterative_reinforced";
    case Mode::restricted: return "restricted";
    case Mode::mt: return "mt";
  }
  return "standard";
}

OptimizeSlot slot_from_string(std::string_view name) {
  for (auto s : {OptimizeSlot::bo, OptimizeSlot::rs, OptimizeSlot::retrieval,
                 OptimizeSlot::diversity}) {
    if (to_string(s) == name) return s;
  }
  throw Error("unknown optimize slot \"" + std::string(name) + "\"");
}

Mode mode_from_string(std::string_view name) {
  for (auto m : {Mode::standard, Mode::iterative_reinforced, Mode::restricted, Mode::mt}) {
    if (to_string(m) == name) return m;
  }
  throw Error("unknown mode \"" + std::string(name) + "\"");
}

std::vector<std::string> default_milestones(int rounds) {
  std::vector<std::string> out;
  for (int k = 1; k <= rounds; ++k) {
    out.push_back(optimize_key(k));
    if (k < rounds) out.push_back(generate_key(k));
  }
  return out;
}

int milestone_rank(std::string_view milestone) {
  const auto parsed = parse_milestone(milestone);
  if (!parsed) return -1;
  const auto [round, kind] = *parsed;
  if (kind == 0) return 2 * round;
  return 2 * (round - 1) + (kind == 'G' ? 1 : 0);
}

void OrchestratorConfig::validate() const {
  if (rounds < 1) throw Error("rounds must be >= 1");
  if (slot == OptimizeSlot::bo || slot == OptimizeSlot::rs) optimizer.validate();
  if (baseline.retrieval_k && *baseline.retrieval_k < 1) throw Error("retrieval k must be >= 1");
  if (baseline.diversity_k < 1) throw Error("diversity k must be >= 1");
  for (const auto& m : milestones) {
    const auto parsed = parse_milestone(m);
    if (!parsed || parsed->first > rounds) throw Error("invalid milestone \"" + m + "\"");
    const bool bare = parsed->second == 0;
    if (bare != (mode == Mode::iterative_reinforced)) {
      throw Error("milestone \"" + m + "\" does not fit mode " + std::string(to_string(mode)));
    }
  }
}

std::vector<std::string> OrchestratorConfig::resolved_milestones() const {
  if (!milestones.empty()) {
    auto out = milestones;
    std::sort(out.begin(), out.end(), [](const std::string& a, const std::string& b) {
      return milestone_rank(a) < milestone_rank(b);
    });
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
  if (mode == Mode::iterative_reinforced) {
    std::vector<std::string> out;
    for (int k = 1; k <= rounds; ++k) out.push_back(std::to_string(k));
    return out;
  }
  return default_milestones(rounds);
}

const MilestoneEntry* MilestoneLedger::find(std::string_view milestone) const {
  for (const auto& e : entries) {
    if (e.milestone == milestone) return &e;
  }
  return nullptr;
}

const MilestoneEntry* MilestoneLedger::best() const {
  const MilestoneEntry* best = nullptr;
  for (const auto& e : entries) {
    if (e.metric && (!best || *e.metric > *best->metric)) best = &e;
  }
  return best;
}

MilestoneLedger run_bridge(const OrchestratorConfig& cfg, const DatasetRefs& data,
                           const Backends& backends, const RunContext& ctx) {
  auto c = cfg;
  c.mode = Mode::standard;
  return Runner(c, data, backends, ctx).optimize_generate_loop();
}

MilestoneLedger run_restricted(const OrchestratorConfig& cfg, const DatasetRefs& data,
                               const Backends& backends, const RunContext& ctx) {
  auto c = cfg;
  c.mode = Mode::restricted;
  return Runner(c, data, backends, ctx).optimize_generate_loop();
}

MilestoneLedger run_mt(const OrchestratorConfig& cfg, const DatasetRefs& data,
                       const Backends& backends, const RunContext& ctx) {
  auto c = cfg;
  c.mode = Mode::mt;
  return Runner(c, data, backends, ctx).optimize_generate_loop();
}

MilestoneLedger run_iterative_reinforced(const OrchestratorConfig& cfg,
                                         const DatasetRefs& data, const Backends& backends,
                                         const RunContext& ctx) {
  auto c = cfg;
  c.mode = Mode::iterative_reinforced;
  return Runner(c, data, backends, ctx).iterative_reinforced_loop();
}

MilestoneLedger run(const OrchestratorConfig& cfg, const DatasetRefs& data,
                    const Backends& backends, const RunContext& ctx) {
  switch (cfg.mode) {
    case Mode::standard: return run_bridge(cfg, data, backends, ctx);
    case Mode::iterative_reinforced: return run_iterative_reinforced(cfg, data, backends, ctx);
    case Mode::restricted: return run_restricted(cfg, data, backends, ctx);
    case Mode::mt: return run_mt(cfg, data, backends, ctx);
  }
  throw Error("unknown mode");
}

ExamplePool ReplayingGenerator::generate(const GenerateRequest& request) {
  if (auto pool = lookup_(request.round)) return *pool;
  return inner_.generate(request);
}

}  // namespace bridge
