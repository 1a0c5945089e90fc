#include "bridge/commands.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "bridge/chart.hpp"
#include "bridge/error.hpp"
#include "bridge/external.hpp"
#include "bridge/importance.hpp"
#include "bridge/report.hpp"

namespace bridge {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// Stream tags for seeds derived from the run seed.
constexpr std::uint64_t kPopulationTag = 0x9e;
constexpr std::uint64_t kValidationTag = 0xe7;
constexpr std::uint64_t kTestTag = 0x7e;
constexpr std::uint64_t kGeneratorTag = 0x6e;
constexpr std::uint64_t kImportanceTag = 0xa7;

// Exclusive advisory lock; released by the kernel if the process dies.
class DirLock {
 public:
  explicit DirLock(const fs::path& dir) {
    const auto path = dir / ".lock";
    fd_ = ::open(path.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error("cannot open lock file " + path.string());
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      throw Error("output directory " + dir.string() + " is locked by another run");
    }
  }
  ~DirLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  int fd_ = -1;
};

void write_atomic(const fs::path& path, const std::string& content) {
  const auto tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string provenance(const RunConfig& cfg) {
  return "# config_hash=" + cfg.hash() + " seed=" + std::to_string(cfg.seed) + "\n";
}

class FileRunStore final : public RunStore {
 public:
  FileRunStore(fs::path dir, std::string hash, std::uint64_t seed)
      : dir_(std::move(dir)), hash_(std::move(hash)), seed_(seed) {
    milestones_.open(dir_ / "milestones.jsonl", std::ios::binary | std::ios::trunc);
    if (!milestones_) throw Error("cannot write " + (dir_ / "milestones.jsonl").string());
  }

  std::string save_pool(int round, const ExamplePool& pool) override {
    fs::create_directories(dir_ / "pools");
    const std::string rel = "pools/pool_" + std::to_string(round) + ".jsonl";
    write_atomic(dir_ / rel, serialize_pool(pool));
    return rel;
  }

  void save_milestone(const MilestoneEntry& entry) override {
    milestones_ << to_json(MilestoneRecord{hash_, seed_, entry}).dump() << '\n';
    milestones_.flush();
  }

 private:
  fs::path dir_;
  std::string hash_;
  std::uint64_t seed_;
  std::ofstream milestones_;
};

class CachedEmbedder final : public Embedder {
 public:
  CachedEmbedder(std::unique_ptr<Embedder> inner, fs::path cache)
      : inner_(std::move(inner)), cache_(std::move(cache)) {}

  EmbeddingMatrix embed(const std::vector<std::string>& ids,
                        const std::vector<std::string>& texts) override {
    if (fs::exists(cache_)) {
      try {
        return load_embedding_cache(cache_, ids);
      } catch (const Error&) {
        // Stale or partial cache: recompute and overwrite below.
      }
    }
    auto m = inner_->embed(ids, texts);
    save_embedding_cache(cache_, ids, m);
    return m;
  }

 private:
  std::unique_ptr<Embedder> inner_;
  fs::path cache_;
};

std::shared_ptr<ExternalProcess> spawn(const ProcessSpec& p) {
  return std::make_shared<ExternalProcess>(p.command, std::chrono::milliseconds(p.timeout_ms));
}

std::unique_ptr<Evaluator> make_evaluator(const RunConfig& cfg, const EvaluatorSpec& spec,
                                          const std::optional<SyntheticPopulation>& pop,
                                          std::uint64_t tag) {
  if (spec.kind == BackendKind::external) {
    return std::make_unique<ExternalEvaluator>(spawn(spec.process));
  }
  const auto kind =
      spec.kind == BackendKind::additive ? OracleKind::additive : OracleKind::interference;
  return std::make_unique<SyntheticEvaluator>(kind, pop->interaction, pop->normalizer,
                                              spec.noise_sd,
                                              spec.seed.value_or(derive_seed(cfg.seed, {tag})));
}

std::vector<Example> load_examples(const std::string& path) {
  if (path.empty()) return {};
  return load_pool(path).examples();
}

ordered_json read_manifest(const fs::path& path) {
  std::ifstream in(path);
  try {
    return ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("unreadable manifest " + path.string() + ": " + e.what());
  }
}

void write_manifest(const fs::path& dir, const RunConfig& cfg, std::string_view command,
                    bool complete, const MilestoneLedger* ledger = nullptr) {
  ordered_json m;
  m["config_hash"] = cfg.hash();
  m["seed"] = cfg.seed;
  m["command"] = command;
  m["complete"] = complete;
  if (ledger) {
    const auto* best = ledger->best();
    m["best_milestone"] = best ? ordered_json(best->milestone) : ordered_json();
  }
  m["config"] = cfg.to_json();
  write_atomic(dir / "manifest.json", m.dump(2) + "\n");
}

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

std::optional<RunConfig> load_or_report(const fs::path& path, std::ostream& err) {
  try {
    return load_config(path);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return std::nullopt;
  }
}

}  // namespace

fs::path resolve_output_dir(const RunConfig& cfg) {
  if (const char* env = std::getenv("BRIDGE_OUT"); env && *env) return env;
  return cfg.output_dir;
}

Backends BackendSet::view() {
  return Backends{*validation, *generator, test.get(), embedder.get()};
}

BackendSet make_backends(const RunConfig& cfg, const fs::path& pool_dir) {
  BackendSet b;
  const bool synthetic_eval =
      cfg.evaluator.kind != BackendKind::external ||
      (cfg.test_evaluator && cfg.test_evaluator->kind != BackendKind::external);
  if (synthetic_eval || cfg.generation.kind == BackendKind::synthetic) {
    Rng rng(derive_seed(cfg.seed, {kPopulationTag}));
    b.population = make_population(cfg.population, rng);
  }
  b.validation = make_evaluator(cfg, cfg.evaluator, b.population, kValidationTag);
  if (cfg.test_evaluator) b.test = make_evaluator(cfg, *cfg.test_evaluator, b.population, kTestTag);

  if (cfg.generation.kind == BackendKind::synthetic) {
    b.generator = std::make_unique<SyntheticGenerator>(
        *b.population, cfg.generation.model, derive_seed(cfg.seed, {kGeneratorTag}));
  } else {
    b.generator = std::make_unique<ExternalGenerator>(spawn(cfg.generation.process));
    if (!pool_dir.empty()) {
      b.inner_generator = std::move(b.generator);
      b.generator = std::make_unique<ReplayingGenerator>(
          *b.inner_generator, [pool_dir](int round) -> std::optional<ExamplePool> {
            const auto p = pool_dir / ("pool_" + std::to_string(round) + ".jsonl");
            if (!fs::exists(p)) return std::nullopt;
            return load_pool(p, round);
          });
    }
  }

  const auto slot = cfg.orchestrator.slot;
  if (slot == OptimizeSlot::retrieval || slot == OptimizeSlot::diversity) {
    std::unique_ptr<Embedder> e;
    if (cfg.embedder.kind == BackendKind::external) {
      e = std::make_unique<ExternalEmbedder>(spawn(cfg.embedder.process));
    } else {
      e = std::make_unique<HashEmbedder>(cfg.embedder.dim);
    }
    if (!cfg.embedder.cache.empty()) {
      e = std::make_unique<CachedEmbedder>(std::move(e), cfg.embedder.cache);
    }
    b.embedder = std::move(e);
  }

  if (!cfg.data.pool.empty()) b.data.initial_pool = load_pool(cfg.data.pool);
  b.data.train = load_examples(cfg.data.train);
  b.data.validation = load_examples(cfg.data.validation);
  b.data.unlabeled = load_examples(cfg.data.unlabeled);
  if (cfg.orchestrator.mode == Mode::mt && b.population && b.data.train.empty() &&
      b.data.validation.empty()) {
    // Synthetic stand-in for a labeled set split into two disjoint halves.
    const auto all = population_pool(*b.population, 0, false).examples();
    for (std::size_t j = 0; j < all.size(); ++j) {
      (j % 2 == 0 ? b.data.train : b.data.validation).push_back(all[j]);
    }
    if (b.data.unlabeled.empty()) b.data.unlabeled = all;
  }
  return b;
}

std::optional<MilestoneLedger> run_optimize(const RunConfig& cfg, const fs::path& out_dir,
                                            bool resume, std::ostream& log) {
  fs::create_directories(out_dir);
  DirLock lock(out_dir);
  const auto manifest_path = out_dir / "manifest.json";
  const auto ledger_path = out_dir / "ledger.jsonl";
  const auto hash = cfg.hash();

  if (fs::exists(manifest_path)) {
    const auto m = read_manifest(manifest_path);
    const auto previous = m.value("config_hash", std::string());
    if (previous != hash || m.value("seed", std::uint64_t{0}) != cfg.seed) {
      throw Error("output directory " + out_dir.string() + " holds a run with config hash " +
                  previous + "; this config hashes to " + hash);
    }
    if (!resume) {
      throw Error("output directory " + out_dir.string() +
                  " already holds a run; pass --resume to continue it");
    }
    if (m.value("complete", false)) {
      log << "run in " << out_dir.string() << " is already complete; nothing to do\n";
      return std::nullopt;
    }
  } else if (fs::exists(ledger_path) && !resume) {
    throw Error("output directory " + out_dir.string() +
                " already holds a ledger; pass --resume to continue it");
  }

  write_manifest(out_dir, cfg, "optimize", false);
  RunLedger ledger = resume && fs::exists(ledger_path) ? RunLedger::resume(ledger_path)
                                                       : RunLedger::create(ledger_path);
  const auto replayed = ledger.replay_remaining();
  if (replayed > 0) log << "resuming: replaying " << replayed << " recorded evaluations\n";

  auto backends = make_backends(cfg, resume ? out_dir / "pools" : fs::path());
  FileRunStore store(out_dir, hash, cfg.seed);
  RunContext ctx{&ledger, &store, cfg.record_timing};
  auto result = run(cfg.orchestrator, backends.data, backends.view(), ctx);
  if (ledger.replay_remaining() > 0) {
    throw Error("resume mismatch: ledger holds " + std::to_string(ledger.replay_remaining()) +
                " records the reproduced run never reached");
  }
  write_manifest(out_dir, cfg, "optimize", true, &result);
  return result;
}

void run_analyze(const RunConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  fs::create_directories(out_dir);
  DirLock lock(out_dir);
  auto backends = make_backends(cfg);
  ExamplePool pool = backends.data.initial_pool
                         ? *backends.data.initial_pool
                         : backends.generator->generate(GenerateRequest{});
  pool = pool.filter_correct();
  if (pool.size() < 2) throw Error("analysis needs a pool of at least 2 correct examples");

  RunLedger ledger = RunLedger::create(out_dir / "analysis_ledger.jsonl");
  EvaluationSession session(*backends.validation, &ledger, cfg.record_timing);
  const auto imp = importance_scores(session, pool, cfg.analysis.n_design,
                                     derive_seed(cfg.seed, {kImportanceTag}));

  const auto head = provenance(cfg);
  {
    std::ostringstream o;
    o.precision(17);
    o << head << "id,score,rank\n";
    const auto order = ranking_order(imp.scores);
    std::vector<std::size_t> rank(order.size());
    for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r + 1;
    for (std::size_t j = 0; j < pool.size(); ++j) {
      o << pool[j].id << ',' << imp.scores(static_cast<Eigen::Index>(j)) << ',' << rank[j]
        << '\n';
    }
    write_atomic(out_dir / "importance.csv", o.str());
  }

  const auto result = sweep(session, pool, imp.scores, cfg.analysis.step,
                            cfg.analysis.replicates);
  write_atomic(out_dir / "sweep.csv", head + sweep_table(result));

  std::vector<ChartSeries> series;
  for (auto d : {Direction::ascending, Direction::descending}) {
    ChartSeries s;
    s.label = std::string(to_string(d));
    s.color = d == Direction::ascending ? "#c0392b" : "#1e8449";
    std::map<std::size_t, std::pair<double, std::size_t>> by_t;
    for (const auto& p : result.points) {
      if (p.direction != d) continue;
      s.markers.emplace_back(static_cast<double>(p.t), p.metric);
      by_t[p.t].first += p.metric;
      ++by_t[p.t].second;
    }
    for (const auto& [t, acc] : by_t) {
      s.line.emplace_back(static_cast<double>(t), acc.first / static_cast<double>(acc.second));
    }
    series.push_back(std::move(s));
  }
  ChartLayout layout;
  layout.title = "Ranked subset sweep";
  layout.x_label = "subset size t";
  layout.y_label = "metric";
  layout.description = "config_hash=" + cfg.hash() + " seed=" + std::to_string(cfg.seed);
  write_atomic(out_dir / "sweep.svg", line_chart_svg(layout, series));

  log << "analyzed " << pool.size() << " examples: " << ledger.lines().size()
      << " evaluations; ascending area " << sweep_area(result, Direction::ascending)
      << ", descending area " << sweep_area(result, Direction::descending) << '\n';
}

int cmd_optimize(const fs::path& config, const OptimizeOptions& options, std::ostream& out,
                 std::ostream& err) {
  auto cfg = load_or_report(config, err);
  if (!cfg) return kExitConfig;
  if (options.slot) cfg->orchestrator.slot = *options.slot;
  return guarded(err, [&] {
    const auto dir = resolve_output_dir(*cfg);
    const auto result = run_optimize(*cfg, dir, options.resume, out);
    if (!result) return kExitOk;
    for (const auto& e : result->entries) {
      out << e.milestone << "  metric=";
      if (e.metric) {
        out << *e.metric;
      } else {
        out << "n/a";
      }
      out << "  size=" << e.subset_ids.size() << '\n';
    }
    out << "wrote " << dir.string() << '\n';
    return kExitOk;
  });
}

int cmd_baseline(const fs::path& config, OptimizeSlot slot, bool resume, std::ostream& out,
                 std::ostream& err) {
  if (slot == OptimizeSlot::bo) {
    err << "error: baseline slot must be one of rs, retrieval, diversity\n";
    return kExitConfig;
  }
  return cmd_optimize(config, OptimizeOptions{resume, slot}, out, err);
}

int cmd_analyze(const fs::path& config, std::ostream& out, std::ostream& err) {
  auto cfg = load_or_report(config, err);
  if (!cfg) return kExitConfig;
  return guarded(err, [&] {
    const auto dir = resolve_output_dir(*cfg);
    run_analyze(*cfg, dir, out);
    out << "wrote " << dir.string() << '\n';
    return kExitOk;
  });
}

int cmd_report(const fs::path& dir, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto report = build_report(dir);
    out << format_report(report);
    write_atomic(dir / "report.csv", report_csv(report));
    return kExitOk;
  });
}

}  // namespace bridge
