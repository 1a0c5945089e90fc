// Acceptance gates. Prints one PASS/FAIL line per criterion; exits non-zero
// if any fails.
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"
#include "bridge/acquisition.hpp"
#include "bridge/commands.hpp"
#include "bridge/error.hpp"
#include "bridge/external.hpp"
#include "bridge/importance.hpp"
#include "bridge/optimizer.hpp"
#include "bridge/scalarization.hpp"
#include "bridge/surrogate.hpp"

using namespace bridge;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream o;
  o.precision(precision);
  o << v;
  return o.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("bridge_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

class OracleEvaluator final : public Evaluator {
 public:
  explicit OracleEvaluator(std::function<double(const SubsetVector&)> f) : f_(std::move(f)) {}
  double evaluate(const ExamplePool&, const SubsetVector& s, const EvalContext&) override {
    ++calls;
    return f_(s);
  }
  std::size_t calls = 0;

 private:
  std::function<double(const SubsetVector&)> f_;
};

SubsetVector random_subset(std::size_t m, Rng& rng) { return sample_subset(m, rng); }

// 1: posterior against an explicit-inverse oracle.
Verdict gp_exactness() {
  const auto t0 = Clock::now();
  Rng rng(20240601);
  std::uniform_int_distribution<std::size_t> dm(1, 12), dt(1, 10);
  std::normal_distribution<double> dy(0.0, 1.0);
  double worst = 0.0;
  double min_var = std::numeric_limits<double>::infinity();
  for (int inst = 0; inst < 200; ++inst) {
    const auto m = dm(rng);
    const auto t = dt(rng);
    std::vector<SubsetVector> x;
    std::vector<double> y;
    for (std::size_t i = 0; i < t; ++i) {
      x.push_back(random_subset(m, rng));
      y.push_back(dy(rng));
    }
    const auto model = fit_gp(x, y);
    const oracle::DenseGP dense(model);
    std::vector<SubsetVector> queries(x.begin(), x.end());
    for (int q = 0; q < 5; ++q) queries.push_back(random_subset(m, rng));
    for (const auto& q : queries) {
      const auto p = posterior(model, q);
      const auto r = oracle::as_real(q);
      worst = std::max(worst, oracle::relative_error(p.mean, dense.mean_at(r)));
      worst = std::max(worst, oracle::relative_error(p.var, dense.var_at(r)));
      min_var = std::min(min_var, p.var);
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-8 && min_var >= 0.0 && secs < 10.0,
          "200 instances, max rel err " + fmt(worst, 3) + ", min var " + fmt(min_var, 3) +
              ", " + fmt(secs, 3) + " s"};
}

// 2: analytic gradient against central differences of the relaxed mean.
Verdict gradient_fidelity() {
  Rng rng(77);
  std::uniform_int_distribution<std::size_t> dm(2, 12), dt(2, 10);
  std::normal_distribution<double> dy(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double h = 1e-4;
  double worst = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    const auto m = dm(rng);
    const auto t = dt(rng);
    std::vector<SubsetVector> x;
    std::vector<double> y;
    for (std::size_t i = 0; i < t; ++i) {
      x.push_back(random_subset(m, rng));
      y.push_back(dy(rng));
    }
    const auto model = fit_gp(x, y);
    // One binary point and one interior point per model.
    const auto e = random_subset(m, rng);
    std::vector<std::vector<double>> points{oracle::as_real(e), std::vector<double>(m)};
    for (auto& v : points[1]) v = u(rng);
    const auto g_bin = posterior_gradient(model, e);
    const auto g_rel = posterior_gradient_relaxed(model, points[1]);
    for (std::size_t p = 0; p < 2; ++p) {
      const auto& g = p == 0 ? g_bin : g_rel;
      for (std::size_t j = 0; j < m; ++j) {
        auto up = points[p], down = points[p];
        up[j] += h;
        down[j] -= h;
        const double fd =
            (posterior_mean_relaxed(model, up) - posterior_mean_relaxed(model, down)) / (2 * h);
        worst = std::max(worst, std::abs(fd - g(static_cast<Eigen::Index>(j))));
      }
    }
  }
  return {worst <= 1e-5, "50 models, max abs diff " + fmt(worst, 3)};
}

// 3: importance ranks against the additive weights.
Verdict importance_recovery() {
  int good = 0;
  std::string rhos;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(derive_seed(seed, {0x3}));
    PopulationSpec spec;
    spec.size = 10;
    const auto pop = make_population(spec, rng);
    OracleEvaluator f([&](const SubsetVector& s) { return additive_oracle(pop, s); });
    EvaluationSession session(f);
    const auto imp = importance_scores(session, fixture::plain_pool(10), 64, seed);
    const std::vector<double> sc(imp.scores.data(), imp.scores.data() + imp.scores.size());
    const std::vector<double> w(pop.quality.data(), pop.quality.data() + pop.quality.size());
    const double rho = oracle::spearman(sc, w);
    good += rho >= 0.8;
  }
  return {good >= 18, std::to_string(good) + "/20 seeds with Spearman >= 0.8"};
}

// 4: descending sweep dominates ascending on the interference oracle.
Verdict sweep_gap() {
  double asc = 0.0, desc = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(derive_seed(seed, {0x4}));
    PopulationSpec spec;
    spec.size = 20;
    spec.interaction_density = 0.2;
    spec.interaction_scale = 0.3;
    const auto pop = make_population(spec, rng);
    SyntheticEvaluator ev(OracleKind::interference, pop.interaction, pop.normalizer, 0.01, seed);
    EvaluationSession session(ev);
    const auto pool = population_pool(pop, 0, false);
    const auto imp = importance_scores(session, pool, 64, seed);
    const auto s = sweep(session, pool, imp.scores, 1, 1);
    asc += sweep_area(s, Direction::ascending);
    desc += sweep_area(s, Direction::descending);
  }
  return {desc > asc, "area descending " + fmt(desc) + " vs ascending " + fmt(asc)};
}

// 5: BO finds the additive optimum; enumeration is fast.
Verdict optimum_recovery() {
  int hits = 0;
  double enum_secs = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(derive_seed(seed, {0x5}));
    PopulationSpec spec;
    spec.size = 10;
    const auto pop = make_population(spec, rng);
    const auto f = [&](const SubsetVector& s) { return additive_oracle(pop, s); };
    const auto t0 = Clock::now();
    const double top = oracle::enumerate_max(10, f);
    enum_secs = std::max(enum_secs, seconds_since(t0));
    OracleEvaluator ev(f);
    OptimizerConfig c;
    c.n_eval = 50;
    c.seed = seed;
    const auto r = bayes_opt(ev, fixture::plain_pool(10), c);
    hits += r.best_metric >= top - 0.01 * std::abs(top);
  }
  return {hits >= 9 && enum_secs < 1.0, std::to_string(hits) +
                                            "/10 seeds within 1%, enumeration " +
                                            fmt(enum_secs * 1e3, 3) + " ms"};
}

// 6: BO against random search on paired seeds.
Verdict bo_beats_rs() {
  double bo = 0.0, rs = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(derive_seed(seed, {0x6}));
    PopulationSpec spec;
    spec.size = 12;
    spec.interaction_density = 0.2;
    spec.interaction_scale = 0.3;
    const auto pop = make_population(spec, rng);
    const auto f = [&](const SubsetVector& s) { return interference_oracle(pop, s); };
    OptimizerConfig c;
    c.n_eval = 40;
    c.seed = seed;
    OracleEvaluator a(f), b(f);
    bo += bayes_opt(a, fixture::plain_pool(12), c).best_metric;
    rs += random_search(b, fixture::plain_pool(12), c).best_metric;
  }
  return {bo >= rs, "mean best BO " + fmt(bo / 20) + " vs RS " + fmt(rs / 20)};
}

// 7: budget, initial design size and milestone set.
Verdict budget_conformance() {
  OptimizerConfig c;
  c.n_eval = 32;
  c.seed = 1;
  const auto n_init = c.resolved_n_init();
  OracleEvaluator ev([](const SubsetVector& s) { return 0.05 * static_cast<double>(s.cardinality()); });
  const auto r = bayes_opt(ev, fixture::plain_pool(12), c);
  std::size_t init = 0, bo = 0;
  for (const auto& rec : r.records) (rec.phase == Phase::init ? init : bo) += 1;

  RunConfig cfg;
  cfg.seed = 2;
  cfg.orchestrator.rounds = 3;
  cfg.orchestrator.optimizer.n_eval = 32;
  cfg.orchestrator.optimizer.seed = 2;
  cfg.population.size = 12;
  cfg.test_evaluator = EvaluatorSpec{};
  auto backends = make_backends(cfg);
  const auto result = run(cfg.orchestrator, backends.data, backends.view());
  std::vector<std::string> got;
  for (const auto& e : result.entries) got.push_back(e.milestone);
  const std::vector<std::string> want{"1O", "1G", "2O", "2G", "3O"};
  const bool ok = n_init == 16 && ev.calls == 32 && init == 16 && bo == 16 && got == want &&
                  result.stats.optimize_evaluations == 3 * 32;
  std::string ms;
  for (const auto& g : got) ms += (ms.empty() ? "" : ",") + g;
  return {ok, "n_init " + std::to_string(n_init) + ", calls " + std::to_string(ev.calls) +
                  ", per-run optimize evaluations " +
                  std::to_string(result.stats.optimize_evaluations) + ", milestones {" + ms +
                  "}"};
}

// 8: Tchebyshev scalarization contract.
Verdict tch_contract() {
  bool ok = true;
  const auto worked = tch(std::vector<double>{0.6, 0.8}, std::vector<std::size_t>{3, 5}, 0.5);
  ok &= worked.size() == 2 && worked[0] == 0.5 * (0.6 - 0.8) && worked[1] == 0.0;
  ok &= std::abs(worked[0] + 0.1) < 1e-15;
  Rng rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> dc(1, 40);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> g(6);
    std::vector<std::size_t> card(6);
    for (int i = 0; i < 6; ++i) g[i] = u(rng), card[i] = dc(rng);
    for (double beta : {0.0, 1.0}) {
      for (double h : tch(g, card, beta)) ok &= h == 0.0;
    }
    const double beta = 0.01 + 0.98 * u(rng);
    const auto base = tch(g, card, beta);
    // Raise g_0 without exceeding the current maximum.
    const double gmax = *std::max_element(g.begin(), g.end());
    auto g_up = g;
    g_up[0] = g[0] + u(rng) * (gmax - g[0]);
    ok &= tch(g_up, card, beta)[0] >= base[0];
    auto card_down = card;
    if (card[0] > 1) card_down[0] = card[0] - 1;
    ok &= tch(g, card_down, beta)[0] >= base[0];
  }
  return {ok, "worked example, endpoints and monotonicity over 500 random cases"};
}

// 9: EI closed form against Monte-Carlo and analytic cases.
Verdict ei_contract() {
  Rng rng(909);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> uv(0.05, 2.0);
  bool ok = true;
  double worst_z = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const double mean = u(rng), var = uv(rng), inc = u(rng);
    const double sd = std::sqrt(var);
    std::normal_distribution<double> n(mean, sd);
    const std::size_t samples = 10'000'000;
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
      const double imp = std::max(n(rng) - inc, 0.0);
      sum += imp;
      sum_sq += imp * imp;
    }
    const double mc = sum / samples;
    const double se = std::sqrt((sum_sq / samples - mc * mc) / samples);
    const double z = std::abs(expected_improvement(mean, var, inc) - mc) / se;
    worst_z = std::max(worst_z, z);
    ok &= z <= 3.0;
  }
  double worst_exact = 0.0;
  for (double mean : {-0.7, 0.0, 0.4, 2.5}) {
    for (double inc : {-0.3, 0.4, 1.0}) {
      worst_exact = std::max(worst_exact,
                             std::abs(expected_improvement(mean, 0.0, inc) - std::max(mean - inc, 0.0)));
    }
    for (double var : {0.01, 1.0, 4.0}) {
      worst_exact = std::max(worst_exact, std::abs(expected_improvement(mean, var, mean) -
                                                   std::sqrt(var) / std::sqrt(2.0 * M_PI)));
    }
  }
  ok &= worst_exact <= 1e-12;
  return {ok, "max |z| " + fmt(worst_z, 3) + " over 5 triples, analytic max err " +
                  fmt(worst_exact, 3)};
}

RunConfig loop_config(std::uint64_t seed, Mode mode) {
  RunConfig cfg;
  cfg.seed = seed;
  cfg.orchestrator.mode = mode;
  cfg.orchestrator.rounds = 2;
  cfg.orchestrator.optimizer.n_eval = 40;
  cfg.orchestrator.optimizer.seed = seed;
  cfg.population.size = 12;
  cfg.population.interaction_density = 0.2;
  cfg.population.interaction_scale = 0.3;
  cfg.generation.model.pull_rate = 0.5;
  cfg.generation.model.quality_noise_sd = 0.1;
  cfg.evaluator.noise_sd = 0.0;
  cfg.test_evaluator = EvaluatorSpec{};
  if (mode == Mode::iterative_reinforced) {
    cfg.orchestrator.milestones = {"2"};
  } else {
    cfg.orchestrator.milestones = {"1O", "2O"};
  }
  return cfg;
}

double metric_at(const MilestoneLedger& l, const std::string& milestone) {
  const auto* e = l.find(milestone);
  if (e == nullptr || !e->metric) throw Error("missing milestone " + milestone);
  return *e->metric;
}

// 10: outer-loop gains under the pull-rate generation model.
Verdict outer_loop_improvement() {
  int up_wins = 0, up_n = 0, ir_wins = 0, ir_n = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto bcfg = loop_config(seed, Mode::standard);
    auto b = make_backends(bcfg);
    const auto bridge_run = run(bcfg.orchestrator, b.data, b.view());
    const auto icfg = loop_config(seed, Mode::iterative_reinforced);
    auto i = make_backends(icfg);
    const auto ir_run = run(icfg.orchestrator, i.data, i.view());
    const double o1 = metric_at(bridge_run, "1O"), o2 = metric_at(bridge_run, "2O");
    const double r2 = metric_at(ir_run, "2");
    if (o2 != o1) ++up_n, up_wins += o2 > o1;
    if (o2 != r2) ++ir_n, ir_wins += o2 > r2;
  }
  const double p_up = oracle::sign_test_p(up_wins, up_n);
  const double p_ir = oracle::sign_test_p(ir_wins, ir_n);
  return {p_up < 0.05 && p_ir < 0.05,
          "2O>1O " + std::to_string(up_wins) + "/" + std::to_string(up_n) + " (p=" +
              fmt(p_up, 3) + "), 2O>IR2 " + std::to_string(ir_wins) + "/" +
              std::to_string(ir_n) + " (p=" + fmt(p_ir, 3) + ")"};
}

nlohmann::ordered_json run_config_json(const fs::path& out) {
  return {{"seed", 19},
          {"output_dir", out.string()},
          {"rounds", 2},
          {"optimizer", {{"n_eval", 10}, {"n_starts", 4}}},
          {"population", {{"size", 12}, {"interaction_density", 0.2}, {"interaction_scale", 0.3}}},
          {"evaluator", {{"kind", "interference"}, {"noise_sd", 0.05}}},
          {"test_evaluator", {{"kind", "interference"}, {"noise_sd", 0.05}}}};
}

// 11: byte-identical reruns and kill-and-resume.
Verdict determinism_and_resume() {
  const auto dir = scratch("determinism");
  std::ostringstream log;
  const auto cfg_a = parse_config(run_config_json(dir / "a"));
  const auto cfg_b = parse_config(run_config_json(dir / "b"));
  run_optimize(cfg_a, dir / "a", false, log);
  run_optimize(cfg_b, dir / "b", false, log);
  const auto ledger = slurp(dir / "a" / "ledger.jsonl");
  const auto milestones = slurp(dir / "a" / "milestones.jsonl");
  bool identical = ledger == slurp(dir / "b" / "ledger.jsonl") &&
                   milestones == slurp(dir / "b" / "milestones.jsonl");

  std::vector<std::string> lines;
  {
    std::istringstream in(ledger);
    for (std::string l; std::getline(in, l);) lines.push_back(l);
  }
  std::size_t resumed_ok = 0;
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const auto out = dir / "kill";
    fs::remove_all(out);
    fs::create_directories(out);
    fs::copy(dir / "a" / "pools", out / "pools");
    // A run killed after n evaluations with a half-written line.
    {
      std::ofstream l(out / "ledger.jsonl", std::ios::binary);
      for (std::size_t i = 0; i < n; ++i) l << lines[i] << '\n';
      l << lines[n].substr(0, lines[n].size() / 2);
    }
    auto manifest = nlohmann::ordered_json::parse(slurp(dir / "a" / "manifest.json"));
    manifest["complete"] = false;
    std::ofstream(out / "manifest.json") << manifest.dump(2);
    run_optimize(parse_config(run_config_json(out)), out, true, log);
    resumed_ok += slurp(out / "ledger.jsonl") == ledger &&
                  slurp(out / "milestones.jsonl") == milestones;
  }
  fs::remove_all(dir);
  return {identical && resumed_ok == lines.size(),
          std::string(identical ? "identical" : "different") + " reruns, " +
              std::to_string(resumed_ok) + "/" + std::to_string(lines.size()) +
              " kill points resumed exactly"};
}

std::string stub(const std::string& mode) { return std::string(BRIDGE_STUB_WORKER) + " " + mode; }

template <class E, class F>
bool raises(F&& f, const std::string& needle) {
  try {
    f();
  } catch (const E& e) {
    return std::string(e.what()).find(needle) != std::string::npos;
  } catch (...) {
    return false;
  }
  return false;
}

// 12: line protocol against the stub child.
Verdict protocol_conformance() {
  using namespace std::chrono_literals;
  std::vector<std::string> failed;
  const auto check = [&](bool ok, const std::string& what) {
    if (!ok) failed.push_back(what);
  };
  const auto pool = fixture::plain_pool(4);

  auto proc = std::make_shared<ExternalProcess>(stub("normal 0.75"), 5000ms);
  ExternalEvaluator ev(proc);
  check(ev.evaluate(pool, SubsetVector::from_string("1010"), {Phase::bo, 1, 3}) == 0.75,
        "evaluate");
  ExternalGenerator gen(proc);
  const auto pool0 = gen.generate(GenerateRequest{});
  check(pool0.size() == 8 && !pool0[5].correct, "generate");
  const auto pool1 = gen.generate(GenerateRequest{1, {pool0[0], pool0[1]}, &pool0});
  check(pool1.size() == 2 && pool1[0].id == "g0#r1", "generate dedupe");
  ExternalEmbedder emb(proc);
  const auto m = emb.embed({"a", "b"}, {"x", "yy"});
  check(m.rows() == 2 && m.dim() == 3, "embed");
  check(proc->last_id() == 4, "request ids");

  const auto dir = scratch("protocol");
  for (const std::string mode : {"malformed", "hang", "wrong-id", "exit"}) {
    const auto path = dir / (mode + ".jsonl");
    auto ledger = RunLedger::create(path);
    ExternalEvaluator bad(std::make_shared<ExternalProcess>(stub(mode), 300ms));
    EvaluationSession session(bad, &ledger);
    const auto call = [&] {
      session.evaluate(pool, SubsetVector::from_string("1100"), Phase::init, 1, 1);
    };
    bool ok = false;
    if (mode == "malformed") ok = raises<ProtocolError>(call, "this is not a record");
    if (mode == "hang") ok = raises<TimeoutError>(call, "request 1 timed out");
    if (mode == "wrong-id") ok = raises<ProtocolError>(call, "does not match request 1");
    if (mode == "exit") ok = raises<Error>(call, "fatal configuration problem");
    check(ok, mode);
    check(ledger.lines().empty() && slurp(path).empty(), mode + " ledger");
  }
  {
    const auto path = dir / "crash.jsonl";
    auto ledger = RunLedger::create(path);
    ExternalEvaluator flaky(std::make_shared<ExternalProcess>(stub("crash-after 2"), 1000ms));
    EvaluationSession session(flaky, &ledger);
    int done = 0;
    try {
      for (int i = 1; i <= 4; ++i, ++done) {
        session.evaluate(pool, SubsetVector::from_string("0110"), Phase::init, 1, i);
      }
    } catch (const Error&) {
    }
    auto resumed = RunLedger::resume(path);
    check(done == 2 && resumed.replay_remaining() == 2, "crash ledger");
  }
  fs::remove_all(dir);
  std::string detail = "round-trips, malformed, timeout, wrong id, exit, crash";
  for (const auto& f : failed) detail += "; failed: " + f;
  return {failed.empty(), detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<int, std::function<Verdict()>>> criteria{
      {1, gp_exactness},        {2, gradient_fidelity},     {3, importance_recovery},
      {4, sweep_gap},           {5, optimum_recovery},      {6, bo_beats_rs},
      {7, budget_conformance},  {8, tch_contract},          {9, ei_contract},
      {10, outer_loop_improvement}, {11, determinism_and_resume}, {12, protocol_conformance},
  };
  int failures = 0;
  for (const auto& [n, fn] : criteria) {
    Verdict v;
    const auto t0 = Clock::now();
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += !v.pass;
    std::cout << (v.pass ? "PASS " : "FAIL ") << n << ": " << v.detail << " ["
              << fmt(seconds_since(t0), 3) << " s]" << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
