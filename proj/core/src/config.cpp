#include "bridge/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "bridge/error.hpp"

namespace bridge {

using nlohmann::ordered_json;

namespace {

// Walks one JSON object, remembering which keys were consumed so the rest
// can be reported as unknown.
class Fields {
 public:
  Fields(const ordered_json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "config" : path_, "expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  const ordered_json& at(const std::string& key) { return j_.at(key); }
  std::string path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  template <class T>
  void read(const std::string& key, T& out) {
    if (!has(key)) return;
    out = get<T>(key);
  }

  template <class T>
  T get(const std::string& key) {
    const auto& v = j_.at(key);
    const auto p = path(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) fail(p, "expected a boolean");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) fail(p, "expected a string");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) fail(p, "expected a number");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                     v.template get<std::int64_t>() < 0)) {
        fail(p, "expected a non-negative integer");
      }
    }
    return v.template get<T>();
  }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.contains(key)) fail(path(key), "unknown key");
    }
  }

  [[noreturn]] static void fail(const std::string& path, const std::string& what) {
    throw ParseError("config field \"" + path + "\": " + what);
  }

 private:
  const ordered_json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

BackendKind kind_from(const std::string& path, const std::string& name,
                      std::initializer_list<BackendKind> allowed) {
  for (auto k : allowed) {
    if (to_string(k) == name) return k;
  }
  std::string choices;
  for (auto k : allowed) choices += (choices.empty() ? "" : ", ") + std::string(to_string(k));
  Fields::fail(path, "unknown kind \"" + name + "\" (expected one of " + choices + ")");
}

void read_process(Fields& f, ProcessSpec& p) {
  f.read("command", p.command);
  f.read("timeout_ms", p.timeout_ms);
  if (p.timeout_ms == 0) Fields::fail(f.path("timeout_ms"), "must be >= 1");
}

void require_command(Fields& f, BackendKind kind, const ProcessSpec& p) {
  if (kind == BackendKind::external && p.command.empty()) {
    Fields::fail(f.path("command"), "required for external kind");
  }
}

EvaluatorSpec read_evaluator(const ordered_json& j, const std::string& path) {
  Fields f(j, path);
  EvaluatorSpec e;
  if (f.has("kind")) {
    e.kind = kind_from(f.path("kind"), f.get<std::string>("kind"),
                       {BackendKind::additive, BackendKind::interference,
                        BackendKind::external});
  }
  f.read("noise_sd", e.noise_sd);
  if (!(e.noise_sd >= 0.0)) Fields::fail(f.path("noise_sd"), "must be non-negative");
  if (f.has("seed")) e.seed = f.get<std::uint64_t>("seed");
  read_process(f, e.process);
  require_command(f, e.kind, e.process);
  f.finish();
  return e;
}

ordered_json evaluator_json(const EvaluatorSpec& e) {
  ordered_json j;
  j["kind"] = to_string(e.kind);
  j["noise_sd"] = e.noise_sd;
  j["seed"] = e.seed ? ordered_json(*e.seed) : ordered_json();
  j["command"] = e.process.command;
  j["timeout_ms"] = e.process.timeout_ms;
  return j;
}

std::string resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return p;
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) path = base / path;
  return path.lexically_normal().string();
}

}  // namespace

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::additive: return "additive";
    case BackendKind::interference: return "interference";
    case BackendKind::synthetic: return "synthetic";
    case BackendKind::hash: return "hash";
    case BackendKind::external: return "external";
  }
  return "external";
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

RunConfig parse_config(const ordered_json& j) {
  Fields f(j, "");
  RunConfig c;
  if (!f.has("seed")) Fields::fail("seed", "required");
  c.seed = f.get<std::uint64_t>("seed");
  c.orchestrator.optimizer.seed = c.seed;
  f.read("output_dir", c.output_dir);
  f.read("record_timing", c.record_timing);
  f.read("pool", c.data.pool);
  f.read("train", c.data.train);
  f.read("validation", c.data.validation);
  f.read("unlabeled", c.data.unlabeled);

  auto& o = c.orchestrator;
  if (f.has("mode")) {
    try {
      o.mode = mode_from_string(f.get<std::string>("mode"));
    } catch (const Error& e) {
      Fields::fail("mode", e.what());
    }
  }
  if (f.has("optimize_slot")) {
    try {
      o.slot = slot_from_string(f.get<std::string>("optimize_slot"));
    } catch (const Error& e) {
      Fields::fail("optimize_slot", e.what());
    }
  }
  if (f.has("rounds")) {
    o.rounds = f.get<int>("rounds");
    if (o.rounds < 1) Fields::fail("rounds", "must be >= 1");
  }
  if (f.has("milestones")) {
    const auto& arr = f.at("milestones");
    if (!arr.is_array()) Fields::fail("milestones", "expected an array of strings");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      if (!arr[i].is_string()) {
        Fields::fail("milestones[" + std::to_string(i) + "]", "expected a string");
      }
      o.milestones.push_back(arr[i].get<std::string>());
    }
  }

  if (f.has("optimizer")) {
    Fields g(f.at("optimizer"), "optimizer");
    auto& opt = o.optimizer;
    g.read("n_eval", opt.n_eval);
    if (g.has("n_init")) opt.n_init = g.get<std::size_t>("n_init");
    g.read("beta_lb", opt.scalarization.beta_lb);
    g.read("beta_ub", opt.scalarization.beta_ub);
    g.read("n_starts", opt.n_starts);
    g.read("max_steps", opt.max_steps);
    g.finish();
    try {
      opt.validate();
    } catch (const Error& e) {
      Fields::fail("optimizer", e.what());
    }
  }

  if (f.has("baseline")) {
    Fields g(f.at("baseline"), "baseline");
    if (g.has("retrieval_k")) {
      const auto& v = g.at("retrieval_k");
      if (v.is_string() && v.get<std::string>() == "all") {
        o.baseline.retrieval_k = std::nullopt;
      } else {
        o.baseline.retrieval_k = g.get<std::size_t>("retrieval_k");
      }
    }
    g.read("diversity_k", o.baseline.diversity_k);
    g.finish();
  }

  if (f.has("evaluator")) c.evaluator = read_evaluator(f.at("evaluator"), "evaluator");
  if (f.has("test_evaluator")) {
    c.test_evaluator = read_evaluator(f.at("test_evaluator"), "test_evaluator");
  }

  if (f.has("generation")) {
    Fields g(f.at("generation"), "generation");
    if (g.has("kind")) {
      c.generation.kind = kind_from(g.path("kind"), g.get<std::string>("kind"),
                                    {BackendKind::synthetic, BackendKind::external});
    }
    g.read("pull_rate", c.generation.model.pull_rate);
    g.read("quality_noise_sd", c.generation.model.quality_noise_sd);
    g.read("correctness_slope", c.generation.model.correctness_slope);
    read_process(g, c.generation.process);
    require_command(g, c.generation.kind, c.generation.process);
    g.finish();
    try {
      c.generation.model.validate();
    } catch (const Error& e) {
      Fields::fail("generation", e.what());
    }
  }

  if (f.has("population")) {
    Fields g(f.at("population"), "population");
    auto& p = c.population;
    g.read("size", p.size);
    if (p.size == 0) Fields::fail("population.size", "must be >= 1");
    g.read("quality_mean", p.quality_mean);
    g.read("quality_sd", p.quality_sd);
    g.read("interaction_density", p.interaction_density);
    g.read("interaction_scale", p.interaction_scale);
    g.read("id_prefix", p.id_prefix);
    if (p.quality_sd < 0.0) Fields::fail("population.quality_sd", "must be non-negative");
    if (p.interaction_density < 0.0 || p.interaction_density > 1.0) {
      Fields::fail("population.interaction_density", "must lie in [0,1]");
    }
    if (p.interaction_scale < 0.0) {
      Fields::fail("population.interaction_scale", "must be non-negative");
    }
    g.finish();
  }

  if (f.has("analysis")) {
    Fields g(f.at("analysis"), "analysis");
    g.read("n_design", c.analysis.n_design);
    g.read("step", c.analysis.step);
    g.read("replicates", c.analysis.replicates);
    if (c.analysis.n_design < 2) Fields::fail("analysis.n_design", "must be >= 2");
    if (c.analysis.step < 1) Fields::fail("analysis.step", "must be >= 1");
    if (c.analysis.replicates < 1) Fields::fail("analysis.replicates", "must be >= 1");
    g.finish();
  }

  if (f.has("embedder")) {
    Fields g(f.at("embedder"), "embedder");
    if (g.has("kind")) {
      c.embedder.kind = kind_from(g.path("kind"), g.get<std::string>("kind"),
                                  {BackendKind::hash, BackendKind::external});
    }
    g.read("dim", c.embedder.dim);
    if (c.embedder.dim == 0) Fields::fail("embedder.dim", "must be >= 1");
    g.read("cache", c.embedder.cache);
    read_process(g, c.embedder.process);
    require_command(g, c.embedder.kind, c.embedder.process);
    g.finish();
  }
  f.finish();

  try {
    o.validate();
  } catch (const Error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read config " + path.string());
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("config " + path.string() + ": " + e.what());
  }
  RunConfig c = parse_config(j);
  const auto base = path.parent_path();
  for (auto* p : {&c.data.pool, &c.data.train, &c.data.validation, &c.data.unlabeled,
                  &c.embedder.cache}) {
    *p = resolve(base, *p);
  }
  for (const auto& [key, p] : {std::pair{"pool", c.data.pool}, {"train", c.data.train},
                               {"validation", c.data.validation},
                               {"unlabeled", c.data.unlabeled}}) {
    if (!p.empty() && !std::filesystem::exists(p)) {
      throw ParseError(std::string("config field \"") + key + "\": no such file " + p);
    }
  }
  return c;
}

ordered_json RunConfig::to_json() const {
  const auto& o = orchestrator;
  ordered_json j;
  j["seed"] = seed;
  j["output_dir"] = output_dir;
  j["record_timing"] = record_timing;
  j["pool"] = data.pool;
  j["train"] = data.train;
  j["validation"] = data.validation;
  j["unlabeled"] = data.unlabeled;
  j["mode"] = to_string(o.mode);
  j["optimize_slot"] = to_string(o.slot);
  j["rounds"] = o.rounds;
  j["milestones"] = o.resolved_milestones();
  j["optimizer"] = {{"n_eval", o.optimizer.n_eval},
                    {"n_init", o.optimizer.resolved_n_init()},
                    {"beta_lb", o.optimizer.scalarization.beta_lb},
                    {"beta_ub", o.optimizer.scalarization.beta_ub},
                    {"n_starts", o.optimizer.n_starts},
                    {"max_steps", o.optimizer.max_steps}};
  j["baseline"] = {{"retrieval_k", o.baseline.retrieval_k ? ordered_json(*o.baseline.retrieval_k)
                                                          : ordered_json("all")},
                   {"diversity_k", o.baseline.diversity_k}};
  j["evaluator"] = evaluator_json(evaluator);
  j["test_evaluator"] = test_evaluator ? evaluator_json(*test_evaluator) : ordered_json();
  j["generation"] = {{"kind", to_string(generation.kind)},
                     {"pull_rate", generation.model.pull_rate},
                     {"quality_noise_sd", generation.model.quality_noise_sd},
                     {"correctness_slope", generation.model.correctness_slope},
                     {"command", generation.process.command},
                     {"timeout_ms", generation.process.timeout_ms}};
  j["population"] = {{"size", population.size},
                     {"quality_mean", population.quality_mean},
                     {"quality_sd", population.quality_sd},
                     {"interaction_density", population.interaction_density},
                     {"interaction_scale", population.interaction_scale},
                     {"id_prefix", population.id_prefix}};
  j["analysis"] = {{"n_design", analysis.n_design},
                   {"step", analysis.step},
                   {"replicates", analysis.replicates}};
  j["embedder"] = {{"kind", to_string(embedder.kind)},
                   {"dim", embedder.dim},
                   {"cache", embedder.cache},
                   {"command", embedder.process.command},
                   {"timeout_ms", embedder.process.timeout_ms}};
  return j;
}

std::string RunConfig::hash() const {
  auto j = to_json();
  j.erase("seed");
  j.erase("output_dir");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(j.dump())));
  return buf;
}

}  // namespace bridge
