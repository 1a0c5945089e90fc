#include "bridge/pool.hpp"

#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

#include "bridge/error.hpp"

namespace bridge {

namespace {

constexpr std::string_view kRoundTag = "#r";

const char* const kExampleFields[] = {"id",     "input",   "rationale",
                                      "output", "correct", "meta"};

}  // namespace

nlohmann::ordered_json to_json(const Example& e) {
  nlohmann::ordered_json j;
  j["id"] = e.id;
  j["input"] = e.input;
  j["rationale"] = e.rationale;
  j["output"] = e.output;
  j["correct"] = e.correct;
  j["meta"] = e.meta;
  return j;
}

Example example_from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object()) throw ParseError("example record is not an object");
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (const char* f : kExampleFields) known = known || key == f;
    if (!known) throw ParseError("unknown field \"" + key + "\"");
  }
  for (const char* f : kExampleFields) {
    if (!j.contains(f)) throw ParseError(std::string("missing field \"") + f + "\"");
  }
  auto text = [&](const char* f) {
    if (!j[f].is_string()) throw ParseError(std::string("field \"") + f + "\" must be a string");
    return j[f].get<std::string>();
  };
  Example e;
  e.id = text("id");
  if (e.id.empty()) throw ParseError("field \"id\" must be non-empty");
  e.input = text("input");
  e.rationale = text("rationale");
  e.output = text("output");
  if (!j["correct"].is_boolean()) throw ParseError("field \"correct\" must be a boolean");
  e.correct = j["correct"].get<bool>();
  if (!j["meta"].is_object()) throw ParseError("field \"meta\" must be an object");
  e.meta = j["meta"];
  return e;
}

std::string base_id(std::string_view id) {
  auto pos = id.rfind(kRoundTag);
  if (pos == std::string_view::npos) return std::string(id);
  auto digits = id.substr(pos + kRoundTag.size());
  if (digits.empty()) return std::string(id);
  for (char c : digits) {
    if (c < '0' || c > '9') return std::string(id);
  }
  return std::string(id.substr(0, pos));
}

std::string round_id(std::string_view id, int round) {
  return base_id(id) + std::string(kRoundTag) + std::to_string(round);
}

ExamplePool::ExamplePool(std::vector<Example> examples, int round)
    : examples_(std::move(examples)), round_(round) {
  std::unordered_set<std::string> seen;
  for (const auto& e : examples_) {
    if (!seen.insert(e.id).second) throw Error("duplicate example id \"" + e.id + "\"");
  }
}

std::optional<std::size_t> ExamplePool::index_of(std::string_view id) const {
  for (std::size_t i = 0; i < examples_.size(); ++i) {
    if (examples_[i].id == id) return i;
  }
  return std::nullopt;
}

ExamplePool ExamplePool::filter_correct() const {
  std::vector<Example> kept;
  for (const auto& e : examples_) {
    if (e.correct) kept.push_back(e);
  }
  return ExamplePool(std::move(kept), round_);
}

SubsetVector::SubsetVector(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  for (auto& b : bits_) b = b ? 1 : 0;
}

SubsetVector SubsetVector::full(std::size_t m) {
  return SubsetVector(std::vector<std::uint8_t>(m, 1));
}

SubsetVector SubsetVector::from_indices(std::size_t m,
                                        std::span<const std::size_t> indices) {
  SubsetVector s(m);
  for (auto i : indices) {
    if (i >= m) throw Error("subset index " + std::to_string(i) + " out of range");
    s.set(i);
  }
  return s;
}

SubsetVector SubsetVector::from_string(std::string_view bits) {
  SubsetVector s(bits.size());
  for (std::size_t j = 0; j < bits.size(); ++j) {
    if (bits[j] != '0' && bits[j] != '1') throw ParseError("invalid bit string");
    s.set(j, bits[j] == '1');
  }
  return s;
}

std::size_t SubsetVector::cardinality() const {
  return static_cast<std::size_t>(std::accumulate(bits_.begin(), bits_.end(), 0));
}

std::vector<std::size_t> SubsetVector::indices() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < bits_.size(); ++j) {
    if (bits_[j]) out.push_back(j);
  }
  return out;
}

std::string SubsetVector::to_string() const {
  std::string s(bits_.size(), '0');
  for (std::size_t j = 0; j < bits_.size(); ++j) {
    if (bits_[j]) s[j] = '1';
  }
  return s;
}

std::size_t SubsetHash::operator()(const SubsetVector& s) const {
  std::uint64_t h = 1469598103934665603ULL;
  for (auto b : s.bits()) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  return static_cast<std::size_t>(mix64(h ^ s.size()));
}

std::size_t hamming_distance(const SubsetVector& a, const SubsetVector& b) {
  if (a.size() != b.size()) throw Error("subset length mismatch");
  std::size_t d = 0;
  for (std::size_t j = 0; j < a.size(); ++j) d += a.bits()[j] != b.bits()[j];
  return d;
}

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::init: return "init";
    case Phase::bo: return "bo";
    case Phase::rs: return "rs";
    case Phase::sweep: return "sweep";
    case Phase::milestone: return "milestone";
  }
  return "init";
}

Phase phase_from_string(std::string_view name) {
  if (name == "init") return Phase::init;
  if (name == "bo") return Phase::bo;
  if (name == "rs") return Phase::rs;
  if (name == "sweep") return Phase::sweep;
  if (name == "milestone") return Phase::milestone;
  throw ParseError("unknown phase \"" + std::string(name) + "\"");
}

ExamplePool parse_pool(std::string_view text, int round) {
  std::vector<Example> examples;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    Example e;
    try {
      e = example_from_json(nlohmann::ordered_json::parse(line));
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError("pool line " + std::to_string(line_no) + ": " + ex.what());
    } catch (const ParseError& ex) {
      throw ParseError("pool line " + std::to_string(line_no) + ": " + ex.what());
    }
    if (!seen.insert(e.id).second) {
      throw ParseError("pool line " + std::to_string(line_no) + ": duplicate id \"" + e.id + "\"");
    }
    examples.push_back(std::move(e));
  }
  if (examples.empty()) throw ParseError("empty pool");
  return ExamplePool(std::move(examples), round);
}

ExamplePool load_pool(const std::filesystem::path& path, int round) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read pool file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_pool(buf.str(), round);
}

std::string serialize_pool(const ExamplePool& pool) {
  std::string out;
  for (const auto& e : pool.examples()) {
    out += to_json(e).dump();
    out += '\n';
  }
  return out;
}

void save_pool(const ExamplePool& pool, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write pool file " + path.string());
  out << serialize_pool(pool);
  if (!out) throw Error("failed writing pool file " + path.string());
}

SubsetVector subset_from_ids(const ExamplePool& pool,
                             std::span<const std::string> ids) {
  SubsetVector s(pool.size());
  for (const auto& id : ids) {
    auto idx = pool.index_of(id);
    if (!idx) throw Error("unknown example id \"" + id + "\"");
    s.set(*idx);
  }
  return s;
}

std::vector<std::string> ids_of(const ExamplePool& pool, const SubsetVector& subset) {
  if (subset.size() != pool.size()) throw Error("subset length does not match pool size");
  std::vector<std::string> ids;
  for (auto j : subset.indices()) ids.push_back(pool[j].id);
  return ids;
}

std::vector<Example> examples_of(const ExamplePool& pool, const SubsetVector& subset) {
  if (subset.size() != pool.size()) throw Error("subset length does not match pool size");
  std::vector<Example> out;
  for (auto j : subset.indices()) out.push_back(pool[j]);
  return out;
}

SubsetVector sample_subset(std::size_t m, Rng& rng) {
  if (m == 0) throw Error("cannot sample a subset of an empty pool");
  std::uniform_int_distribution<std::size_t> card_dist(1, m);
  const std::size_t card = card_dist(rng);
  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  // Partial Fisher-Yates: the first `card` slots are a uniform card-subset.
  for (std::size_t i = 0; i < card; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, m - 1);
    std::swap(perm[i], perm[pick(rng)]);
  }
  SubsetVector s(m);
  for (std::size_t i = 0; i < card; ++i) s.set(perm[i]);
  return s;
}

}  // namespace bridge
