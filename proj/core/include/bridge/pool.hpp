#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bridge/rng.hpp"

namespace bridge {

// One candidate demonstration: {input, rationale, output} plus the
// correctness flag used by the reinforced filter.
struct Example {
  std::string id;
  std::string input;
  std::string rationale;
  std::string output;
  bool correct = false;
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();

  bool operator==(const Example&) const = default;
};

nlohmann::ordered_json to_json(const Example& example);
// Strict: exactly the six pool-file fields, nothing more.
Example example_from_json(const nlohmann::ordered_json& j);

// Strips a round suffix ("ex7#r2" -> "ex7").
std::string base_id(std::string_view id);
std::string round_id(std::string_view id, int round);

class ExamplePool {
 public:
  ExamplePool() = default;
  explicit ExamplePool(std::vector<Example> examples, int round = 0);

  const std::vector<Example>& examples() const { return examples_; }
  const Example& operator[](std::size_t i) const { return examples_[i]; }
  std::size_t size() const { return examples_.size(); }
  bool empty() const { return examples_.empty(); }
  int round() const { return round_; }

  std::optional<std::size_t> index_of(std::string_view id) const;
  bool contains(std::string_view id) const { return index_of(id).has_value(); }

  // Keeps only examples with correct == true, order preserved.
  ExamplePool filter_correct() const;

 private:
  std::vector<Example> examples_;
  int round_ = 0;
};

// Binary indicator over a pool, aligned to pool order.
class SubsetVector {
 public:
  SubsetVector() = default;
  explicit SubsetVector(std::size_t m) : bits_(m, 0) {}
  explicit SubsetVector(std::vector<std::uint8_t> bits);

  static SubsetVector full(std::size_t m);
  static SubsetVector from_indices(std::size_t m,
                                   std::span<const std::size_t> indices);
  // "101" -> bits {1,0,1}
  static SubsetVector from_string(std::string_view bits);

  std::size_t size() const { return bits_.size(); }
  bool test(std::size_t j) const { return bits_[j] != 0; }
  void set(std::size_t j, bool value = true) { bits_[j] = value ? 1 : 0; }
  void flip(std::size_t j) { bits_[j] ^= 1; }
  std::size_t cardinality() const;
  bool empty_selection() const { return cardinality() == 0; }
  std::vector<std::size_t> indices() const;
  const std::vector<std::uint8_t>& bits() const { return bits_; }
  std::string to_string() const;

  bool operator==(const SubsetVector&) const = default;
  auto operator<=>(const SubsetVector&) const = default;

 private:
  std::vector<std::uint8_t> bits_;
};

struct SubsetHash {
  std::size_t operator()(const SubsetVector& s) const;
};

std::size_t hamming_distance(const SubsetVector& a, const SubsetVector& b);

enum class Phase { init, bo, rs, sweep, milestone };

std::string_view to_string(Phase phase);
Phase phase_from_string(std::string_view name);

struct EvaluationRecord {
  SubsetVector subset;
  double metric = 0.0;
  Phase phase = Phase::init;
  int round = 0;
  int iteration = 0;
  std::optional<double> beta;
  std::uint64_t wallclock_ms = 0;
};

// Line-delimited pool file, one Example per line.
ExamplePool load_pool(const std::filesystem::path& path, int round = 0);
ExamplePool parse_pool(std::string_view text, int round = 0);
void save_pool(const ExamplePool& pool, const std::filesystem::path& path);
std::string serialize_pool(const ExamplePool& pool);

SubsetVector subset_from_ids(const ExamplePool& pool,
                             std::span<const std::string> ids);
std::vector<std::string> ids_of(const ExamplePool& pool,
                                const SubsetVector& subset);
std::vector<Example> examples_of(const ExamplePool& pool,
                                 const SubsetVector& subset);

// Cardinality ~ Uniform{1..m}, then a uniform member set of that size.
SubsetVector sample_subset(std::size_t m, Rng& rng);

}  // namespace bridge
