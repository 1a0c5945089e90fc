#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bridge/orchestrator.hpp"

namespace bridge {

enum class BackendKind { additive, interference, synthetic, hash, external };
std::string_view to_string(BackendKind kind);

struct ProcessSpec {
  std::string command;
  std::uint64_t timeout_ms = 60000;
};

struct EvaluatorSpec {
  BackendKind kind = BackendKind::interference;
  double noise_sd = 0.0;
  // Defaults to a stream derived from the run seed.
  std::optional<std::uint64_t> seed;
  ProcessSpec process;
};

struct GeneratorSpec {
  BackendKind kind = BackendKind::synthetic;
  GenerationModelSpec model;
  ProcessSpec process;
};

struct EmbedderSpec {
  BackendKind kind = BackendKind::hash;
  std::size_t dim = 32;
  ProcessSpec process;
  std::string cache;
};

struct AnalysisSpec {
  std::size_t n_design = 64;
  std::size_t step = 1;
  std::size_t replicates = 3;
};

struct DataPaths {
  std::string pool;
  std::string train;
  std::string validation;
  std::string unlabeled;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::string output_dir = "bridge_out";
  bool record_timing = false;
  DataPaths data;
  OrchestratorConfig orchestrator;
  EvaluatorSpec evaluator;
  std::optional<EvaluatorSpec> test_evaluator;
  GeneratorSpec generation;
  PopulationSpec population;
  AnalysisSpec analysis;
  EmbedderSpec embedder;

  // Canonical JSON form with every default filled in.
  nlohmann::ordered_json to_json() const;
  // Hash of the canonical form without seed and output_dir.
  std::string hash() const;
};

// Throws ParseError naming the offending field path (e.g. "optimizer.n_eval").
RunConfig parse_config(const nlohmann::ordered_json& j);
RunConfig load_config(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace bridge
