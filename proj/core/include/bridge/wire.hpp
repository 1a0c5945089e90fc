#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "bridge/pool.hpp"

namespace bridge::wire {

// Newline-delimited JSON records exchanged with an external backend over
// its standard streams. Unknown fields are ignored on input.

struct EvaluateRequest {
  std::int64_t id = 0;
  int round = 0;
  std::vector<std::string> subset_ids;
  std::vector<Example> examples;
  bool operator==(const EvaluateRequest&) const = default;
};

struct GenerateRequest {
  std::int64_t id = 0;
  int round = 0;
  std::vector<std::string> seed_ids;
  std::vector<Example> seed_examples;
  bool operator==(const GenerateRequest&) const = default;
};

struct EmbedRequest {
  std::int64_t id = 0;
  std::vector<std::string> ids;
  std::vector<std::string> texts;
  bool operator==(const EmbedRequest&) const = default;
};

using Request = std::variant<EvaluateRequest, GenerateRequest, EmbedRequest>;

struct MetricResponse {
  std::int64_t id = 0;
  double metric = 0.0;
  bool operator==(const MetricResponse&) const = default;
};

struct PoolResponse {
  std::int64_t id = 0;
  std::vector<Example> pool;
  bool operator==(const PoolResponse&) const = default;
};

struct VectorsResponse {
  std::int64_t id = 0;
  std::vector<std::vector<double>> vectors;
  bool operator==(const VectorsResponse&) const = default;
};

using Response = std::variant<MetricResponse, PoolResponse, VectorsResponse>;

std::int64_t request_id(const Request& r);
void set_request_id(Request& r, std::int64_t id);
std::int64_t response_id(const Response& r);
std::string_view op_name(const Request& r);

std::string serialize(const Request& r);
std::string serialize(const Response& r);

// Both throw ProtocolError quoting the offending line.
Request parse_request(std::string_view line);
Response parse_response(std::string_view line);

}  // namespace bridge::wire
