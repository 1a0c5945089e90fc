#include "bridge/wire.hpp"

#include <cmath>

#include <json.hpp>

#include "bridge/error.hpp"

namespace bridge::wire {

namespace {

using Json = nlohmann::ordered_json;

Json examples_json(const std::vector<Example>& examples) {
  Json arr = Json::array();
  for (const auto& e : examples) arr.push_back(to_json(e));
  return arr;
}

std::vector<Example> examples_from(const Json& arr) {
  if (!arr.is_array()) throw ParseError("expected an array of examples");
  std::vector<Example> out;
  for (const auto& item : arr) {
    if (!item.is_object()) throw ParseError("example is not an object");
    Json known = Json::object();
    for (const char* f : {"id", "input", "rationale", "output", "correct", "meta"}) {
      if (item.contains(f)) known[f] = item[f];
    }
    out.push_back(example_from_json(known));
  }
  return out;
}

Json parse_object(std::string_view line) {
  Json j;
  try {
    j = Json::parse(line);
  } catch (const nlohmann::json::exception&) {
    throw ProtocolError("malformed line: " + std::string(line));
  }
  if (!j.is_object()) throw ProtocolError("malformed line (not an object): " + std::string(line));
  if (!j.contains("id") || !j["id"].is_number_integer()) {
    throw ProtocolError("malformed line (missing integer \"id\"): " + std::string(line));
  }
  return j;
}

template <typename F>
auto guarded(std::string_view line, F&& f) {
  try {
    return f();
  } catch (const ProtocolError&) {
    throw;
  } catch (const std::exception& e) {
    throw ProtocolError("malformed line (" + std::string(e.what()) + "): " + std::string(line));
  }
}

}  // namespace

std::int64_t request_id(const Request& r) {
  return std::visit([](const auto& v) { return v.id; }, r);
}

void set_request_id(Request& r, std::int64_t id) {
  std::visit([id](auto& v) { v.id = id; }, r);
}

std::int64_t response_id(const Response& r) {
  return std::visit([](const auto& v) { return v.id; }, r);
}

std::string_view op_name(const Request& r) {
  switch (r.index()) {
    case 0: return "evaluate";
    case 1: return "generate";
    default: return "embed";
  }
}

std::string serialize(const Request& r) {
  Json j;
  if (const auto* e = std::get_if<EvaluateRequest>(&r)) {
    j["id"] = e->id;
    j["op"] = "evaluate";
    j["round"] = e->round;
    j["subset_ids"] = e->subset_ids;
    j["examples"] = examples_json(e->examples);
  } else if (const auto* g = std::get_if<GenerateRequest>(&r)) {
    j["id"] = g->id;
    j["op"] = "generate";
    j["round"] = g->round;
    j["seed_ids"] = g->seed_ids;
    j["seed_examples"] = examples_json(g->seed_examples);
  } else {
    const auto& b = std::get<EmbedRequest>(r);
    j["id"] = b.id;
    j["op"] = "embed";
    j["ids"] = b.ids;
    j["texts"] = b.texts;
  }
  return j.dump();
}

std::string serialize(const Response& r) {
  Json j;
  if (const auto* m = std::get_if<MetricResponse>(&r)) {
    j["id"] = m->id;
    j["metric"] = m->metric;
  } else if (const auto* p = std::get_if<PoolResponse>(&r)) {
    j["id"] = p->id;
    j["pool"] = examples_json(p->pool);
  } else {
    const auto& v = std::get<VectorsResponse>(r);
    j["id"] = v.id;
    j["vectors"] = v.vectors;
  }
  return j.dump();
}

Request parse_request(std::string_view line) {
  const Json j = parse_object(line);
  return guarded(line, [&]() -> Request {
    const auto op = j.at("op").get<std::string>();
    const auto id = j["id"].get<std::int64_t>();
    if (op == "evaluate") {
      return EvaluateRequest{id, j.at("round").get<int>(),
                             j.at("subset_ids").get<std::vector<std::string>>(),
                             examples_from(j.at("examples"))};
    }
    if (op == "generate") {
      return GenerateRequest{id, j.at("round").get<int>(),
                             j.at("seed_ids").get<std::vector<std::string>>(),
                             examples_from(j.at("seed_examples"))};
    }
    if (op == "embed") {
      return EmbedRequest{id, j.at("ids").get<std::vector<std::string>>(),
                          j.at("texts").get<std::vector<std::string>>()};
    }
    throw ProtocolError("unknown op \"" + op + "\": " + std::string(line));
  });
}

Response parse_response(std::string_view line) {
  const Json j = parse_object(line);
  return guarded(line, [&]() -> Response {
    const auto id = j["id"].get<std::int64_t>();
    if (j.contains("metric")) {
      if (!j["metric"].is_number()) throw ParseError("\"metric\" is not a number");
      const double metric = j["metric"].get<double>();
      if (!std::isfinite(metric)) throw ParseError("\"metric\" is not finite");
      return MetricResponse{id, metric};
    }
    if (j.contains("pool")) return PoolResponse{id, examples_from(j["pool"])};
    if (j.contains("vectors")) {
      return VectorsResponse{id, j["vectors"].get<std::vector<std::vector<double>>>()};
    }
    throw ParseError("no \"metric\", \"pool\" or \"vectors\" field");
  });
}

}  // namespace bridge::wire
