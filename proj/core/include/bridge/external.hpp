#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>

#include "bridge/embedding.hpp"
#include "bridge/runtime.hpp"
#include "bridge/wire.hpp"

namespace bridge {

// A child process speaking the line protocol on stdin/stdout. One request
// in flight at a time; ids are assigned here and strictly increase.
class ExternalProcess {
 public:
  ExternalProcess(std::string command, std::chrono::milliseconds timeout);
  ~ExternalProcess();

  ExternalProcess(const ExternalProcess&) = delete;
  ExternalProcess& operator=(const ExternalProcess&) = delete;

  // Sends `request` (its id is overwritten) and waits for the matching
  // response. Throws TimeoutError, ProtocolError, or Error on child exit.
  wire::Response call(wire::Request request);

  std::int64_t last_id() const { return last_id_; }
  bool running() const { return pid_ > 0; }

 private:
  void start();
  void terminate();
  std::string read_line(std::int64_t id);
  std::string diagnostics();
  [[noreturn]] void fail_exited(std::int64_t id);

  std::string command_;
  std::chrono::milliseconds timeout_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::FILE* stderr_capture_ = nullptr;
  std::string buffer_;
  std::int64_t last_id_ = 0;
};

class ExternalEvaluator final : public Evaluator {
 public:
  explicit ExternalEvaluator(std::shared_ptr<ExternalProcess> process)
      : process_(std::move(process)) {}
  double evaluate(const ExamplePool& pool, const SubsetVector& subset,
                  const EvalContext& ctx) override;

 private:
  std::shared_ptr<ExternalProcess> process_;
};

class ExternalGenerator final : public Generator {
 public:
  explicit ExternalGenerator(std::shared_ptr<ExternalProcess> process)
      : process_(std::move(process)) {}
  ExamplePool generate(const GenerateRequest& request) override;

 private:
  std::shared_ptr<ExternalProcess> process_;
};

class ExternalEmbedder final : public Embedder {
 public:
  explicit ExternalEmbedder(std::shared_ptr<ExternalProcess> process)
      : process_(std::move(process)) {}
  EmbeddingMatrix embed(const std::vector<std::string>& ids,
                        const std::vector<std::string>& texts) override;

 private:
  std::shared_ptr<ExternalProcess> process_;
};

// Renames ids that collide with `previous` (round suffix) and drops
// repeated ids within the response, keeping the first.
ExamplePool dedupe_generated(std::vector<Example> generated, const ExamplePool* previous,
                             int round);

}  // namespace bridge
