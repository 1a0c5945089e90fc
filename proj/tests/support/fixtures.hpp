#pragma once

#include <functional>
#include <string>
#include <vector>

#include "bridge/runtime.hpp"

namespace fixture {

class FnEvaluator final : public bridge::Evaluator {
 public:
  explicit FnEvaluator(std::function<double(const bridge::SubsetVector&)> f)
      : f_(std::move(f)) {}
  double evaluate(const bridge::ExamplePool&, const bridge::SubsetVector& s,
                  const bridge::EvalContext&) override {
    ++calls;
    return f_(s);
  }
  int calls = 0;

 private:
  std::function<double(const bridge::SubsetVector&)> f_;
};

inline bridge::ExamplePool plain_pool(std::size_t m, const std::string& prefix = "ex") {
  std::vector<bridge::Example> ex;
  for (std::size_t j = 0; j < m; ++j) {
    bridge::Example e;
    e.id = prefix + std::to_string(j);
    e.input = "input " + std::to_string(j);
    e.output = "out";
    e.correct = true;
    ex.push_back(e);
  }
  return bridge::ExamplePool(std::move(ex));
}

}  // namespace fixture
