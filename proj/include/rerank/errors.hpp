#pragma once

#include <stdexcept>

namespace rerank {

// Tensor dimension mismatch.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// API misuse: backward without a recorded graph, optimizer step without
// gradients, loss on a greedy rollout, and the like.
struct UsageError : std::logic_error {
  using std::logic_error::logic_error;
};

// Malformed input data or violated record invariants.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace rerank
