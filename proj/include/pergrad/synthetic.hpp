#pragma once

#include <cstddef>
#include <cstdint>

#include "pergrad/network.hpp"
#include "pergrad/rng.hpp"

namespace pergrad {

// X uniform in [-1, 1]. Targets depend on the loss: uniform in [-1, 1] for
// MSE, random one-hot rows for cross-entropy, zeros for sum_of_outputs
// (which ignores them). X is drawn first, then Y, from one SplitMix64 stream.
inline Minibatch gen_synthetic(std::size_t m, std::size_t in_dim, std::size_t target_dim,
                               LossKind loss, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Minibatch b{Matrix(m, in_dim), Matrix(m, target_dim)};
  for (double& v : b.X.values()) v = rng.uniform(-1.0, 1.0);
  switch (loss) {
    case LossKind::mean_squared_error:
      for (double& v : b.Y.values()) v = rng.uniform(-1.0, 1.0);
      break;
    case LossKind::softmax_cross_entropy:
      for (std::size_t j = 0; j < m; ++j) b.Y(j, rng.range(0, target_dim - 1)) = 1.0;
      break;
    case LossKind::sum_of_outputs:
      break;
  }
  return b;
}

}  // namespace pergrad
