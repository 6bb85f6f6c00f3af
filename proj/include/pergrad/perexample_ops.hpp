#pragma once

// Operations built on per-example norms: clipping each example's gradient to
// a maximum total norm by rescaling rows of Zbar and redoing only the final
// Wbar matmul of each layer, and norm-proportional sampling weights.

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "pergrad/backprop.hpp"
#include "pergrad/matrix.hpp"
#include "pergrad/network.hpp"
#include "pergrad/pergrad.hpp"

namespace pergrad {

class ClipPolicy {
 public:
  explicit ClipPolicy(double max_norm) : max_norm_(max_norm) {
    if (!(max_norm > 0.0)) {
      throw std::invalid_argument("max_norm must be positive, got " + std::to_string(max_norm));
    }
  }
  double max_norm() const { return max_norm_; }

 private:
  double max_norm_;
};

// min(1, max_norm / total_norm[j]); zero-norm examples keep factor 1.
inline std::vector<double> clip_factors(const PerExampleStats& stats, const ClipPolicy& policy) {
  std::vector<double> f(stats.total_norm.size(), 1.0);
  for (std::size_t j = 0; j < f.size(); ++j) {
    const double norm = stats.total_norm[j];
    if (norm > policy.max_norm()) f[j] = policy.max_norm() / norm;
  }
  return f;
}

// Row j of every layer's Zbar scaled by factors[j]. Earlier layers are not
// re-propagated; each layer's rows are scaled independently.
inline std::vector<Matrix> rescale_zbar(const BackwardTrace& btrace,
                                        std::span<const double> factors) {
  std::vector<Matrix> out;
  out.reserve(btrace.Zbar.size());
  for (const auto& z : btrace.Zbar) out.push_back(scale_rows(z, factors));
  return out;
}

// Wbar'[i] = H_aug[i]^T Zbar'[i].
inline std::vector<Matrix> recompute_wbar(const ForwardTrace& ftrace,
                                          const std::vector<Matrix>& zbar_prime,
                                          OpCounter& counter) {
  if (zbar_prime.size() != ftrace.H_aug.size()) {
    throw ShapeError("recompute_wbar: " + std::to_string(zbar_prime.size()) +
                     " Zbar matrices for " + std::to_string(ftrace.H_aug.size()) + " layers");
  }
  std::vector<Matrix> out;
  out.reserve(zbar_prime.size());
  for (std::size_t i = 0; i < zbar_prime.size(); ++i) {
    if (ftrace.H_aug[i].rows() != zbar_prime[i].rows()) {
      throw ShapeError("recompute_wbar layer " + std::to_string(i) + ": H_aug " +
                       ftrace.H_aug[i].shape() + " vs Zbar' " + zbar_prime[i].shape());
    }
    out.push_back(matmul_tn(ftrace.H_aug[i], zbar_prime[i], counter));
  }
  return out;
}

// Sampling probabilities proportional to total norm; uniform if all are zero.
inline std::vector<double> importance_weights(const PerExampleStats& stats) {
  const std::size_t m = stats.total_norm.size();
  if (m == 0) throw std::invalid_argument("importance_weights needs at least one example");
  double sum = 0.0;
  for (double v : stats.total_norm) sum += v;
  std::vector<double> p(m, 1.0 / static_cast<double>(m));
  if (sum > 0.0) {
    for (std::size_t j = 0; j < m; ++j) p[j] = stats.total_norm[j] / sum;
  }
  return p;
}

}  // namespace pergrad
