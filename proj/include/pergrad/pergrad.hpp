#pragma once

// Per-example parameter-gradient norms.
//
// Because every layer treats examples independently, the gradient of example
// j's loss with respect to W is the rank-1 matrix outer(h_aug_j, zbar_j), where
// h_aug_j is row j of the layer's augmented input and zbar_j is row j of
// dC/dZ. Its squared Frobenius norm factors as |h_aug_j|^2 * |zbar_j|^2, so
// the norms come out of one ordinary backward pass at O(m * sum of dims) cost.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "pergrad/backprop.hpp"
#include "pergrad/matrix.hpp"
#include "pergrad/network.hpp"

namespace pergrad {

struct PerExampleStats {
  // s[i][j]: squared norm of dL_j/dW_i (layer i, example j), bias row included.
  std::vector<std::vector<double>> s;
  // sqrt(sum_i s[i][j])
  std::vector<double> total_norm;

  std::size_t layers() const { return s.size(); }
  std::size_t examples() const { return total_norm.size(); }

  double checksum() const {
    double acc = 0.0;
    for (const auto& layer : s) {
      for (double v : layer) acc += v;
    }
    return acc;
  }
};

namespace detail {

inline void finish_totals(PerExampleStats& stats, std::size_t m, OpCounter& counter) {
  stats.total_norm.assign(m, 0.0);
  for (const auto& layer : stats.s) {
    for (std::size_t j = 0; j < m; ++j) stats.total_norm[j] += layer[j];
  }
  for (double& v : stats.total_norm) v = std::sqrt(v);
  // n*m additions into the running sums, m square roots.
  counter.other_flops += static_cast<std::uint64_t>(stats.s.size()) * m + m;
}

inline void check_traces(const ForwardTrace& f, const BackwardTrace& b) {
  if (f.H_aug.size() != b.Zbar.size()) {
    throw ShapeError("forward trace has " + std::to_string(f.H_aug.size()) +
                     " layers, backward trace has " + std::to_string(b.Zbar.size()));
  }
  for (std::size_t i = 0; i < b.Zbar.size(); ++i) {
    if (f.H_aug[i].rows() != b.Zbar[i].rows()) {
      throw ShapeError("layer " + std::to_string(i) + ": H_aug " + f.H_aug[i].shape() +
                       " and Zbar " + b.Zbar[i].shape() + " disagree on batch size");
    }
  }
}

}  // namespace detail

// Flops added on top of forward + backward, exactly:
//   sum_i 2m(out_i + in_i + bias_i)   two row_sq_norms per layer
// + n*m                                 the per-layer products
// + n*m + m                             totals and square roots
inline PerExampleStats per_example_sq_norms(const ForwardTrace& ftrace,
                                            const BackwardTrace& btrace, OpCounter& counter) {
  detail::check_traces(ftrace, btrace);
  const std::size_t n = btrace.Zbar.size();
  const std::size_t m = n == 0 ? 0 : btrace.Zbar[0].rows();
  PerExampleStats stats;
  stats.s.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
#ifdef PERGRAD_MUTATION_IGNORE_BIAS_COLUMN
    // Deliberately wrong variant, compiled only by the mutation test.
    const Matrix& input = ftrace.H[i];
#else
    const Matrix& input = ftrace.H_aug[i];
#endif
    auto zbar_sq = row_sq_norms(btrace.Zbar[i], counter);
    auto h_sq = row_sq_norms(input, counter);
    for (std::size_t j = 0; j < m; ++j) zbar_sq[j] *= h_sq[j];
    counter.other_flops += m;
    stats.s.push_back(std::move(zbar_sq));
  }
  detail::finish_totals(stats, m, counter);
  return stats;
}

// Reference route: backprop once per example with a batch of one, then sum
// the squares of every weight-gradient entry.
inline PerExampleStats naive_per_example_sq_norms(const NetworkSpec& net,
                                                  const Minibatch& batch, OpCounter& counter) {
  const std::size_t m = batch.size();
  const std::size_t n = net.depth();
  PerExampleStats stats;
  stats.s.assign(n, std::vector<double>(m, 0.0));
  for (std::size_t j = 0; j < m; ++j) {
    const Minibatch one = batch.row(j);
    const ForwardTrace ft = forward(net, one, counter);
    const BackwardTrace bt = backward(net, ft, one, counter);
    for (std::size_t i = 0; i < n; ++i) stats.s[i][j] = sq_frobenius(bt.Wbar[i], counter);
  }
  detail::finish_totals(stats, m, counter);
  return stats;
}

// grads[j][i] = outer(H_aug[i] row j, Zbar[i] row j). Materializes m*n weight
// sized matrices, so only for inspection and testing.
inline std::vector<std::vector<Matrix>> per_example_grads(const ForwardTrace& ftrace,
                                                          const BackwardTrace& btrace) {
  detail::check_traces(ftrace, btrace);
  const std::size_t n = btrace.Zbar.size();
  const std::size_t m = n == 0 ? 0 : btrace.Zbar[0].rows();
  std::vector<std::vector<Matrix>> grads(m);
  for (std::size_t j = 0; j < m; ++j) {
    grads[j].reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      grads[j].push_back(outer(ftrace.H_aug[i].row(j), btrace.Zbar[i].row(j)));
    }
  }
  return grads;
}

}  // namespace pergrad
