#pragma once

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "pergrad/matrix.hpp"
#include "pergrad/network.hpp"
#include "pergrad/rng.hpp"

namespace pergrad::test {

inline Matrix random_matrix(SplitMix64& rng, std::size_t r, std::size_t c, double lo = -1.0,
                            double hi = 1.0) {
  Matrix m(r, c);
  for (double& v : m.values()) v = rng.uniform(lo, hi);
  return m;
}

inline std::vector<double> random_vector(SplitMix64& rng, std::size_t n, double lo = -1.0,
                                         double hi = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

// |a - b| <= max(rel * max(|a|, |b|), abs)
inline bool close(double a, double b, double rel, double abs) {
  return std::abs(a - b) <= std::max(rel * std::max(std::abs(a), std::abs(b)), abs);
}

inline ::testing::AssertionResult matrices_close(const Matrix& a, const Matrix& b, double rel,
                                                 double abs) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    return ::testing::AssertionFailure() << "shapes " << a.shape() << " vs " << b.shape();
  }
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      if (!close(a(i, j), b(i, j), rel, abs)) {
        return ::testing::AssertionFailure()
               << "entry (" << i << "," << j << "): " << a(i, j) << " vs " << b(i, j);
      }
    }
  }
  return ::testing::AssertionSuccess();
}

// Central-difference Jacobian-transpose-vector product of a row map f at z:
// result[k] = sum_l g[l] * d f(z)[l] / d z[k].
inline std::vector<double> fd_vjp(const std::function<std::vector<double>(std::vector<double>)>& f,
                                  std::vector<double> z, const std::vector<double>& g,
                                  double step) {
  std::vector<double> out(z.size(), 0.0);
  for (std::size_t k = 0; k < z.size(); ++k) {
    const double z0 = z[k];
    z[k] = z0 + step;
    const auto plus = f(z);
    z[k] = z0 - step;
    const auto minus = f(z);
    z[k] = z0;
    for (std::size_t l = 0; l < g.size(); ++l) out[k] += g[l] * (plus[l] - minus[l]) / (2 * step);
  }
  return out;
}

// A small random network with chosen activation, loss and bias pattern.
inline NetworkSpec random_net(SplitMix64& rng, const std::vector<std::size_t>& dims,
                              ActivationKind act, LossKind loss, bool bias) {
  NetworkSpec net;
  net.layers = make_layers(dims, act, act, bias);
  net.loss = loss;
  net = init_weights(std::move(net), rng.next());
  for (auto& w : net.weights) {
    for (double& v : w.values()) v = rng.uniform(-1.0, 1.0);
  }
  return net;
}

}  // namespace pergrad::test
