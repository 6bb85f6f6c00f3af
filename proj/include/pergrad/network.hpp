#pragma once

// Layered feed-forward networks in the minibatch row convention: row j of
// every activation matrix belongs to example j, and a layer computes
//
//   Z = H_aug * W,   H_next = phi(Z)
//
// where H_aug is H with a column of ones appended when the layer has a bias.
// The bias therefore lives in the last ROW of W.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pergrad/matrix.hpp"
#include "pergrad/rng.hpp"

namespace pergrad {

enum class ActivationKind { identity, relu, tanh, sigmoid, softmax_rowwise };
enum class LossKind { sum_of_outputs, mean_squared_error, softmax_cross_entropy };

inline constexpr std::array kAllActivations = {
    ActivationKind::identity, ActivationKind::relu, ActivationKind::tanh,
    ActivationKind::sigmoid, ActivationKind::softmax_rowwise};
inline constexpr std::array kAllLosses = {LossKind::sum_of_outputs,
                                          LossKind::mean_squared_error,
                                          LossKind::softmax_cross_entropy};

inline std::string_view to_string(ActivationKind k) {
  switch (k) {
    case ActivationKind::identity: return "identity";
    case ActivationKind::relu: return "relu";
    case ActivationKind::tanh: return "tanh";
    case ActivationKind::sigmoid: return "sigmoid";
    case ActivationKind::softmax_rowwise: return "softmax_rowwise";
  }
  return "?";
}

inline std::string_view to_string(LossKind k) {
  switch (k) {
    case LossKind::sum_of_outputs: return "sum_of_outputs";
    case LossKind::mean_squared_error: return "mean_squared_error";
    case LossKind::softmax_cross_entropy: return "softmax_cross_entropy";
  }
  return "?";
}

inline ActivationKind parse_activation(std::string_view s) {
  for (auto k : kAllActivations) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown activation '" + std::string(s) + "'");
}

inline LossKind parse_loss(std::string_view s) {
  for (auto k : kAllLosses) {
    if (to_string(k) == s) return k;
  }
  if (s == "mse") return LossKind::mean_squared_error;
  throw std::invalid_argument("unknown loss '" + std::string(s) + "'");
}

struct LayerSpec {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  ActivationKind activation = ActivationKind::identity;
  bool has_bias = false;

  std::size_t weight_rows() const { return in_dim + (has_bias ? 1 : 0); }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct NetworkSpec {
  std::vector<LayerSpec> layers;
  std::vector<Matrix> weights;
  LossKind loss = LossKind::sum_of_outputs;
  // Multiplies every per-example loss. Only used to probe how gradients
  // respond to loss scaling; 1 for ordinary networks.
  double loss_scale = 1.0;

  std::size_t depth() const { return layers.size(); }
  std::size_t input_dim() const { return layers.front().in_dim; }
  std::size_t output_dim() const { return layers.back().out_dim; }

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

// Checks chaining of layer dims and, when weights are present, their shapes.
inline void validate(const NetworkSpec& net, bool require_weights = true) {
  if (net.layers.empty()) throw ShapeError("network has no layers");
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& l = net.layers[i];
    if (l.in_dim == 0 || l.out_dim == 0) {
      throw ShapeError("layer " + std::to_string(i) + " has a zero dimension");
    }
    if (i > 0 && net.layers[i - 1].out_dim != l.in_dim) {
      throw ShapeError("layer " + std::to_string(i) + " in_dim " + std::to_string(l.in_dim) +
                       " does not match layer " + std::to_string(i - 1) + " out_dim " +
                       std::to_string(net.layers[i - 1].out_dim));
    }
  }
  if (!require_weights) return;
  if (net.weights.size() != net.layers.size()) {
    throw ShapeError("network has " + std::to_string(net.layers.size()) + " layers but " +
                     std::to_string(net.weights.size()) + " weight matrices");
  }
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& l = net.layers[i];
    const auto& w = net.weights[i];
    if (w.rows() != l.weight_rows() || w.cols() != l.out_dim) {
      throw ShapeError("layer " + std::to_string(i) + " weight shape " + w.shape() +
                       ", expected " + Matrix::shape_string(l.weight_rows(), l.out_dim));
    }
  }
}

// Builds layer specs from a dims list (n+1 entries). Hidden layers get
// `hidden`, the last layer gets `output`.
inline std::vector<LayerSpec> make_layers(const std::vector<std::size_t>& dims,
                                          ActivationKind hidden, ActivationKind output,
                                          bool bias) {
  if (dims.size() < 2) throw ShapeError("need at least two layer dims");
  std::vector<LayerSpec> layers;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const bool last = i + 2 == dims.size();
    layers.push_back({dims[i], dims[i + 1], last ? output : hidden, bias});
  }
  return layers;
}

// Weights uniform in [-r, r], r = 1/sqrt(in_dim), drawn row-major layer by
// layer from SplitMix64(seed). Bias rows are zero and consume no draws.
inline NetworkSpec init_weights(NetworkSpec net, std::uint64_t seed) {
  validate(net, /*require_weights=*/false);
  SplitMix64 rng(seed);
  net.weights.clear();
  for (const auto& l : net.layers) {
    const double r = 1.0 / std::sqrt(static_cast<double>(l.in_dim));
    Matrix w(l.weight_rows(), l.out_dim, 0.0);
    for (std::size_t i = 0; i < l.in_dim; ++i) {
      for (std::size_t j = 0; j < l.out_dim; ++j) w(i, j) = rng.uniform(-r, r);
    }
    net.weights.push_back(std::move(w));
  }
  return net;
}

struct Minibatch {
  Matrix X;
  Matrix Y;

  std::size_t size() const { return X.rows(); }

  Minibatch row(std::size_t j) const { return {slice_rows(X, j), slice_rows(Y, j)}; }
};

struct ForwardTrace {
  std::vector<Matrix> H;      // n + 1 entries, H[0] = X
  std::vector<Matrix> Z;      // n entries
  std::vector<Matrix> H_aug;  // n entries, the left operand of each layer's matmul
  std::vector<double> per_example_loss;
  double total_cost = 0.0;
};

namespace detail {

inline void softmax_row(std::span<const double> z, std::span<double> out) {
  if (z.empty()) return;
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    out[k] = std::exp(z[k] - mx);
    sum += out[k];
  }
  for (double& v : out) v /= sum;
}

inline double log_sum_exp(std::span<const double> z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - mx);
  return mx + std::log(sum);
}

}  // namespace detail

inline Matrix apply_activation(ActivationKind kind, const Matrix& z) {
  Matrix h(z.rows(), z.cols());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    auto in = z.row(i);
    auto out = h.row(i);
    switch (kind) {
      case ActivationKind::identity:
        std::copy(in.begin(), in.end(), out.begin());
        break;
      case ActivationKind::relu:
        for (std::size_t k = 0; k < in.size(); ++k) out[k] = in[k] > 0.0 ? in[k] : 0.0;
        break;
      case ActivationKind::tanh:
        for (std::size_t k = 0; k < in.size(); ++k) out[k] = std::tanh(in[k]);
        break;
      case ActivationKind::sigmoid:
        for (std::size_t k = 0; k < in.size(); ++k) out[k] = 1.0 / (1.0 + std::exp(-in[k]));
        break;
      case ActivationKind::softmax_rowwise:
        detail::softmax_row(in, out);
        break;
    }
  }
  return h;
}

// Per-row vector-Jacobian product: row j of the result is
// (dh_j/dz_j)^T * upstream_j. H must be apply_activation(kind, Z).
inline Matrix activation_vjp(ActivationKind kind, const Matrix& z, const Matrix& h,
                             const Matrix& upstream) {
  if (z.rows() != h.rows() || z.cols() != h.cols() || z.rows() != upstream.rows() ||
      z.cols() != upstream.cols()) {
    throw ShapeError("activation_vjp shape mismatch: Z " + z.shape() + ", H " + h.shape() +
                     ", upstream " + upstream.shape());
  }
  Matrix out(z.rows(), z.cols());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    auto zr = z.row(i);
    auto hr = h.row(i);
    auto g = upstream.row(i);
    auto o = out.row(i);
    switch (kind) {
      case ActivationKind::identity:
        std::copy(g.begin(), g.end(), o.begin());
        break;
      case ActivationKind::relu:
        for (std::size_t k = 0; k < g.size(); ++k) o[k] = zr[k] > 0.0 ? g[k] : 0.0;
        break;
      case ActivationKind::tanh:
        for (std::size_t k = 0; k < g.size(); ++k) o[k] = (1.0 - hr[k] * hr[k]) * g[k];
        break;
      case ActivationKind::sigmoid:
        for (std::size_t k = 0; k < g.size(); ++k) o[k] = hr[k] * (1.0 - hr[k]) * g[k];
        break;
      case ActivationKind::softmax_rowwise: {
        // J = diag(s) - s s^T, symmetric, so J^T g = s * (g - <g, s>).
        double dot = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k) dot += g[k] * hr[k];
        for (std::size_t k = 0; k < g.size(); ++k) o[k] = hr[k] * (g[k] - dot);
        break;
      }
    }
  }
  return out;
}

struct LossResult {
  std::vector<double> per_example_loss;
  Matrix grad;
};

// Cross-entropy targets must be probability rows: nonnegative, summing to 1.
inline void check_distribution_rows(const Matrix& y) {
  for (std::size_t i = 0; i < y.rows(); ++i) {
    double sum = 0.0;
    for (double v : y.row(i)) {
      if (!(v >= 0.0)) {
        throw std::invalid_argument("cross-entropy target row " + std::to_string(i) +
                                    " has a negative entry");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw std::invalid_argument("cross-entropy target row " + std::to_string(i) +
                                  " sums to " + std::to_string(sum) + ", not 1");
    }
  }
}

// Loss of each output row against the matching target row, and its gradient
// with respect to the output. softmax_cross_entropy treats the output as
// logits and applies softmax internally, so its gradient is softmax(out) - y.
inline LossResult loss_and_grad(LossKind kind, const Matrix& out, const Matrix& y) {
  if (out.rows() != y.rows()) {
    throw ShapeError("loss: output " + out.shape() + " and target " + y.shape() +
                     " have different row counts");
  }
  if (kind != LossKind::sum_of_outputs && out.cols() != y.cols()) {
    throw ShapeError("loss: output " + out.shape() + " and target " + y.shape() +
                     " have different widths");
  }
  LossResult r{std::vector<double>(out.rows(), 0.0), Matrix(out.rows(), out.cols())};
  switch (kind) {
    case LossKind::sum_of_outputs:
      for (std::size_t i = 0; i < out.rows(); ++i) {
        for (double v : out.row(i)) r.per_example_loss[i] += v;
        for (double& g : r.grad.row(i)) g = 1.0;
      }
      break;
    case LossKind::mean_squared_error:
      for (std::size_t i = 0; i < out.rows(); ++i) {
        for (std::size_t k = 0; k < out.cols(); ++k) {
          const double d = out(i, k) - y(i, k);
          r.per_example_loss[i] += 0.5 * d * d;
          r.grad(i, k) = d;
        }
      }
      break;
    case LossKind::softmax_cross_entropy:
      check_distribution_rows(y);
      for (std::size_t i = 0; i < out.rows(); ++i) {
        auto o = out.row(i);
        const double lse = detail::log_sum_exp(o);
        detail::softmax_row(o, r.grad.row(i));
        for (std::size_t k = 0; k < out.cols(); ++k) {
          r.per_example_loss[i] -= y(i, k) * (o[k] - lse);
          r.grad(i, k) -= y(i, k);
        }
      }
      break;
  }
  return r;
}

inline ForwardTrace forward(const NetworkSpec& net, const Minibatch& batch, OpCounter& counter) {
  validate(net);
  if (batch.X.cols() != net.input_dim()) {
    throw ShapeError("layer 0 expects input width " + std::to_string(net.input_dim()) +
                     ", got X " + batch.X.shape());
  }
  if (batch.Y.rows() != batch.X.rows()) {
    throw ShapeError("X " + batch.X.shape() + " and Y " + batch.Y.shape() +
                     " have different row counts");
  }
  ForwardTrace t;
  t.H.reserve(net.depth() + 1);
  t.H.push_back(batch.X);
  for (std::size_t i = 0; i < net.depth(); ++i) {
    const auto& l = net.layers[i];
    t.H_aug.push_back(l.has_bias ? augment_ones_column(t.H[i]) : t.H[i]);
    t.Z.push_back(matmul(t.H_aug[i], net.weights[i], counter));
    t.H.push_back(apply_activation(l.activation, t.Z[i]));
  }
  auto loss = loss_and_grad(net.loss, t.H.back(), batch.Y);
  t.per_example_loss = std::move(loss.per_example_loss);
  for (double& v : t.per_example_loss) {
    v *= net.loss_scale;
    t.total_cost += v;
  }
  return t;
}

}  // namespace pergrad
