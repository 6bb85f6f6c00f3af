#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "pergrad/matrix.hpp"
#include "pergrad/network.hpp"

namespace pergrad {

struct BackwardTrace {
  std::vector<Matrix> Zbar;  // dC/dZ per layer, m x out_dim
  std::vector<Matrix> Wbar;  // dC/dW per layer, shaped like the weights
};

// One reverse sweep over the layers. Each layer costs exactly two matmuls:
// Wbar = H_aug^T Zbar and Hbar = Zbar W^T (the bias row of W is skipped
// because the ones column has nothing upstream of it). Hbar is formed for the
// first layer too, which keeps the per-layer cost uniform.
inline BackwardTrace backward(const NetworkSpec& net, const ForwardTrace& trace,
                              const Minibatch& batch, OpCounter& counter) {
  validate(net);
  const std::size_t n = net.depth();
  if (trace.Z.size() != n || trace.H_aug.size() != n || trace.H.size() != n + 1) {
    throw ShapeError("forward trace has " + std::to_string(trace.Z.size()) +
                     " layers, network has " + std::to_string(n));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (trace.H_aug[i].rows() != batch.size() ||
        trace.H_aug[i].cols() != net.layers[i].weight_rows() ||
        trace.Z[i].cols() != net.layers[i].out_dim) {
      throw ShapeError("forward trace does not match network at layer " + std::to_string(i));
    }
  }

  auto loss = loss_and_grad(net.loss, trace.H[n], batch.Y);
  Matrix upstream = std::move(loss.grad);
  if (net.loss_scale != 1.0) {
    for (double& v : upstream.values()) v *= net.loss_scale;
  }

  BackwardTrace bt;
  bt.Zbar.resize(n);
  bt.Wbar.resize(n);
  for (std::size_t i = n; i-- > 0;) {
    const auto& l = net.layers[i];
    bt.Zbar[i] = activation_vjp(l.activation, trace.Z[i], trace.H[i + 1], upstream);
    bt.Wbar[i] = matmul_tn(trace.H_aug[i], bt.Zbar[i], counter);
    upstream = matmul_nt(bt.Zbar[i], net.weights[i], counter, l.in_dim);
  }
  return bt;
}

// Central-difference gradient of the total cost with respect to every weight.
// Costs two forward passes per weight entry; meant as an oracle only.
inline std::vector<Matrix> fd_gradient(const NetworkSpec& net, const Minibatch& batch,
                                       double step = 1e-5) {
  if (!(step > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  validate(net);
  NetworkSpec probe = net;
  OpCounter scratch;
  std::vector<Matrix> grads;
  for (std::size_t i = 0; i < net.depth(); ++i) {
    Matrix g(net.weights[i].rows(), net.weights[i].cols());
    for (std::size_t r = 0; r < g.rows(); ++r) {
      for (std::size_t c = 0; c < g.cols(); ++c) {
        const double w = net.weights[i](r, c);
        probe.weights[i](r, c) = w + step;
        const double plus = forward(probe, batch, scratch).total_cost;
        probe.weights[i](r, c) = w - step;
        const double minus = forward(probe, batch, scratch).total_cost;
        probe.weights[i](r, c) = w;
        g(r, c) = (plus - minus) / (2.0 * step);
      }
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

}  // namespace pergrad
