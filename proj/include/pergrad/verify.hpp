#pragma once

// Randomized cross-checks: single-pass per-example norms against the
// one-example-at-a-time oracle, and backprop against finite differences.
// Every case is rebuilt from (seed, case index) alone so a failure line is
// enough to reproduce it.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "pergrad/backprop.hpp"
#include "pergrad/network.hpp"
#include "pergrad/pergrad.hpp"
#include "pergrad/rng.hpp"
#include "pergrad/synthetic.hpp"

namespace pergrad {

inline constexpr double kOracleRelTol = 1e-9;
inline constexpr double kOracleAbsTol = 1e-12;
inline constexpr double kFdRelTol = 1e-5;
inline constexpr double kFdAbsTol = 1e-8;
inline constexpr double kFdStep = 1e-5;

// |a - b| measured against max(|a|, |b|), with magnitudes below abs/rel
// treated as abs/rel. The pair agrees to (rel, abs) iff the result <= rel.
inline double scaled_error(double a, double b, double rel, double abs) {
  const double scale = std::max({std::abs(a), std::abs(b), abs / rel});
  return std::abs(a - b) / scale;
}

struct RandomCase {
  std::uint64_t seed = 0;
  std::size_t index = 0;
  NetworkSpec net;
  Minibatch batch;

  std::string describe() const {
    std::ostringstream os;
    os << "case " << index << " (seed " << seed << "): dims ";
    os << net.layers.front().in_dim;
    for (const auto& l : net.layers) os << ',' << l.out_dim;
    os << " bias ";
    for (const auto& l : net.layers) os << (l.has_bias ? '1' : '0');
    os << " m=" << batch.size() << " activation=" << to_string(net.layers.front().activation)
       << " loss=" << to_string(net.loss);
    return os.str();
  }
};

struct CaseLimits {
  std::size_t max_dim = 8;
  std::size_t max_batch = 6;
  std::size_t max_layers = 4;
};

// Activation and loss cycle with the case index (15 combinations); depth,
// widths, batch size, bias flags, weights and data come from the case seed.
// Bias rows are drawn nonzero so they influence the forward pass.
inline RandomCase make_random_case(std::uint64_t seed, std::size_t index,
                                   const CaseLimits& limits = {}) {
  RandomCase rc;
  rc.seed = seed;
  rc.index = index;
  SplitMix64 rng(derive_seed(seed, index));
  const auto act = kAllActivations[index % kAllActivations.size()];
  const auto loss = kAllLosses[(index / kAllActivations.size()) % kAllLosses.size()];
  const std::size_t n = rng.range(1, std::max<std::size_t>(limits.max_layers, 1));
  std::vector<std::size_t> dims;
  for (std::size_t i = 0; i <= n; ++i) {
    dims.push_back(rng.range(1, std::max<std::size_t>(limits.max_dim, 1)));
  }
  // Cross-entropy over a single class is constant; give it two.
  if (loss == LossKind::softmax_cross_entropy && dims.back() < 2) dims.back() = 2;
  const std::size_t m = rng.range(1, std::max<std::size_t>(limits.max_batch, 1));

  NetworkSpec net;
  net.loss = loss;
  for (std::size_t i = 0; i < n; ++i) {
    net.layers.push_back({dims[i], dims[i + 1], act, rng.next() % 2 == 1});
  }
  net = init_weights(std::move(net), rng.next());
  for (std::size_t i = 0; i < n; ++i) {
    if (!net.layers[i].has_bias) continue;
    auto& w = net.weights[i];
    for (double& v : w.row(w.rows() - 1)) v = rng.uniform(-0.5, 0.5);
  }
  rc.batch = gen_synthetic(m, dims.front(), dims.back(), loss, rng.next());
  rc.net = std::move(net);
  return rc;
}

// True when some ReLU pre-activation is close enough to zero that a
// finite-difference probe could straddle the kink.
inline bool near_relu_kink(const NetworkSpec& net, const ForwardTrace& t, double margin) {
  for (std::size_t i = 0; i < net.depth(); ++i) {
    if (net.layers[i].activation != ActivationKind::relu) continue;
    for (double z : t.Z[i].values()) {
      if (std::abs(z) < margin) return true;
    }
  }
  return false;
}

struct CaseCheck {
  double oracle_error = 0.0;  // worst scaled error, trick vs naive
  double fd_error = 0.0;      // worst scaled error, backward vs finite differences
  bool fd_skipped = false;
  bool oracle_ok = true;
  bool fd_ok = true;
};

inline CaseCheck check_case(const RandomCase& rc, bool with_fd = true) {
  CaseCheck c;
  OpCounter counter;
  const auto ft = forward(rc.net, rc.batch, counter);
  const auto bt = backward(rc.net, ft, rc.batch, counter);
  const auto trick = per_example_sq_norms(ft, bt, counter);
  const auto naive = naive_per_example_sq_norms(rc.net, rc.batch, counter);
  for (std::size_t i = 0; i < trick.s.size(); ++i) {
    for (std::size_t j = 0; j < trick.s[i].size(); ++j) {
      c.oracle_error = std::max(c.oracle_error, scaled_error(trick.s[i][j], naive.s[i][j],
                                                             kOracleRelTol, kOracleAbsTol));
    }
  }
  c.oracle_ok = c.oracle_error <= kOracleRelTol;

  if (!with_fd) return c;
  if (near_relu_kink(rc.net, ft, 1e-4)) {
    c.fd_skipped = true;
    return c;
  }
  const auto fd = fd_gradient(rc.net, rc.batch, kFdStep);
  for (std::size_t i = 0; i < fd.size(); ++i) {
    for (std::size_t k = 0; k < fd[i].size(); ++k) {
      c.fd_error = std::max(c.fd_error, scaled_error(bt.Wbar[i].values()[k],
                                                     fd[i].values()[k], kFdRelTol, kFdAbsTol));
    }
  }
  c.fd_ok = c.fd_error <= kFdRelTol;
  return c;
}

struct VerifyOptions {
  std::size_t cases = 200;
  std::uint64_t seed = 42;
  CaseLimits limits;
};

struct VerifySummary {
  std::size_t cases = 0;
  std::size_t fd_checked = 0;
  double worst_oracle_error = 0.0;
  double worst_fd_error = 0.0;
  std::vector<std::string> failures;  // ordered by case index

  bool ok() const { return failures.empty(); }

  std::string text() const {
    std::ostringstream os;
    os << std::setprecision(3) << std::scientific;
    if (cases == 0) {
      os << "warning: 0 cases requested, nothing verified\n";
    }
    os << "cases: " << cases << "\n";
    os << "oracle equivalence: worst relative error " << worst_oracle_error << " (tolerance "
       << kOracleRelTol << ")\n";
    os << "finite differences: " << fd_checked << " checked, " << (cases - fd_checked)
       << " skipped near relu kinks, worst relative error " << worst_fd_error
       << " (tolerance " << kFdRelTol << ")\n";
    for (const auto& f : failures) os << "FAIL " << f << "\n";
    os << (ok() ? "PASS" : "FAIL") << "\n";
    return os.str();
  }
};

inline VerifySummary run_verify(const VerifyOptions& opts) {
  VerifySummary sum;
  sum.cases = opts.cases;
  for (std::size_t idx = 0; idx < opts.cases; ++idx) {
    const auto rc = make_random_case(opts.seed, idx, opts.limits);
    const auto c = check_case(rc);
    sum.worst_oracle_error = std::max(sum.worst_oracle_error, c.oracle_error);
    if (!c.fd_skipped) {
      ++sum.fd_checked;
      sum.worst_fd_error = std::max(sum.worst_fd_error, c.fd_error);
    }
    std::ostringstream err;
    err << std::setprecision(3) << std::scientific;
    if (!c.oracle_ok) err << " oracle error " << c.oracle_error;
    if (!c.fd_ok) err << " finite-difference error " << c.fd_error;
    if (!err.str().empty()) sum.failures.push_back(rc.describe() + ":" + err.str());
  }
  return sum;
}

}  // namespace pergrad
