#pragma once

// Trick-vs-naive benchmark and the clipping demonstration.
//
// Both methods deliver what a training step with per-example norms needs: the
// batch gradient plus s. The trick gets s from the batch pass it already ran.
// The naive method runs the same batch pass and then backprops each example
// separately, so its flops_norms_extra holds m single-example forward and
// backward passes plus the squared sums over every Wbar entry.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pergrad/backprop.hpp"
#include "pergrad/network.hpp"
#include "pergrad/perexample_ops.hpp"
#include "pergrad/pergrad.hpp"
#include "pergrad/rng.hpp"
#include "pergrad/synthetic.hpp"

namespace pergrad {

inline constexpr const char* kVersion = "0.1.0";

struct BenchConfig {
  std::vector<std::size_t> layer_dims{784, 512, 512, 10};
  std::size_t batch_size = 64;
  ActivationKind activation = ActivationKind::relu;
  LossKind loss = LossKind::softmax_cross_entropy;
  std::uint64_t seed = 42;
  std::size_t trials = 10;
  std::vector<std::string> methods{"trick", "naive"};

  friend bool operator==(const BenchConfig&, const BenchConfig&) = default;
};

struct MethodResult {
  std::string method;
  std::int64_t wall_ns_median = 0;
  std::int64_t wall_ns_min = 0;
  std::uint64_t flops_forward = 0;
  std::uint64_t flops_backward = 0;
  std::uint64_t flops_norms_extra = 0;
  double s_checksum = 0.0;

  std::uint64_t flops_total() const {
    return flops_forward + flops_backward + flops_norms_extra;
  }

  friend bool operator==(const MethodResult&, const MethodResult&) = default;
};

struct BenchReport {
  std::string version = kVersion;
  BenchConfig config;
  std::vector<MethodResult> results;
  bool checksums_agree = true;

  const MethodResult* find(const std::string& method) const {
    for (const auto& r : results) {
      if (r.method == method) return &r;
    }
    return nullptr;
  }

  friend bool operator==(const BenchReport&, const BenchReport&) = default;
};

inline void validate(const BenchConfig& cfg, bool timing) {
  if (cfg.layer_dims.size() < 2) throw std::invalid_argument("--dims needs at least two entries");
  for (auto d : cfg.layer_dims) {
    if (d == 0) throw std::invalid_argument("layer dims must be positive");
  }
  if (cfg.batch_size == 0) throw std::invalid_argument("batch size must be positive");
  if (cfg.loss == LossKind::softmax_cross_entropy && cfg.layer_dims.back() < 2) {
    throw std::invalid_argument("cross-entropy needs an output width of at least 2");
  }
  if (timing && cfg.trials < 3) throw std::invalid_argument("timing needs at least 3 trials");
  if (timing && cfg.methods.empty()) throw std::invalid_argument("no methods selected");
  for (const auto& m : cfg.methods) {
    if (m != "trick" && m != "naive") {
      throw std::invalid_argument("unknown method '" + m + "'");
    }
  }
}

struct BenchProblem {
  NetworkSpec net;
  Minibatch batch;
};

// Hidden layers use the configured activation; the output layer is identity
// and every layer has a bias.
inline BenchProblem make_bench_problem(const BenchConfig& cfg) {
  NetworkSpec net;
  net.layers = make_layers(cfg.layer_dims, cfg.activation, ActivationKind::identity, true);
  net.loss = cfg.loss;
  net = init_weights(std::move(net), derive_seed(cfg.seed, 1));
  auto batch = gen_synthetic(cfg.batch_size, cfg.layer_dims.front(), cfg.layer_dims.back(),
                             cfg.loss, derive_seed(cfg.seed, 2));
  return {std::move(net), std::move(batch)};
}

struct MethodRun {
  OpCounter forward, backward, extra;
  PerExampleStats stats;
};

inline MethodRun run_trick(const NetworkSpec& net, const Minibatch& batch) {
  MethodRun r;
  const auto ft = forward(net, batch, r.forward);
  const auto bt = backward(net, ft, batch, r.backward);
  r.stats = per_example_sq_norms(ft, bt, r.extra);
  return r;
}

inline MethodRun run_naive(const NetworkSpec& net, const Minibatch& batch) {
  MethodRun r;
  const auto ft = forward(net, batch, r.forward);
  const auto bt = backward(net, ft, batch, r.backward);
  r.stats = naive_per_example_sq_norms(net, batch, r.extra);
  return r;
}

namespace detail {

template <class Fn>
std::vector<std::int64_t> time_trials(std::size_t trials, Fn&& fn) {
  fn();  // warmup, untimed
  std::vector<std::int64_t> ns;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    const auto stop = std::chrono::steady_clock::now();
    ns.push_back(std::chrono::duration_cast<std::chrono::nanoseconds>(stop - start).count());
  }
  return ns;
}

inline std::int64_t median(std::vector<std::int64_t> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

}  // namespace detail

// Flops are read from one counted run; with timing on, each method is then
// run `trials` more times after one warmup and the median and min reported.
inline BenchReport run_bench(const BenchConfig& cfg, const BenchProblem& problem,
                             bool timing = true) {
  validate(cfg, timing);
  BenchReport report;
  report.config = cfg;
  for (const auto& method : cfg.methods) {
    auto fn = [&] {
      return method == "trick" ? run_trick(problem.net, problem.batch)
                               : run_naive(problem.net, problem.batch);
    };
    const MethodRun counted = fn();
    MethodResult res;
    res.method = method;
    res.flops_forward = counted.forward.total();
    res.flops_backward = counted.backward.total();
    res.flops_norms_extra = counted.extra.total();
    res.s_checksum = counted.stats.checksum();
    if (timing) {
      volatile double sink = 0.0;
      const auto ns = detail::time_trials(cfg.trials, [&] { sink = fn().stats.checksum(); });
      res.wall_ns_median = detail::median(ns);
      res.wall_ns_min = *std::min_element(ns.begin(), ns.end());
    }
    report.results.push_back(res);
  }
  for (const auto& r : report.results) {
    const double ref = report.results.front().s_checksum;
    const double scale = std::max({std::abs(ref), std::abs(r.s_checksum), 1e-300});
    if (std::abs(ref - r.s_checksum) > 1e-9 * scale) report.checksums_agree = false;
  }
  return report;
}

inline BenchReport run_bench(const BenchConfig& cfg, bool timing = true) {
  validate(cfg, timing);
  return run_bench(cfg, make_bench_problem(cfg), timing);
}

struct ClipDemoResult {
  double max_norm = 0.0;
  std::vector<double> norms_before;
  std::vector<double> factors;
  std::vector<double> norms_after;

  bool within_limit() const {
    return std::all_of(norms_after.begin(), norms_after.end(),
                       [&](double v) { return v <= max_norm * (1.0 + 1e-9); });
  }

  friend bool operator==(const ClipDemoResult&, const ClipDemoResult&) = default;
};

// Norms after clipping are recomputed from the rescaled Zbar rows.
inline ClipDemoResult run_clip_demo(const NetworkSpec& net, const Minibatch& batch,
                                    double max_norm) {
  const ClipPolicy policy(max_norm);
  OpCounter counter;
  const auto ft = forward(net, batch, counter);
  const auto bt = backward(net, ft, batch, counter);
  const auto before = per_example_sq_norms(ft, bt, counter);
  ClipDemoResult out;
  out.max_norm = max_norm;
  out.norms_before = before.total_norm;
  out.factors = clip_factors(before, policy);
  BackwardTrace clipped;
  clipped.Zbar = rescale_zbar(bt, out.factors);
  clipped.Wbar = recompute_wbar(ft, clipped.Zbar, counter);
  out.norms_after = per_example_sq_norms(ft, clipped, counter).total_norm;
  return out;
}

inline ClipDemoResult run_clip_demo(const BenchConfig& cfg, double max_norm) {
  validate(cfg, /*timing=*/false);
  const auto problem = make_bench_problem(cfg);
  return run_clip_demo(problem.net, problem.batch, max_norm);
}

}  // namespace pergrad
