#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "pergrad/backprop.hpp"
#include "pergrad/synthetic.hpp"
#include "pergrad/verify.hpp"
#include "test_util.hpp"

namespace pergrad {
namespace {

BackwardTrace run(const NetworkSpec& net, const Minibatch& b, OpCounter& c) {
  const auto ft = forward(net, b, c);
  return backward(net, ft, b, c);
}

double worst_fd_error(const NetworkSpec& net, const Minibatch& b, double step) {
  OpCounter c;
  const auto bt = run(net, b, c);
  const auto fd = fd_gradient(net, b, step);
  double worst = 0;
  for (std::size_t i = 0; i < fd.size(); ++i) {
    for (std::size_t k = 0; k < fd[i].size(); ++k) {
      worst = std::max(worst, scaled_error(bt.Wbar[i].values()[k], fd[i].values()[k], 1e-5, 1e-8));
    }
  }
  return worst;
}

TEST(BackwardTest, SingleLinearLayer) {
  NetworkSpec net;
  net.layers = {{2, 1, ActivationKind::identity, false}};
  net.weights = {Matrix{{0.5}, {-1}}};
  OpCounter c;
  const auto bt = run(net, {Matrix{{3, 4}}, Matrix(1, 1)}, c);
  EXPECT_EQ(bt.Zbar[0], (Matrix{{1}}));
  EXPECT_EQ(bt.Wbar[0], (Matrix{{3}, {4}}));
}

TEST(BackwardTest, ZeroUpstreamGivesZeroGradients) {
  SplitMix64 rng(1);
  auto net = test::random_net(rng, {3, 4, 2}, ActivationKind::tanh,
                              LossKind::mean_squared_error, true);
  Minibatch b{test::random_matrix(rng, 3, 3), Matrix(3, 2)};
  OpCounter c;
  b.Y = forward(net, b, c).H.back();  // targets equal outputs
  const auto bt = run(net, b, c);
  for (const auto& z : bt.Zbar) EXPECT_EQ(z, Matrix(z.rows(), z.cols()));
  for (const auto& w : bt.Wbar) EXPECT_EQ(w, Matrix(w.rows(), w.cols()));
}

TEST(BackwardTest, RejectsMismatchedTrace) {
  SplitMix64 rng(2);
  const auto net = test::random_net(rng, {3, 4, 2}, ActivationKind::relu,
                                    LossKind::sum_of_outputs, false);
  const auto other = test::random_net(rng, {3, 4}, ActivationKind::relu,
                                      LossKind::sum_of_outputs, false);
  const auto b = gen_synthetic(2, 3, 2, LossKind::sum_of_outputs, 1);
  OpCounter c;
  const auto ft = forward(other, {b.X, Matrix(2, 4)}, c);
  EXPECT_THROW(backward(net, ft, b, c), ShapeError);
}

TEST(BackwardTest, MatchesFiniteDifferencesOnRandomNets) {
  SplitMix64 rng(3);
  for (auto act : {ActivationKind::identity, ActivationKind::tanh, ActivationKind::sigmoid,
                   ActivationKind::softmax_rowwise}) {
    for (auto loss : kAllLosses) {
      const auto net = test::random_net(rng, {4, 5, 3, 3}, act, loss, true);
      const auto b = gen_synthetic(4, 4, 3, loss, rng.next());
      EXPECT_LE(worst_fd_error(net, b, 1e-5), 1e-5) << to_string(act) << "/" << to_string(loss);
    }
  }
}

TEST(BackwardTest, MatchesFiniteDifferencesWithRelu) {
  // Case builder skips draws whose pre-activations sit near the kink.
  std::size_t checked = 0;
  for (std::size_t idx = 1; idx < 150 && checked < 10; idx += 5) {
    const auto rc = make_random_case(77, idx);
    ASSERT_EQ(rc.net.layers[0].activation, ActivationKind::relu);
    const auto c = check_case(rc);
    if (c.fd_skipped) continue;
    ++checked;
    EXPECT_TRUE(c.fd_ok) << rc.describe() << " error " << c.fd_error;
  }
  EXPECT_GE(checked, 5u);
}

TEST(FdGradientTest, LinearNetworkIsNearlyExact) {
  SplitMix64 rng(4);
  const auto net = test::random_net(rng, {3, 4, 2}, ActivationKind::identity,
                                    LossKind::sum_of_outputs, true);
  const auto b = gen_synthetic(5, 3, 2, net.loss, 2);
  OpCounter c;
  const auto bt = run(net, b, c);
  const auto fd = fd_gradient(net, b, 1e-5);
  for (std::size_t i = 0; i < fd.size(); ++i) {
    EXPECT_TRUE(test::matrices_close(fd[i], bt.Wbar[i], 0, 1e-9));
  }
}

TEST(FdGradientTest, HalvingStepShrinksErrorForTanh) {
  SplitMix64 rng(5);
  const auto net = test::random_net(rng, {3, 3, 2}, ActivationKind::tanh,
                                    LossKind::mean_squared_error, true);
  const auto b = gen_synthetic(3, 3, 2, net.loss, 3);
  OpCounter c;
  const auto bt = run(net, b, c);
  auto max_abs_err = [&](double step) {
    const auto fd = fd_gradient(net, b, step);
    double worst = 0;
    for (std::size_t i = 0; i < fd.size(); ++i) {
      for (std::size_t k = 0; k < fd[i].size(); ++k) {
        worst = std::max(worst, std::abs(fd[i].values()[k] - bt.Wbar[i].values()[k]));
      }
    }
    return worst;
  };
  // Large steps so truncation error dominates rounding.
  EXPECT_LT(max_abs_err(0.05), max_abs_err(0.1));
  EXPECT_LT(max_abs_err(0.025), max_abs_err(0.05));
}

TEST(FdGradientTest, RejectsNonPositiveStep) {
  SplitMix64 rng(6);
  const auto net = test::random_net(rng, {2, 1}, ActivationKind::identity,
                                    LossKind::sum_of_outputs, false);
  EXPECT_THROW(fd_gradient(net, {Matrix(1, 2), Matrix(1, 1)}, 0.0), std::invalid_argument);
}

// Batch Wbar is the sum of single-example Wbars.
TEST(BackwardTest, GradientSumsOverExamples) {
  SplitMix64 rng(7);
  for (auto act : kAllActivations) {
    for (auto loss : kAllLosses) {
      const auto net = test::random_net(rng, {5, 4, 3}, act, loss, true);
      const auto b = gen_synthetic(5, 5, 3, loss, rng.next());
      OpCounter c;
      const auto batch = run(net, b, c);
      std::vector<Matrix> sum;
      for (const auto& w : batch.Wbar) sum.emplace_back(w.rows(), w.cols());
      for (std::size_t j = 0; j < b.size(); ++j) {
        const auto one = run(net, b.row(j), c);
        for (std::size_t i = 0; i < sum.size(); ++i) {
          for (std::size_t k = 0; k < sum[i].size(); ++k) {
            sum[i].values()[k] += one.Wbar[i].values()[k];
          }
        }
      }
      for (std::size_t i = 0; i < sum.size(); ++i) {
        for (std::size_t k = 0; k < sum[i].size(); ++k) {
          const double e = batch.Wbar[i].values()[k];
          EXPECT_NEAR(sum[i].values()[k], e, 1e-10 * (1 + std::abs(e)));
        }
      }
    }
  }
}

// Row j of every Zbar depends only on example j.
TEST(BackwardTest, ZbarRowsAreLocal) {
  SplitMix64 rng(8);
  for (auto act : kAllActivations) {
    const auto net = test::random_net(rng, {3, 4, 4, 2}, act, LossKind::mean_squared_error, true);
    const auto b = gen_synthetic(4, 3, 2, net.loss, rng.next());
    OpCounter c;
    const auto base = run(net, b, c);
    Minibatch perturbed = b;
    for (double& v : perturbed.X.row(2)) v += 0.3;
    for (double& v : perturbed.Y.row(2)) v -= 0.2;
    const auto moved = run(net, perturbed, c);
    for (std::size_t i = 0; i < base.Zbar.size(); ++i) {
      for (std::size_t j : {0, 1, 3}) {
        for (std::size_t k = 0; k < base.Zbar[i].cols(); ++k) {
          EXPECT_EQ(base.Zbar[i](j, k), moved.Zbar[i](j, k));
        }
      }
    }
  }
}

TEST(BackwardTest, FlopCountMatchesClosedForm) {
  SplitMix64 rng(9);
  const std::vector<std::size_t> dims{7, 5, 6, 3};
  for (bool bias : {false, true}) {
    const auto net = test::random_net(rng, dims, ActivationKind::relu,
                                      LossKind::mean_squared_error, bias);
    const std::size_t m = 4;
    const auto b = gen_synthetic(m, 7, 3, net.loss, 1);
    OpCounter fwd, bwd;
    const auto ft = forward(net, b, fwd);
    backward(net, ft, b, bwd);
    std::uint64_t want_bwd = 0, want_fwd = 0;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
      const std::uint64_t in = dims[i], out = dims[i + 1], rows = in + (bias ? 1 : 0);
      want_fwd += 2 * m * rows * out;
      want_bwd += 2 * m * rows * out + 2 * m * in * out;
    }
    EXPECT_EQ(fwd.total(), want_fwd);
    EXPECT_EQ(bwd.total(), want_bwd);
    EXPECT_EQ(bwd.other_flops, 0u);
  }
}

}  // namespace
}  // namespace pergrad
