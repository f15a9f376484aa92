#include <random>

#include <gtest/gtest.h>

#include "cellsleep/marl/mlp.hpp"
#include "finite_difference.hpp"

using namespace cellsleep;
using namespace cellsleep::marl;

TEST(Mlp, ZeroNetGivesZero) {
  Mlp net({5, 8, 3});
  const Vector y = net.forward_one(Vector::Ones(5));
  EXPECT_TRUE(y.isZero(0.0));
}

TEST(Mlp, ScalarLinearLayer) {
  Mlp net({1, 1});
  net.weight(0)(0, 0) = 2.0;
  EXPECT_DOUBLE_EQ(net.forward_one(Vector::Constant(1, 3.0))[0], 6.0);
}

TEST(Mlp, HiddenLayersRectify) {
  Mlp net({1, 1, 1});
  net.weight(0)(0, 0) = 1.0;
  net.weight(1)(0, 0) = 1.0;
  EXPECT_DOUBLE_EQ(net.forward_one(Vector::Constant(1, -4.0))[0], 0.0);
  EXPECT_DOUBLE_EQ(net.forward_one(Vector::Constant(1, 4.0))[0], 4.0);
}

TEST(Mlp, WidthMismatchIsRejected) {
  Mlp net({3, 2});
  EXPECT_THROW(net.forward(Matrix::Ones(4, 1)), ContractViolation);
  EXPECT_THROW(Mlp({3}), ContractViolation);
  EXPECT_THROW(Mlp({3, 0, 2}), ContractViolation);
}

TEST(Mlp, BatchColumnsAreIndependent) {
  std::mt19937_64 rng(1);
  Mlp net({4, 16, 3});
  net.init_orthogonal(rng, 1.0);
  Matrix x = Matrix::Random(4, 6);
  const Matrix y = net.forward(x);
  for (int j = 0; j < 6; ++j) EXPECT_TRUE(y.col(j).isApprox(net.forward_one(x.col(j)), 1e-14));
}

TEST(Mlp, OrthogonalInitGains) {
  std::mt19937_64 rng(2);
  Mlp net({14, 32, 32, 12});
  net.init_orthogonal(rng, 0.01);
  // wide layer: rows orthonormal times gain; tall layer: columns
  const Matrix& w0 = net.weight(0);  // 32 x 14
  EXPECT_TRUE((w0.transpose() * w0).isApprox(2.0 * Matrix::Identity(14, 14), 1e-12));
  const Matrix& w1 = net.weight(1);
  EXPECT_TRUE((w1 * w1.transpose()).isApprox(2.0 * Matrix::Identity(32, 32), 1e-12));
  const Matrix& w2 = net.weight(2);  // 12 x 32
  EXPECT_TRUE((w2 * w2.transpose()).isApprox(1e-4 * Matrix::Identity(12, 12), 1e-12));
  for (int l = 0; l < 3; ++l) EXPECT_TRUE(net.bias(l).isZero(0.0));
}

TEST(Mlp, BackpropMatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto res = support::check_random_net(rng, 32);
    EXPECT_GT(res.checked, 0u);
    EXPECT_LT(res.max_rel_error, 1e-4) << "trial " << trial;
  }
}

TEST(Mlp, GradientsAccumulateUntilZeroed) {
  std::mt19937_64 rng(4);
  Mlp net({3, 4, 2});
  net.init_orthogonal(rng, 1.0);
  MlpCache cache;
  const Matrix x = Matrix::Random(3, 2), g = Matrix::Random(2, 2);
  net.forward(x, &cache);
  net.backward(cache, g);
  const Matrix once = net.grad_weight(0);
  net.backward(cache, g);
  EXPECT_TRUE(net.grad_weight(0).isApprox(2.0 * once, 1e-14));
  net.zero_grad();
  EXPECT_TRUE(net.grad_weight(0).isZero(0.0));
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Mlp net({1, 1});
  net.weight(0)(0, 0) = 1.0;
  net.grad_weight(0)(0, 0) = 0.37;
  net.grad_bias(0)[0] = -5.0;
  Adam opt(net, 0.01);
  opt.step(net);
  // bias-corrected first step is lr * sign(g) up to epsilon
  EXPECT_NEAR(net.weight(0)(0, 0), 1.0 - 0.01, 1e-9);
  EXPECT_NEAR(net.bias(0)[0], 0.01, 1e-9);
  EXPECT_EQ(opt.steps(), 1);
}

TEST(Adam, MinimizesQuadratic) {
  Mlp net({1, 1});
  net.weight(0)(0, 0) = 3.0;
  Adam opt(net, 0.05);
  for (int i = 0; i < 2000; ++i) {
    net.zero_grad();
    net.grad_weight(0)(0, 0) = 2.0 * (net.weight(0)(0, 0) - 1.5);
    opt.step(net);
  }
  EXPECT_NEAR(net.weight(0)(0, 0), 1.5, 1e-3);
}
