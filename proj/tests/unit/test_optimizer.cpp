#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "gmfp/optimizer.hpp"

namespace gmfp {
namespace {

using ad::Tensor;

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  auto w = Tensor<double>::from({3}, {1.0, -2.0, 0.5}, true);
  ad::Adam<double> adam({{"w", w}});
  adam.zero_grad();
  adam.step();
  EXPECT_EQ(std::vector<double>(w.data().begin(), w.data().end()), (std::vector<double>{1.0, -2.0, 0.5}));
  EXPECT_EQ(adam.steps(), 1u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  // Bias correction makes the first update lr * g / |g|.
  auto w = Tensor<double>::from({2}, {1.0, 1.0}, true);
  ad::Adam<double> adam({{"w", w}});
  ad::sum(ad::mul(w, Tensor<double>::from({2}, {3.0, -0.01}))).backward();
  adam.step();
  EXPECT_NEAR(w.data()[0], 1.0 - 1e-3, 1e-9);
  EXPECT_NEAR(w.data()[1], 1.0 + 1e-3, 1e-7);
}

TEST(Adam, ConvexQuadraticDecreases) {
  auto w = Tensor<double>::from({2}, {3.0, -4.0}, true);
  ad::Adam<double> adam({{"w", w}}, {.learning_rate = 0.05});
  double previous = std::numeric_limits<double>::infinity();
  for (int step = 0; step < 200; ++step) {
    adam.zero_grad();
    auto loss = ad::sum(ad::mul(w, w));
    const double value = loss.item();
    if (step < 20) {
      EXPECT_LT(value, previous);
    }
    previous = value;
    loss.backward();
    adam.step();
  }
  EXPECT_LT(previous, 0.5);
}

TEST(Adam, NonFiniteGradientNamesParameter) {
  auto a = Tensor<float>::from({1}, {1.0f}, true);
  auto b = Tensor<float>::from({2}, {1.0f, 2.0f}, true);
  ad::Adam<float> adam({{"alpha", a}, {"beta", b}});
  b.mutable_grad()[1] = std::numeric_limits<float>::quiet_NaN();
  a.mutable_grad()[0] = 1.0f;
  try {
    adam.step();
    FAIL() << "expected NonFiniteError";
  } catch (const ad::NonFiniteError& e) {
    EXPECT_NE(std::string(e.what()).find("beta"), std::string::npos);
  }
  EXPECT_EQ(a.data()[0], 1.0f);  // nothing applied
  EXPECT_EQ(adam.steps(), 0u);
}

TEST(Adam, RejectsParameterWithoutGradient) {
  auto w = Tensor<double>::from({1}, {1.0});
  EXPECT_THROW(ad::Adam<double>({{"w", w}}), std::invalid_argument);
}

}  // namespace
}  // namespace gmfp
