#include <gtest/gtest.h>

#include "gradcheck.hpp"

using namespace balance;
using namespace balance::testkit;

namespace {

void expect_all_pass(const std::vector<GradCase>& cases) {
  for (const auto& c : cases) {
    const GradReport r = check_gradients(c);
    EXPECT_LE(r.max_rel_error, kFdRelTol) << r.worst;
    EXPECT_GT(r.coords, 0u);
  }
}

}  // namespace

TEST(Gradients, EveryOpMatchesFiniteDifferences) {
  Rng rng(11);
  expect_all_pass(op_cases(rng, 4));
}

TEST(Gradients, RegularizerThroughMeanSoftmax) {
  Rng rng(12);
  expect_all_pass(regularizer_cases(rng, 10));
}

TEST(Gradients, CombinedGeneratorLoss) {
  Rng rng(13);
  expect_all_pass(combined_loss_cases(rng, 10));
}

TEST(Gradients, CheckerCatchesAWrongGradient) {
  // Stop-gradient trick: the analytic gradient of x * stop(x) is x, the
  // numeric one is 2x. The checker must notice.
  GradCase bad{"broken",
               [](Graph& g, std::span<const NodeId> x) {
                 return g.sum(g.mul(x[0], g.constant(g.value(x[0]))));
               },
               {Tensor::from_rows({{1.5, -2.0}})}};
  EXPECT_GT(check_gradients(bad).max_rel_error, 0.1);
}

TEST(Gradients, RelativeErrorFloor) {
  EXPECT_DOUBLE_EQ(relative_error(1.0, 1.0), 0.0);
  EXPECT_NEAR(relative_error(2.0, 1.0), 0.5, 1e-15);
  EXPECT_LT(relative_error(0.0, 1e-12), 1e-5);
}
