#include <gtest/gtest.h>

#include <cmath>

#include "reconv/data.hpp"
#include "reconv/error.hpp"
#include "reconv/gradcheck.hpp"
#include "reconv/model.hpp"
#include "reconv/param_count.hpp"
#include "test_util.hpp"

using namespace reconv;
using reconv::testing::random_tensor;

namespace {

ArchConfig tiny(bool tied, std::size_t maps = 4, std::size_t layers = 3) {
  ArchConfig a;
  a.feature_maps = maps;
  a.layers = layers;
  a.tied = tied;
  a.input_height = 8;
  a.input_width = 8;
  return a;
}

}  // namespace

TEST(InitParams, IdentityKernelsReproduceInput) {
  const ArchConfig arch = tiny(false, 5, 2);
  const Params p = init_params(arch, 3);
  const Tensor z = random_tensor({2, 2, 5}, 1);
  for (const auto& w : p.w) EXPECT_EQ(ops::conv2d_same(z, w), z);
}

TEST(InitParams, SameSeedSameParams) {
  const ArchConfig arch = tiny(false);
  EXPECT_EQ(init_params(arch, 42), init_params(arch, 42));
  EXPECT_NE(init_params(arch, 42).v, init_params(arch, 43).v);
}

TEST(InitParams, FirstLayerMeanWithinStandardError) {
  ArchConfig arch;
  arch.feature_maps = 4;
  const Params p = init_params(arch, 9);
  double mean = 0.0;
  for (double v : p.v.values()) mean += v;
  mean /= static_cast<double>(p.v.size());
  EXPECT_LT(std::abs(mean), 3 * 0.1 / std::sqrt(8.0 * 8 * 3 * 4));
  // Biases and classifier start at zero.
  EXPECT_EQ(p.b0, Tensor({4}));
  EXPECT_EQ(p.c, Tensor(arch.classifier_shape()));
  EXPECT_EQ(p.c_bias, Tensor({10}));
}

TEST(InitParams, ScalarCountMatchesParamCount) {
  for (bool tied : {false, true}) {
    for (std::size_t m : {1u, 4u, 13u}) {
      for (std::size_t l : {1u, 2u, 5u}) {
        ArchConfig arch;
        arch.feature_maps = m;
        arch.layers = l;
        arch.tied = tied;
        EXPECT_EQ(init_params(arch, 1).scalar_count(), param_count(arch));
        const std::size_t sets = tied ? 1 : l;
        EXPECT_EQ(init_params(arch, 1).w.size(), sets);
      }
    }
  }
}

TEST(ArchConfig, RejectsInvalid) {
  ArchConfig a;
  a.input_height = 30;
  EXPECT_THROW(a.validate(), ConfigError);
  a = ArchConfig{};
  a.sigma_v = 0.0;
  EXPECT_THROW(a.validate(), ConfigError);
  a = ArchConfig{};
  a.feature_maps = 0;
  EXPECT_THROW(a.validate(), ConfigError);
}

TEST(Forward, IdentityInitCopiesFirstLayerUpward) {
  for (bool tied : {false, true}) {
    for (std::size_t layers : {1u, 4u, 8u}) {
      ArchConfig arch;
      arch.feature_maps = 8;
      arch.layers = layers;
      arch.tied = tied;
      const Tape tape = forward(arch, init_params(arch, layers), random_tensor(arch.image_shape(), 5, 0, 1));
      for (std::size_t l = 1; l < tape.hidden.size(); ++l) EXPECT_EQ(tape.hidden[l], tape.hidden[0]);
    }
  }
}

TEST(Forward, ZeroClassifierGivesUniformPrediction) {
  const ArchConfig arch = tiny(false);
  const Params p = init_params(arch, 1);
  for (std::uint64_t s = 0; s < 3; ++s) {
    const Tape tape = forward(arch, p, random_tensor(arch.image_shape(), s, 0, 1));
    EXPECT_EQ(tape.probs, Tensor({10}, 0.1));
  }
}

TEST(Forward, TiedMatchesUntiedCopiesBitForBit) {
  const ArchConfig arch = tiny(true);
  const auto point = gradcheck_point(arch, 11);
  ArchConfig untied_arch = arch;
  untied_arch.tied = false;
  const Tape a = forward(arch, point.params, point.image);
  const Tape b = forward(untied_arch, untie(arch, point.params), point.image);
  EXPECT_EQ(a.pre_pool, b.pre_pool);
  EXPECT_EQ(a.hidden, b.hidden);
  EXPECT_EQ(a.normalized, b.normalized);
  EXPECT_EQ(a.logits, b.logits);
  EXPECT_EQ(a.probs, b.probs);
}

TEST(Forward, ActivationsNonNegativeAndProbabilitiesSumToOne) {
  const ArchConfig arch = tiny(false);
  const auto point = gradcheck_point(arch, 4);
  const Tape tape = forward(arch, point.params, point.image);
  for (const auto& z : tape.hidden) {
    for (double v : z.values()) EXPECT_GE(v, 0.0);
  }
  double sum = 0.0;
  for (double p : tape.probs.values()) sum += p;
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(Forward, WrongImageShapeIsShapeError) {
  const ArchConfig arch = tiny(false);
  EXPECT_THROW(forward(arch, init_params(arch, 1), Tensor({32, 32, 3})), ShapeError);
}

TEST(LossAndGrads, UniformPredictionLossIsLogK) {
  ArchConfig arch;
  arch.feature_maps = 4;
  const auto r = loss_and_grads(arch, init_params(arch, 1), random_tensor(arch.image_shape(), 2, 0, 1), 3);
  EXPECT_NEAR(r.loss, std::log(10.0), 1e-12);
}

TEST(LossAndGrads, ClassifierBiasGradientAtInit) {
  const ArchConfig arch = tiny(false);
  const std::size_t label = 7;
  const auto r = loss_and_grads(arch, init_params(arch, 1), random_tensor(arch.image_shape(), 2, 0, 1), label);
  for (std::size_t k = 0; k < 10; ++k) EXPECT_NEAR(r.grads.c_bias[k], 0.1 - (k == label ? 1.0 : 0.0), 1e-12);
}

TEST(LossAndGrads, TiedGradientIsSumOfUntiedLayerGradients) {
  const ArchConfig arch = tiny(true);
  ArchConfig untied_arch = arch;
  untied_arch.tied = false;
  const auto point = gradcheck_point(arch, 21);
  const auto tied = loss_and_grads(arch, point.params, point.image, point.label);
  const auto untied = loss_and_grads(untied_arch, untie(arch, point.params), point.image, point.label);
  EXPECT_EQ(tied.loss, untied.loss);

  Tensor w_sum = untied.grads.w[0], b_sum = untied.grads.b[0];
  for (std::size_t l = 1; l < arch.layers; ++l) {
    w_sum += untied.grads.w[l];
    b_sum += untied.grads.b[l];
  }
  EXPECT_LE(reconv::testing::max_rel_err(tied.grads.w[0], w_sum), 1e-10);
  EXPECT_LE(reconv::testing::max_rel_err(tied.grads.b[0], b_sum), 1e-10);
  ASSERT_EQ(tied.grads.w.size(), 1u);
}

TEST(LossAndGrads, LabelOutOfRange) {
  const ArchConfig arch = tiny(false);
  EXPECT_THROW(loss_and_grads(arch, init_params(arch, 1), Tensor(arch.image_shape()), 10), ShapeError);
}

TEST(LossAndGrads, BatchIsSumOfExamples) {
  ArchConfig arch;
  arch.feature_maps = 3;
  arch.layers = 2;
  const Dataset data = random_noise_dataset(3, 10, 5);
  const auto point = gradcheck_point(arch, 2);
  const auto batch = batch_loss_and_grads(arch, point.params, data, {0, 1, 2});
  double loss = 0.0;
  Grads sum{ParamTensors::zeros(arch)};
  for (std::size_t n = 0; n < 3; ++n) {
    const auto one = loss_and_grads(arch, point.params, data.image(n), data.label(n));
    loss += one.loss;
    sum.v += one.grads.v;
    sum.c += one.grads.c;
  }
  EXPECT_NEAR(batch.loss, loss, 1e-12);
  EXPECT_LT(reconv::testing::max_rel_err(batch.grads.v, sum.v), 1e-12);
  EXPECT_LT(reconv::testing::max_rel_err(batch.grads.c, sum.c), 1e-12);
}

TEST(ErrorRate, ZeroClassifierPredictsClassZero) {
  ArchConfig arch;
  arch.feature_maps = 2;
  Dataset zeros(Tensor({4, 32, 32, 3}, 0.5), {0, 0, 0, 0}, 10);
  EXPECT_EQ(error_rate(arch, init_params(arch, 1), zeros), 0.0);
}

TEST(ErrorRate, PerfectPredictions) {
  ArchConfig arch;
  arch.feature_maps = 2;
  Params p = init_params(arch, 1);
  p.c_bias[4] = 5.0;
  Dataset fours(Tensor({3, 32, 32, 3}, 0.25), {4, 4, 4}, 10);
  EXPECT_EQ(error_rate(arch, p, fours), 0.0);
}

TEST(ErrorRate, RandomLabelsUnderUniformPrediction) {
  ArchConfig arch;
  arch.feature_maps = 2;
  arch.layers = 1;
  const Dataset data = random_noise_dataset(1000, 10, 77);
  const double err = error_rate(arch, init_params(arch, 1), data);
  // Binomial standard error of 0.9 over 1000 draws is about 0.0095.
  EXPECT_NEAR(err, 0.9, 4 * 0.0095);
}

TEST(ErrorRate, EmptyDatasetIsError) {
  ArchConfig arch;
  arch.feature_maps = 2;
  EXPECT_THROW(error_rate(arch, init_params(arch, 1), Dataset()), FormatError);
}
