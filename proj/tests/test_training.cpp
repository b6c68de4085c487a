#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "mimlfast/data_io.hpp"
#include "mimlfast/objective.hpp"
#include "mimlfast/training.hpp"
#include "test_support.hpp"

using namespace mimlfast;
using mimlfast::testing::analytic_gradient;
using mimlfast::testing::numeric_gradient;
using mimlfast::testing::random_triplet;
using mimlfast::testing::relative_error;
using mimlfast::testing::random_model;
using mimlfast::testing::scalar_model;
using mimlfast::testing::unit_bag;

namespace {

// 50 real labels scored by their head value on a single x = 1 instance; the
// dummy (id 50) scores 0 and every real label sits in its pool.
Model fifty_labels(std::size_t violating) {
  std::vector<double> heads(51, -2.0);
  for (std::size_t l = 0; l < violating; ++l) heads[l] = 0.5;
  heads[50] = 0.0;
  return scalar_model(50, 1, heads);
}

std::vector<LabelId> all_real(std::size_t L) {
  std::vector<LabelId> pool(L);
  for (LabelId l = 0; l < L; ++l) pool[l] = l;
  return pool;
}

Dataset small_planted(std::uint64_t seed, std::size_t n = 300) {
  SynthSpec spec;
  spec.n_bags = n;
  spec.rng_seed = seed;
  return generate_synthetic(spec);
}

}  // namespace

TEST(StepSize, Schedule) {
  TrainConfig cfg;
  cfg.gamma0 = 1e-3;
  cfg.eta = 1e-5;
  EXPECT_DOUBLE_EQ(step_size(cfg, 0), 1e-3);
  EXPECT_NEAR(step_size(cfg, 1000000), 1e-3 / 1.01, 1e-15);
  EXPECT_NEAR(step_size(cfg, 1000000), 9.901e-4, 1e-7);
  cfg.eta = 0.0;
  EXPECT_DOUBLE_EQ(step_size(cfg, 123456789), 1e-3);
  cfg.eta = 1e-5;
  for (std::uint64_t t = 0; t < 100; ++t) EXPECT_GE(step_size(cfg, t), step_size(cfg, t + 1));
}

TEST(SampleTrainingPair, ChiSquareAgainstUniformBagThenLabel) {
  Dataset data{{Bag("a", 1, {1.0}, {0}), Bag("b", 1, {1.0}, {0, 1}), Bag("c", 1, {1.0}, {})},
               LabelSpace(3), 1};
  const LabelId dummy = 3;
  const std::map<std::pair<std::size_t, LabelId>, double> expected{
      {{0, 0}, 1.0 / 6}, {{0, dummy}, 1.0 / 6}, {{1, 0}, 1.0 / 9},
      {{1, 1}, 1.0 / 9}, {{1, dummy}, 1.0 / 9}, {{2, dummy}, 1.0 / 3}};
  std::map<std::pair<std::size_t, LabelId>, int> seen;
  Rng rng(31);
  const int n = 60000;
  for (int i = 0; i < n; ++i) {
    const auto p = sample_training_pair(data, rng);
    ++seen[{p.bag_index, p.y}];
  }
  ASSERT_EQ(seen.size(), expected.size());
  double chi2 = 0.0;
  for (const auto& [cell, prob] : expected) {
    const double e = prob * n;
    chi2 += (seen[cell] - e) * (seen[cell] - e) / e;
  }
  EXPECT_LT(chi2, 20.52);  // df = 5, alpha = 0.001
}

TEST(SampleTrainingPair, SingleBagWithoutLabelsYieldsDummy) {
  Dataset data{{Bag("a", 1, {1.0}, {})}, LabelSpace(2), 1};
  Rng rng(32);
  for (int i = 0; i < 20; ++i) {
    const auto p = sample_training_pair(data, rng);
    EXPECT_EQ(p.bag_index, 0u);
    EXPECT_EQ(p.y, 2u);
  }
  EXPECT_THROW(sample_training_pair(Dataset{{}, LabelSpace(2), 1}, rng), ContractViolation);
}

TEST(FindViolation, FirstDrawHitsWhenEverythingViolates) {
  const auto model = fifty_labels(50);
  Rng rng(33);
  const auto t = find_violation(model, unit_bag(), 4, 50, all_real(50), rng);
  ASSERT_TRUE(t.has_value());
  EXPECT_EQ(t->v, 1u);
  EXPECT_EQ(t->bag_index, 4u);
  EXPECT_EQ(t->y, 50u);
  EXPECT_LT(t->y_bar, 50u);
  EXPECT_NEAR(t->s_weight, mimlfast::testing::harmonic(50), 1e-12);
  EXPECT_DOUBLE_EQ(t->margin_loss, 1.5);
  EXPECT_NEAR(t->loss(), t->s_weight * 1.5, 1e-12);
}

TEST(FindViolation, GivesUpAfterPoolSizeDraws) {
  const auto model = fifty_labels(0);
  const auto pool = all_real(50);
  Rng rng(34);
  Rng reference = rng;
  EXPECT_FALSE(find_violation(model, unit_bag(), 0, 50, pool, rng).has_value());
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  for (int i = 0; i < 50; ++i) pick(reference);
  EXPECT_TRUE(rng == reference);
}

TEST(FindViolation, HalfViolatingFollowsTruncatedGeometric) {
  const auto model = fifty_labels(25);
  const auto pool = all_real(50);
  Rng rng(35);
  double sum = 0.0;
  int hits = 0;
  for (int i = 0; i < 20000; ++i) {
    const auto t = find_violation(model, unit_bag(), 0, 50, pool, rng);
    if (!t) continue;
    EXPECT_LT(t->y_bar, 25u);
    sum += t->v;
    ++hits;
  }
  double num = 0.0, mass = 0.0;
  for (int v = 1; v <= 50; ++v) {
    const double pr = 0.5 * std::pow(0.5, v - 1);
    num += v * pr;
    mass += pr;
  }
  EXPECT_NEAR(sum / hits, num / mass, 0.05 * num / mass);
}

TEST(SgdUpdate, ZeroStepOrZeroWeightIsANoOp) {
  Rng rng(36);
  const auto model = random_model(rng, 4, 3, 2, 4, 1.0, Variant::Full, 0.3);
  Bag bag = unit_bag();
  auto t = random_triplet(rng, model, bag);
  ASSERT_TRUE(t.has_value());
  auto copy = model;
  sgd_update(copy, bag, *t, 0.0);
  EXPECT_EQ(copy, model);
  t->s_weight = 0.0;
  sgd_update(copy, bag, *t, 0.1);
  EXPECT_EQ(copy, model);
}

TEST(SgdUpdate, MatchesFiniteDifferences) {
  Rng rng(37);
  std::uniform_int_distribution<std::size_t> dim(1, 8), sub(1, 3), shared(1, 5);
  int checked = 0;
  while (checked < 100) {
    const auto model = random_model(rng, dim(rng), shared(rng), sub(rng), 4, 1e6,
                                    Variant::Full, 0.6);
    Bag bag = unit_bag();
    const auto t = random_triplet(rng, model, bag);
    if (!t) continue;
    ++checked;
    const auto a = analytic_gradient(model, bag, *t);
    const auto n = numeric_gradient(model, bag, *t, 1e-5);
    EXPECT_LT(relative_error(a, n), 1e-4);
  }
}

TEST(SgdUpdate, MatchesFiniteDifferencesWithoutSharedSpace) {
  Rng rng(38);
  int checked = 0;
  while (checked < 30) {
    const auto model = random_model(rng, 5, 5, 2, 3, 1e6, Variant::NoSharedSpace, 0.6);
    Bag bag = unit_bag();
    const auto t = random_triplet(rng, model, bag);
    if (!t) continue;
    ++checked;
    EXPECT_LT(relative_error(analytic_gradient(model, bag, *t),
                             numeric_gradient(model, bag, *t, 1e-5)),
              1e-4);
  }
}

TEST(SgdUpdate, SmallStepReducesTheTripletLoss) {
  Rng rng(39);
  int checked = 0;
  while (checked < 100) {
    const auto model = random_model(rng, 6, 4, 2, 5, 1e6, Variant::Full, 0.5);
    Bag bag = unit_bag();
    const auto t = random_triplet(rng, model, bag);
    if (!t) continue;
    ++checked;
    auto moved = model;
    sgd_update(moved, bag, *t, 1e-4);
    EXPECT_LT(triplet_loss(moved, bag, t->y, t->y_bar, t->s_weight),
              triplet_loss(model, bag, t->y, t->y_bar, t->s_weight));
  }
}

TEST(SgdUpdate, ProjectionKeepsNormsWithinBound) {
  Rng rng(40);
  int checked = 0;
  while (checked < 200) {
    auto model = random_model(rng, 5, 3, 2, 4, 0.5, Variant::Full, 0.1);
    Bag bag = unit_bag();
    const auto t = random_triplet(rng, model, bag);
    if (!t) continue;
    ++checked;
    sgd_update(model, bag, *t, 10.0);
    EXPECT_LE(model.max_head_norm(), 0.5 + 1e-12);
    EXPECT_LE(model.max_w0_column_norm(), 0.5 + 1e-12);
  }
}

TEST(AverageLabelCount, RoundsAndFloorsAtOne) {
  Dataset data{{Bag("a", 1, {1.0}, {0, 1}), Bag("b", 1, {1.0}, {0, 1, 2}),
                Bag("c", 1, {1.0}, {2})},
               LabelSpace(3), 1};
  EXPECT_EQ(average_label_count(data), 2u);
  Dataset empty_labels{{Bag("a", 1, {1.0}, {})}, LabelSpace(3), 1};
  EXPECT_EQ(average_label_count(empty_labels), 1u);
}

TEST(Train, ZeroIterationsReturnsFreshModel) {
  const auto data = small_planted(1);
  TrainConfig cfg;
  cfg.max_iters = 0;
  cfg.rng_seed = 9;
  const auto result = train(data, cfg);
  Rng rng(9);
  EXPECT_EQ(result.model, new_model(data.feature_dim, data.label_space, cfg, rng));
  EXPECT_EQ(result.state.t, 0u);
  ASSERT_EQ(result.state.history.size(), 1u);
}

TEST(Train, SameSeedSameModel) {
  const auto data = small_planted(2);
  TrainConfig cfg;
  cfg.max_iters = 5000;
  cfg.eval_every = 500;
  cfg.gamma0 = 0.01;
  const auto a = train(data, cfg);
  const auto b = train(data, cfg);
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(a.state.history, b.state.history);
  cfg.rng_seed = 1;
  EXPECT_FALSE(train(data, cfg).model == a.model);
}

TEST(Train, EmptyDatasetIsAConfigError) {
  EXPECT_THROW(train(Dataset{{}, LabelSpace(2), 3}, TrainConfig{}), ConfigError);
}

TEST(Train, CheckpointIsTheBestValidationPoint) {
  const auto data = small_planted(3);
  TrainConfig cfg;
  cfg.max_iters = 20000;
  cfg.eval_every = 1000;
  cfg.gamma0 = 0.01;
  cfg.validation_fraction = 0.3;
  const auto result = train(data, cfg);
  const auto& h = result.state.history;
  ASSERT_GE(h.size(), 2u);
  double best = h.front().validation_ranking_loss;
  for (const auto& p : h) {
    EXPECT_TRUE(p.iteration % cfg.eval_every == 0 || p.iteration == result.state.t);
    best = std::min(best, p.validation_ranking_loss);
  }
  EXPECT_DOUBLE_EQ(result.state.best_val_rankloss, best);
  EXPECT_LT(best, h.front().validation_ranking_loss);
  EXPECT_EQ(result.state.validation_size, 90u);
  for (std::size_t i = 1; i < h.size(); ++i) {
    EXPECT_GT(h[i].iteration, h[i - 1].iteration);
    EXPECT_GE(h[i].cumulative_loss, h[i - 1].cumulative_loss);
  }
}

TEST(Train, EarlyStoppingHonoursPatience) {
  const auto data = small_planted(4);
  TrainConfig cfg;
  cfg.max_iters = 10000000;
  cfg.eval_every = 200;
  cfg.patience = 1;
  cfg.gamma0 = 0.05;
  const auto result = train(data, cfg);
  EXPECT_LT(result.state.t, cfg.max_iters);
  EXPECT_EQ(result.state.evals_since_improvement, 1u);
}

TEST(Train, TrainedModelRespectsNormBound) {
  const auto data = small_planted(5);
  TrainConfig cfg;
  cfg.max_iters = 10000;
  cfg.C = 0.3;
  cfg.gamma0 = 0.1;
  const auto result = train(data, cfg);
  EXPECT_LE(result.state.model.max_head_norm(), 0.3 + 1e-12);
  EXPECT_LE(result.state.model.max_w0_column_norm(), 0.3 + 1e-12);
  EXPECT_TRUE(result.state.model.all_finite());
}

TEST(Train, VariantsProduceTheirShapes) {
  const auto data = small_planted(6);
  TrainConfig cfg;
  cfg.max_iters = 2000;
  cfg.variant = Variant::NoSharedSpace;
  const auto v1 = train(data, cfg).model;
  EXPECT_TRUE(v1.w0().empty());
  EXPECT_EQ(v1.shared_dim(), data.feature_dim);
  cfg.variant = Variant::TopR;
  const auto v2 = train(data, cfg).model;
  EXPECT_EQ(v2.top_r(), average_label_count(data));
  for (const auto& bag : data.bags) EXPECT_EQ(predict(v2, bag).size(), v2.top_r());
}

TEST(Train, TinyDatasetRunsWithoutValidation) {
  Dataset data{{Bag("a", 1, {1.0}, {0}), Bag("b", 1, {-1.0}, {1})}, LabelSpace(2), 1};
  TrainConfig cfg;
  cfg.max_iters = 100;
  cfg.eval_every = 10;
  cfg.validation_fraction = 0.1;
  const auto result = train(data, cfg);
  EXPECT_EQ(result.state.validation_size, 0u);
  EXPECT_EQ(result.model, result.state.model);
  EXPECT_TRUE(std::isnan(result.state.history.back().validation_ranking_loss));
}

TEST(CumulativeLossCurve, RunningMeans) {
  TrainState state;
  state.history = {{0, 0.5, 0.0}, {10, 0.4, 20.0}, {20, 0.3, 30.0}};
  const auto curve = cumulative_loss_curve(state);
  ASSERT_EQ(curve.size(), 2u);
  EXPECT_EQ(curve[0].first, 10u);
  EXPECT_DOUBLE_EQ(curve[0].second, 2.0);
  EXPECT_DOUBLE_EQ(curve[1].second, 1.5);
}
