#include <cmath>

#include <gtest/gtest.h>

#include "genage/synth.hpp"
#include "genage/trainer.hpp"

namespace genage {
namespace {

TrainConfig config(Variant v, double l3, int t_max = 2) {
  TrainConfig cfg;
  cfg.hyper.variant = v;
  cfg.hyper.lambda3 = l3;
  cfg.hyper.t_max = t_max;
  return cfg;
}

void expect_monotone(const ThresholdLadder& l) {
  for (std::size_t k = 1; k < l.size(); ++k) EXPECT_LE(l[k - 1], l[k]);
}

GenAgeModel hand_model() {
  GenAgeModel m;
  m.w_g = Vector::Unit(2, 0);
  m.b_g = 0.0;
  m.w_a = Vector::Unit(2, 1);
  m.ladder_male = ThresholdLadder({0.0});
  m.ladder_female = ThresholdLadder({2.0});
  m.num_ranks = 2;
  return m;
}

TEST(Predict, HandBuiltModel) {
  const GenAgeModel m = hand_model();
  Vector x(2);
  x << 1.0, 1.0;
  const Prediction p = predict(m, x);
  EXPECT_EQ(p.gender, Gender::Male);
  EXPECT_EQ(p.rank, 2);
  // Same point routed through the female ladder.
  EXPECT_EQ(predict_with_gender(m, x, Gender::Female).rank, 1);
  x << -1.0, 1.0;
  EXPECT_EQ(predict(m, x).gender, Gender::Female);
  EXPECT_EQ(predict(m, x).rank, 1);
  x << 0.0, -1.0;
  EXPECT_EQ(predict(m, x).gender, Gender::Male);  // zero score counts as male
  EXPECT_EQ(predict(m, x).rank, 1);
  EXPECT_THROW(predict(m, Vector::Zero(3)), Error);
}

TEST(ObjectiveValue, ZeroStateHandSum) {
  Dataset ds;
  ds.num_ranks = 3;
  ds.features = Matrix::Ones(3, 1);
  ds.gender = {Gender::Male, Gender::Female, Gender::Male};
  ds.rank = {1, 2, 3};
  GenAgeModel m;
  m.w_g = Vector::Zero(1);
  m.w_a = Vector::Zero(1);
  m.ladder_male = ThresholdLadder({0.0, 0.0});
  m.ladder_female = m.ladder_male;
  HyperParams h;
  h.lambda1 = 2.0;
  h.lambda2 = 3.0;
  // Hinge 1 per sample; slacks 1 (rank 1) + 2 (rank 2) + 1 (rank 3).
  EXPECT_DOUBLE_EQ(objective_value(m, ds, h), 2.0 * 3 + 3.0 * 4);
}

TEST(ObjectiveValue, CouplingTerm) {
  Dataset ds;
  ds.num_ranks = 2;
  ds.features = Matrix::Zero(2, 2);
  ds.gender = {Gender::Male, Gender::Female};
  ds.rank = {1, 2};
  GenAgeModel m = hand_model();
  HyperParams h;
  h.lambda3 = 10.0;
  const double orth = objective_value(m, ds, h);
  h.lambda3 = 1e6;
  EXPECT_DOUBLE_EQ(objective_value(m, ds, h), orth);
  m.w_a << 1.0, 1.0;
  h.lambda3 = 1.0;
  const double base = objective_value(m, ds, h);
  h.lambda3 = 4.0;
  EXPECT_NEAR(objective_value(m, ds, h) - base, 3.0 * 1.0, 1e-12);
}

TEST(Fit, UncoupledTtMatchesStandaloneSvm) {
  SynthConfig sc;
  sc.samples_per_cell = 15;
  const Dataset ds = generate(sc);
  const GenAgeModel m = fit(ds, config(Variant::TT, 0.0));
  const SvmSolution svm = solve_svm(ds, 1.0, Vector::Zero(ds.dim()), 0.0);
  EXPECT_LT((m.w_g - svm.w).norm(), 1e-5);
  EXPECT_NEAR(m.b_g, svm.b, 1e-5);
}

TEST(Fit, TraceNonIncreasing) {
  const Dataset ds = generate(SynthConfig{});
  const GenAgeModel m = fit(ds, config(Variant::TT, 1000.0));
  ASSERT_GE(m.objective_trace.size(), 2u);
  for (std::size_t i = 1; i < m.objective_trace.size(); ++i) {
    EXPECT_LE(m.objective_trace[i], m.objective_trace[i - 1] + 1e-9);
  }
  EXPECT_NEAR(m.objective_trace.back(), objective_value(m, ds, m.hyper), 1e-9);
  expect_monotone(m.ladder_male);
  expect_monotone(m.ladder_female);
}

TEST(Fit, IdenticalGendersTtEqualsSt) {
  SynthConfig sc;
  sc.discrepancy = 0.0;
  sc.mirror_genders = true;
  sc.samples_per_cell = 15;
  const Dataset ds = generate(sc);
  const GenAgeModel tt = fit(ds, config(Variant::TT, 100.0));
  const GenAgeModel st = fit(ds, config(Variant::ST, 100.0));
  EXPECT_LT(tt.ladder_male.max_abs_diff(tt.ladder_female), 1e-5);
  EXPECT_LT(tt.ladder_male.max_abs_diff(st.ladder_male), 1e-4);
  EXPECT_LT((tt.w_a - st.w_a).norm(), 1e-4);
}

TEST(Fit, DirectIsUncoupledSt) {
  SynthConfig sc;
  sc.samples_per_cell = 12;
  const Dataset ds = generate(sc);
  const GenAgeModel direct = fit(ds, config(Variant::Direct, 1000.0, 5));
  const GenAgeModel st = fit(ds, config(Variant::ST, 0.0, 1));
  EXPECT_EQ(direct.hyper.lambda3, 0.0);
  EXPECT_EQ(direct.ladder_male, direct.ladder_female);
  EXPECT_LT((direct.w_a - st.w_a).norm(), 1e-9);
  EXPECT_LT((direct.w_g - st.w_g).norm(), 1e-9);
  EXPECT_LT(direct.ladder_male.max_abs_diff(st.ladder_male), 1e-9);
  // Rank does not depend on the predicted gender.
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Vector x = ds.sample(i).features;
    EXPECT_EQ(predict_with_gender(direct, x, Gender::Male).rank,
              predict_with_gender(direct, x, Gender::Female).rank);
  }
}

TEST(Fit, TwoStepUsesStandaloneSvmAndPerGenderDirections) {
  SynthConfig sc;
  sc.samples_per_cell = 12;
  sc.discrepancy = 2.0;
  const Dataset ds = generate(sc);
  const GenAgeModel m = fit(ds, config(Variant::TwoStep, 1000.0));
  const SvmSolution svm = solve_svm(ds, 1.0, Vector::Zero(ds.dim()), 0.0);
  EXPECT_LT((m.w_g - svm.w).norm(), 1e-9);
  ASSERT_TRUE(m.w_a_female.has_value());
  const auto male = ds.subset(ds.indices_of(Gender::Male));
  const SvorSolution ref = solve_ordinal(male.features, male.rank, ds.num_ranks, 1.0,
                                         Vector::Zero(ds.dim()), 0.0);
  EXPECT_LT((m.w_a - ref.w).norm(), 1e-9);
  expect_monotone(m.ladder_male);
  expect_monotone(m.ladder_female);
}

TEST(Fit, OrthogonalityPressureGrowsWithLambda3) {
  SynthConfig sc;
  sc.gender_direction = Vector::Unit(10, 0);
  sc.aging_direction = Vector::Unit(10, 0) + Vector::Unit(10, 1);  // orthonormalized to e2
  const Dataset ds = generate(sc);
  double last = 1e300;
  for (double l3 : {0.0, 10.0, 1000.0}) {
    const GenAgeModel m = fit(ds, config(Variant::TT, l3));
    const double c = std::abs(m.w_g.normalized().dot(m.w_a.normalized()));
    EXPECT_LE(c, last + 1e-9) << "lambda3 " << l3;
    last = c;
  }
}

TEST(Fit, Errors) {
  SynthConfig sc;
  sc.samples_per_cell = 3;
  Dataset ds = generate(sc);
  const Dataset male = ds.subset(ds.indices_of(Gender::Male));
  try {
    fit(male, config(Variant::TT, 1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateGender);
  }
  TrainConfig bad = config(Variant::TT, 1.0);
  bad.hyper.lambda1 = -1.0;
  EXPECT_THROW(fit(ds, bad), Error);
  ds.rank[0] = 9;
  EXPECT_THROW(fit(ds, config(Variant::TT, 1.0)), Error);
}

}  // namespace
}  // namespace genage
