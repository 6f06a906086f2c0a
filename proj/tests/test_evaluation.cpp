#include <set>

#include <gtest/gtest.h>

#include "genage/evaluation.hpp"

namespace genage {
namespace {

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Io;
}

TEST(Mae, Examples) {
  EXPECT_EQ(mae(std::vector<int>{2, 3, 4}, std::vector<int>{2, 3, 4}), 0.0);
  EXPECT_EQ(mae(std::vector<int>{1, 3}, std::vector<int>{2, 5}), 1.5);
  EXPECT_EQ(mae(std::vector<int>{2, 5}, std::vector<int>{1, 3}), 1.5);
  EXPECT_EQ(kind_of([] { mae(std::vector<int>{1}, std::vector<int>{1, 2}); }),
            ErrorKind::LengthMismatch);
  EXPECT_EQ(kind_of([] { mae(std::vector<int>{}, std::vector<int>{}); }), ErrorKind::Empty);
}

TEST(Mae, BoundedByRankRange) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 50; ++t) {
    std::vector<int> a(10), b(10);
    for (int i = 0; i < 10; ++i) {
      a[static_cast<std::size_t>(i)] = 1 + static_cast<int>(rng() % 5);
      b[static_cast<std::size_t>(i)] = 1 + static_cast<int>(rng() % 5);
    }
    const double m = mae(a, b);
    EXPECT_GE(m, 0.0);
    EXPECT_LE(m, 4.0);
    EXPECT_EQ(m, mae(b, a));
  }
}

TEST(Angle, Examples) {
  EXPECT_NEAR(angle_deg(Vector::Unit(2, 0), Vector::Unit(2, 1)), 90.0, 1e-12);
  EXPECT_NEAR(angle_deg(Vector::Unit(2, 0), 2.0 * Vector::Unit(2, 0)), 0.0, 1e-12);
  EXPECT_NEAR(angle_deg(Vector::Unit(2, 0), -Vector::Unit(2, 0)), 180.0, 1e-12);
  Vector u(3), v(3);
  u << 1.0, 2.0, -1.0;
  v << 0.5, -1.0, 3.0;
  EXPECT_NEAR(angle_deg(u, v), angle_deg(3.0 * u, 0.25 * v), 1e-12);
  EXPECT_EQ(kind_of([] { angle_deg(Vector::Zero(2), Vector::Unit(2, 0)); }), ErrorKind::ZeroVector);
}

TEST(Folds, PartitionAndStratification) {
  SynthConfig sc;
  sc.samples_per_cell = 11;
  const Dataset ds = generate(sc);
  const auto folds = stratified_folds(ds, 5, 3);
  std::set<std::size_t> seen;
  std::size_t total = 0;
  for (const auto& f : folds) {
    total += f.size();
    seen.insert(f.begin(), f.end());
    std::size_t male_rank1 = 0;
    for (std::size_t i : f) male_rank1 += ds.gender[i] == Gender::Male && ds.rank[i] == 1;
    EXPECT_GE(male_rank1, 2u);
    EXPECT_LE(male_rank1, 3u);
  }
  EXPECT_EQ(total, ds.size());
  EXPECT_EQ(seen.size(), ds.size());
  EXPECT_EQ(folds, stratified_folds(ds, 5, 3));
}

TEST(Folds, Infeasible) {
  Dataset ds;
  ds.num_ranks = 2;
  ds.features = Matrix::Zero(4, 1);
  ds.gender = {Gender::Male, Gender::Male, Gender::Female, Gender::Female};
  ds.rank = {1, 2, 1, 2};
  EXPECT_EQ(kind_of([&] { stratified_folds(ds, 2, 1); }), ErrorKind::InfeasibleFolds);
  EXPECT_EQ(kind_of([&] { stratified_folds(ds, 1, 1); }), ErrorKind::InfeasibleFolds);
  EXPECT_EQ(kind_of([&] { stratified_folds(ds, 5, 1); }), ErrorKind::InfeasibleFolds);
}

TEST(CrossValidate, SingleSettingGrid) {
  SynthConfig sc;
  sc.samples_per_cell = 10;
  const Dataset ds = generate(sc);
  HyperGrid grid;
  grid.lambda1 = {2.0};
  grid.lambda2 = {0.5};
  grid.lambda3 = {10.0};
  const CvResult r = cross_validate(ds, grid, HyperParams{}, 5, 1);
  ASSERT_EQ(r.entries.size(), 1u);
  EXPECT_EQ(r.best.lambda1, 2.0);
  EXPECT_EQ(r.best.lambda2, 0.5);
  EXPECT_EQ(r.best.lambda3, 10.0);
  EXPECT_EQ(r.entries[0].fold_mae.size(), 5u);
}

TEST(CrossValidate, TiesPreferLargerCoupling) {
  // Tight, well separated clusters: every setting validates perfectly.
  Dataset ds;
  ds.num_ranks = 3;
  ds.features.resize(60, 2);
  for (int i = 0; i < 60; ++i) {
    const int k = 1 + (i / 10) % 3;
    const double s = i < 30 ? 1.0 : -1.0;
    ds.features.row(i) << 3.0 * s + 0.01 * (i % 10), 10.0 * k + 0.01 * (i % 7);
    ds.rank.push_back(k);
    ds.gender.push_back(i < 30 ? Gender::Male : Gender::Female);
  }
  HyperGrid grid;
  grid.lambda1 = {1.0, 0.5};
  grid.lambda2 = {2.0, 1.0};
  grid.lambda3 = {0.0, 10.0};
  const CvResult r = cross_validate(ds, grid, HyperParams{}, 5, 2);
  for (const auto& e : r.entries) ASSERT_EQ(e.mean_mae, 0.0);
  EXPECT_EQ(r.best.lambda3, 10.0);
  EXPECT_EQ(r.best.lambda1, 0.5);
  EXPECT_EQ(r.best.lambda2, 1.0);
}

TEST(CrossValidate, PicksCouplingOnDefaultData) {
  const Dataset ds = generate(SynthConfig{});
  HyperGrid grid;
  grid.lambda3 = {0.0, 1000.0};
  const CvResult r = cross_validate(ds, grid, HyperParams{}, 5, 42);
  EXPECT_EQ(r.best.lambda3, 1000.0);
}

TEST(Split, PerRankWithFallback) {
  SynthConfig sc;
  sc.samples_per_cell = 6;
  Dataset ds = generate(sc);
  const auto [tr, te] = train_test_split(ds, 5, 9);
  EXPECT_EQ(tr.size(), 25u);
  EXPECT_EQ(te.size(), ds.size() - 25);
  const Dataset train = ds.subset(tr);
  for (int k = 1; k <= 5; ++k) {
    const std::size_t m = train.count(Gender::Male, k), f = train.count(Gender::Female, k);
    EXPECT_EQ(m + f, 5u);
    EXPECT_LE(std::max(m, f) - std::min(m, f), 1u);
  }
  const auto [all, none] = train_test_split(ds, 20, 9);
  EXPECT_EQ(all.size(), ds.size());
  EXPECT_TRUE(none.empty());
}

TEST(Experiment, ReproducibleAndShaped) {
  SynthConfig sc;
  sc.samples_per_cell = 12;
  sc.discrepancy = 2.0;
  const Dataset ds = generate(sc);
  ExperimentProtocol p;
  p.runs = 2;
  p.train_per_rank = {8};
  p.pls_max_components = 4;
  const auto a = run_experiment(ds, p);
  const auto b = run_experiment(ds, p);
  ASSERT_EQ(a.size(), 5u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].method, p.methods[i]);
    EXPECT_EQ(a[i].runs, 2);
    EXPECT_EQ(a[i].mae_mixed.mean, b[i].mae_mixed.mean);
    EXPECT_EQ(a[i].mae_mixed.std, b[i].mae_mixed.std);
    EXPECT_GE(a[i].mae_mixed.mean, 0.0);
    EXPECT_GE(a[i].gender_accuracy.mean, 0.0);
    EXPECT_LE(a[i].gender_accuracy.mean, 1.0);
    if (a[i].angle_deg) {
      EXPECT_GE(a[i].angle_deg->mean, 0.0);
      EXPECT_LE(a[i].angle_deg->mean, 180.0);
    }
  }
  const EvalReport& tt = a[3];
  EXPECT_TRUE(tt.ladder_spread_shared.has_value());
  EXPECT_EQ(tt.ladder_spread_shared->mean, a[2].ladder_spread_male->mean);
  EXPECT_FALSE(a[4].angle_deg.has_value());
  EXPECT_TRUE(a[4].records[0].pls_components.has_value());
}

TEST(Experiment, TtBeatsDirectOnDiscrepantData) {
  SynthConfig sc;
  sc.discrepancy = 2.0;
  sc.samples_per_cell = 50;
  ExperimentProtocol p;
  p.methods = {Method::Direct, Method::TT};
  p.runs = 10;
  p.train_per_rank = {20};
  const auto reports = run_experiment(generate(sc), p);
  EXPECT_LT(reports[1].mae_mixed.mean, reports[0].mae_mixed.mean);
}

TEST(Experiment, YearMaeWhenMapPresent) {
  SynthConfig sc;
  sc.samples_per_cell = 8;
  Dataset ds = generate(sc);
  ds.rank_years = {10, 20, 30, 40, 50};
  ExperimentProtocol p;
  p.methods = {Method::Direct};
  p.runs = 1;
  p.train_per_rank = {6};
  const auto r = run_experiment(ds, p);
  ASSERT_TRUE(r[0].mae_years.has_value());
  EXPECT_NEAR(r[0].mae_years->mean, 10.0 * r[0].mae_mixed.mean, 1e-9);
}

}  // namespace
}  // namespace genage
