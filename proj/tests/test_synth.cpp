#include <gtest/gtest.h>

#include "genage/svm.hpp"
#include "genage/synth.hpp"

namespace genage {
namespace {

TEST(Synth, Deterministic) {
  SynthConfig cfg;
  EXPECT_EQ(generate(cfg), generate(cfg));
  SynthConfig other = cfg;
  other.seed = 43;
  EXPECT_FALSE(generate(cfg) == generate(other));
}

TEST(Synth, CellCounts) {
  SynthConfig cfg;
  cfg.num_ranks = 4;
  cfg.samples_per_cell = 7;
  const Dataset ds = generate(cfg);
  validate_dataset(ds);
  EXPECT_EQ(ds.size(), 56u);
  for (Gender g : {Gender::Male, Gender::Female}) {
    for (int k = 1; k <= 4; ++k) EXPECT_EQ(ds.count(g, k), 7u);
  }
}

TEST(Synth, NoiselessSamplesSitInsideTheirBins) {
  SynthConfig cfg;
  cfg.noise_sigma = 0.0;
  cfg.discrepancy = 1.5;
  const SynthConfig r = resolve(cfg);
  const Dataset ds = generate(cfg);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Vector x = ds.sample(i).features;
    const auto [lo, hi] = rank_bin(effective_cuts(r, ds.gender[i]), ds.rank[i], r.outer_margin);
    const double pos = x.dot(r.aging_direction);
    EXPECT_GT(pos, lo);
    EXPECT_LT(pos, hi);
    EXPECT_NEAR(x.dot(r.gender_direction), sign_of(ds.gender[i]) * 0.5 * r.gender_gap, 1e-12);
  }
}

TEST(Synth, DirectionsOrthonormalized) {
  SynthConfig cfg;
  cfg.dim = 3;
  cfg.gender_direction = Vector::Ones(3);
  cfg.aging_direction = Vector::Unit(3, 0);
  const SynthConfig r = resolve(cfg);
  EXPECT_NEAR(r.gender_direction.norm(), 1.0, 1e-12);
  EXPECT_NEAR(r.aging_direction.norm(), 1.0, 1e-12);
  EXPECT_NEAR(r.gender_direction.dot(r.aging_direction), 0.0, 1e-12);
}

TEST(Synth, DiscrepancyWidensTrueGap) {
  double last = -1.0;
  for (double disc : {0.0, 0.5, 1.0, 2.0, 4.0}) {
    SynthConfig cfg;
    cfg.discrepancy = disc;
    const double gap = effective_cut_gap(cfg);
    EXPECT_GT(gap, last);
    last = gap;
  }
}

TEST(Synth, MirroredGendersReflectAcrossGenderPlane) {
  SynthConfig cfg;
  cfg.discrepancy = 0.0;
  cfg.mirror_genders = true;
  const SynthConfig r = resolve(cfg);
  const Dataset ds = generate(cfg);
  const std::size_t half = ds.size() / 2;
  const Vector& g = r.gender_direction;
  for (std::size_t i = 0; i < half; ++i) {
    const Vector m = ds.sample(i).features;
    const Vector f = ds.sample(half + i).features;
    EXPECT_EQ(ds.rank[i], ds.rank[half + i]);
    EXPECT_LT((f - (m - 2.0 * g.dot(m) * g)).norm(), 1e-12);
  }
}

TEST(Synth, DefaultGenderIsSeparable) {
  const Dataset ds = generate(SynthConfig{});
  const SvmSolution svm = solve_svm(ds, 1.0, Vector::Zero(ds.dim()), 0.0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double s = ds.features.row(static_cast<Eigen::Index>(i)).dot(svm.w) + svm.b;
    if ((s >= 0.0) == (ds.gender[i] == Gender::Male)) ++correct;
  }
  EXPECT_GE(static_cast<double>(correct) / static_cast<double>(ds.size()), 0.99);
}

TEST(Synth, RejectsBadConfig) {
  auto kind = [](SynthConfig cfg) {
    try {
      generate(cfg);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Io;
  };
  SynthConfig c;
  c.num_ranks = 1;
  EXPECT_EQ(kind(c), ErrorKind::BadConfig);
  c = SynthConfig{};
  c.male_cut_centers = {1.0, 0.0, 2.0, 3.0};
  EXPECT_EQ(kind(c), ErrorKind::BadConfig);
  c = SynthConfig{};
  c.noise_sigma = -1.0;
  EXPECT_EQ(kind(c), ErrorKind::BadConfig);
  c = SynthConfig{};
  c.dim = 3;
  c.gender_direction = Vector::Unit(3, 1);
  c.aging_direction = Vector::Unit(3, 1) * 2.0;
  EXPECT_EQ(kind(c), ErrorKind::BadConfig);
}

}  // namespace
}  // namespace genage
