#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "genage/core.hpp"

namespace genage {

/// Ground truth for a synthetic aging population.
///
/// A sample of gender s (+1/-1) at rank k is
///   s * gender_gap / 2 * g  +  position * a  +  N(0, noise_sigma^2 I)
/// with `position` uniform inside that gender's k-th bin on the aging axis.
/// Female bins are the female cut centres shifted by `discrepancy`; the two
/// outermost bins extend `outer_margin` past the extreme cuts.
struct SynthConfig {
  int dim = 10;
  int num_ranks = 5;
  int samples_per_cell = 40;
  Vector gender_direction;  // empty: e_1
  Vector aging_direction;   // empty: e_2
  double gender_gap = 4.0;
  std::vector<double> male_cut_centers;    // empty: evenly spaced, width 2, centred on 0
  std::vector<double> female_cut_centers;  // empty: same as male
  double discrepancy = 1.0;
  double noise_sigma = 0.5;
  double outer_margin = 2.0;
  // Female samples become mirror images of the male ones across the gender
  // hyperplane (same bin fractions, reflected noise).
  bool mirror_genders = false;
  std::uint64_t seed = 42;
};

/// Config with every default materialized and the two directions
/// orthonormalized; rejects anything that cannot be generated.
inline SynthConfig resolve(const SynthConfig& in) {
  SynthConfig cfg = in;
  auto bad = [](const std::string& msg) { throw Error(ErrorKind::BadConfig, msg); };
  if (cfg.dim < 2) bad("dim must be at least 2");
  if (cfg.num_ranks < 2) bad("num_ranks must be at least 2");
  if (cfg.samples_per_cell < 1) bad("samples_per_cell must be at least 1");
  if (!(cfg.gender_gap > 0.0) || !std::isfinite(cfg.gender_gap)) bad("gender_gap must be > 0");
  if (!(cfg.discrepancy >= 0.0) || !std::isfinite(cfg.discrepancy)) bad("discrepancy must be >= 0");
  if (!(cfg.noise_sigma >= 0.0) || !std::isfinite(cfg.noise_sigma)) bad("noise_sigma must be >= 0");
  if (!(cfg.outer_margin > 0.0) || !std::isfinite(cfg.outer_margin)) bad("outer_margin must be > 0");

  if (cfg.gender_direction.size() == 0) cfg.gender_direction = Vector::Unit(cfg.dim, 0);
  if (cfg.aging_direction.size() == 0) cfg.aging_direction = Vector::Unit(cfg.dim, 1);
  if (cfg.gender_direction.size() != cfg.dim || cfg.aging_direction.size() != cfg.dim) {
    bad("direction vectors must have length dim");
  }
  const double gn = cfg.gender_direction.norm();
  if (!(gn > 0.0) || !std::isfinite(gn)) bad("gender_direction must be nonzero");
  cfg.gender_direction /= gn;
  cfg.aging_direction -= cfg.aging_direction.dot(cfg.gender_direction) * cfg.gender_direction;
  const double an = cfg.aging_direction.norm();
  if (!(an > 1e-12) || !std::isfinite(an)) bad("aging_direction must not be parallel to gender_direction");
  cfg.aging_direction /= an;

  const auto cuts = static_cast<std::size_t>(cfg.num_ranks - 1);
  if (cfg.male_cut_centers.empty()) {
    for (std::size_t k = 0; k < cuts; ++k) {
      cfg.male_cut_centers.push_back(2.0 * static_cast<double>(k) - static_cast<double>(cuts - 1));
    }
  }
  if (cfg.female_cut_centers.empty()) cfg.female_cut_centers = cfg.male_cut_centers;
  for (const auto* centers : {&cfg.male_cut_centers, &cfg.female_cut_centers}) {
    if (centers->size() != cuts) bad("cut centre lists must have num_ranks - 1 entries");
    for (std::size_t k = 0; k < cuts; ++k) {
      if (!std::isfinite((*centers)[k])) bad("cut centres must be finite");
      if (k > 0 && (*centers)[k - 1] > (*centers)[k]) bad("cut centres must be non-decreasing");
    }
  }
  return cfg;
}

/// True cut positions on the aging axis, per gender.
inline std::vector<double> effective_cuts(const SynthConfig& resolved, Gender g) {
  std::vector<double> out = g == Gender::Male ? resolved.male_cut_centers : resolved.female_cut_centers;
  if (g == Gender::Female) {
    for (double& c : out) c += resolved.discrepancy;
  }
  return out;
}

/// max_k |male_k - female_k| over the true cuts.
inline double effective_cut_gap(const SynthConfig& cfg) {
  const SynthConfig r = resolve(cfg);
  const auto m = effective_cuts(r, Gender::Male);
  const auto f = effective_cuts(r, Gender::Female);
  double gap = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) gap = std::max(gap, std::abs(m[k] - f[k]));
  return gap;
}

/// Bin [lo, hi] of rank k (1-based) on the aging axis.
inline std::pair<double, double> rank_bin(const std::vector<double>& cuts, int k,
                                          double outer_margin) {
  const auto K = static_cast<int>(cuts.size()) + 1;
  const double lo = k == 1 ? cuts.front() - outer_margin : cuts[static_cast<std::size_t>(k - 2)];
  const double hi = k == K ? cuts.back() + outer_margin : cuts[static_cast<std::size_t>(k - 1)];
  return {lo, hi};
}

/// Samples are emitted male first, then female, rank-major within a gender.
inline Dataset generate(const SynthConfig& config) {
  const SynthConfig cfg = resolve(config);
  const Vector& g = cfg.gender_direction;
  const Vector& a = cfg.aging_direction;
  const int K = cfg.num_ranks;
  const int per = cfg.samples_per_cell;

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto open_unit = [&] {
    double u = 0.0;
    do {
      u = unit(rng);
    } while (u <= 0.0);
    return u;
  };

  Dataset ds;
  ds.num_ranks = K;
  ds.features.resize(static_cast<Eigen::Index>(2 * K * per), cfg.dim);
  ds.gender.reserve(static_cast<std::size_t>(2 * K * per));
  ds.rank.reserve(static_cast<std::size_t>(2 * K * per));

  const auto male_cuts = effective_cuts(cfg, Gender::Male);
  const auto female_cuts = effective_cuts(cfg, Gender::Female);
  std::vector<double> fractions;
  std::vector<Vector> noises;

  Eigen::Index row = 0;
  for (Gender s : {Gender::Male, Gender::Female}) {
    const auto& cuts = s == Gender::Male ? male_cuts : female_cuts;
    std::size_t draw = 0;
    for (int k = 1; k <= K; ++k) {
      const auto [lo, hi] = rank_bin(cuts, k, cfg.outer_margin);
      for (int i = 0; i < per; ++i, ++draw, ++row) {
        double u = 0.0;
        Vector noise(cfg.dim);
        if (s == Gender::Female && cfg.mirror_genders) {
          u = fractions[draw];
          noise = noises[draw] - 2.0 * g.dot(noises[draw]) * g;
        } else {
          u = open_unit();
          for (Eigen::Index j = 0; j < cfg.dim; ++j) noise[j] = cfg.noise_sigma * normal(rng);
          if (s == Gender::Male) {
            fractions.push_back(u);
            noises.push_back(noise);
          }
        }
        const double position = lo + u * (hi - lo);
        ds.features.row(row) =
            (sign_of(s) * 0.5 * cfg.gender_gap * g + position * a + noise).transpose();
        ds.gender.push_back(s);
        ds.rank.push_back(k);
      }
    }
  }
  return ds;
}

}  // namespace genage
