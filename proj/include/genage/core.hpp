#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "genage/error.hpp"

namespace genage {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// +1 is male and -1 is female everywhere in the library.
enum class Gender : std::int8_t { Male = 1, Female = -1 };

inline double sign_of(Gender g) { return static_cast<double>(static_cast<int>(g)); }
inline bool is_valid(Gender g) { return g == Gender::Male || g == Gender::Female; }

struct Sample {
  Vector features;
  Gender gender = Gender::Male;
  int age_rank = 1;
};

/// Feature matrix (one sample per row) with gender and ordinal age labels.
///
/// Ranks are contiguous integers 1..num_ranks. When the data came from raw
/// years, `rank_years[k - 1]` holds the year that rank k stands for, so
/// errors can be reported in years as well as in ranks.
struct Dataset {
  Matrix features;
  std::vector<Gender> gender;
  std::vector<int> rank;
  int num_ranks = 2;
  std::vector<int> rank_years;

  std::size_t size() const { return gender.size(); }
  Eigen::Index dim() const { return features.cols(); }

  Sample sample(std::size_t i) const {
    return Sample{features.row(static_cast<Eigen::Index>(i)).transpose(), gender[i], rank[i]};
  }

  static Dataset from_samples(std::span<const Sample> samples, int num_ranks) {
    Dataset ds;
    ds.num_ranks = num_ranks;
    const Eigen::Index d = samples.empty() ? 0 : samples.front().features.size();
    ds.features.resize(static_cast<Eigen::Index>(samples.size()), d);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (samples[i].features.size() != d) {
        throw Error(ErrorKind::DimensionMismatch,
                    "sample " + std::to_string(i) + " has dimension " +
                        std::to_string(samples[i].features.size()) + ", expected " +
                        std::to_string(d),
                    i);
      }
      ds.features.row(static_cast<Eigen::Index>(i)) = samples[i].features.transpose();
      ds.gender.push_back(samples[i].gender);
      ds.rank.push_back(samples[i].age_rank);
    }
    return ds;
  }

  Dataset subset(std::span<const std::size_t> indices) const {
    Dataset out;
    out.num_ranks = num_ranks;
    out.rank_years = rank_years;
    out.features.resize(static_cast<Eigen::Index>(indices.size()), dim());
    out.gender.reserve(indices.size());
    out.rank.reserve(indices.size());
    for (std::size_t j = 0; j < indices.size(); ++j) {
      out.features.row(static_cast<Eigen::Index>(j)) =
          features.row(static_cast<Eigen::Index>(indices[j]));
      out.gender.push_back(gender[indices[j]]);
      out.rank.push_back(rank[indices[j]]);
    }
    return out;
  }

  std::vector<std::size_t> indices_of(Gender g) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < size(); ++i) {
      if (gender[i] == g) idx.push_back(i);
    }
    return idx;
  }

  /// N^g_k: number of samples of gender g at rank k.
  std::size_t count(Gender g, int k) const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < size(); ++i) {
      if (gender[i] == g && rank[i] == k) ++n;
    }
    return n;
  }

  std::size_t count(Gender g) const {
    return static_cast<std::size_t>(std::count(gender.begin(), gender.end(), g));
  }

  int distinct_ranks(Gender g) const {
    std::vector<bool> seen(static_cast<std::size_t>(num_ranks) + 1, false);
    int n = 0;
    for (std::size_t i = 0; i < size(); ++i) {
      if (gender[i] != g || rank[i] < 1 || rank[i] > num_ranks) continue;
      if (!seen[static_cast<std::size_t>(rank[i])]) {
        seen[static_cast<std::size_t>(rank[i])] = true;
        ++n;
      }
    }
    return n;
  }

  bool operator==(const Dataset& other) const {
    return num_ranks == other.num_ranks && gender == other.gender && rank == other.rank &&
           rank_years == other.rank_years && features.rows() == other.features.rows() &&
           features.cols() == other.features.cols() && features == other.features;
  }
};

/// Checks every sample and dataset invariant; returns the dataset unchanged
/// when all of them hold.
inline const Dataset& validate_dataset(const Dataset& ds) {
  if (ds.num_ranks < 2) {
    throw Error(ErrorKind::RankOutOfRange,
                "num_ranks must be at least 2, got " + std::to_string(ds.num_ranks));
  }
  if (ds.rank.size() != ds.gender.size() ||
      static_cast<std::size_t>(ds.features.rows()) != ds.gender.size()) {
    throw Error(ErrorKind::DimensionMismatch, "label and feature counts disagree");
  }
  if (!ds.rank_years.empty() && ds.rank_years.size() != static_cast<std::size_t>(ds.num_ranks)) {
    throw Error(ErrorKind::DimensionMismatch, "rank_years must have one entry per rank");
  }
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!is_valid(ds.gender[i])) {
      throw Error(ErrorKind::BadGenderLabel,
                  "sample " + std::to_string(i) + " has gender " +
                      std::to_string(static_cast<int>(ds.gender[i])),
                  i);
    }
    if (ds.rank[i] < 1 || ds.rank[i] > ds.num_ranks) {
      throw Error(ErrorKind::RankOutOfRange,
                  "sample " + std::to_string(i) + " has rank " + std::to_string(ds.rank[i]) +
                      " outside 1.." + std::to_string(ds.num_ranks),
                  i);
    }
    if (!ds.features.row(static_cast<Eigen::Index>(i)).allFinite()) {
      throw Error(ErrorKind::NonFiniteFeature,
                  "sample " + std::to_string(i) + " has a non-finite feature", i);
    }
  }
  return ds;
}

/// Ordered cut points b_1 <= ... <= b_{K-1} splitting the score line into K
/// rank intervals.
class ThresholdLadder {
 public:
  ThresholdLadder() = default;

  explicit ThresholdLadder(std::vector<double> cuts) : cuts_(std::move(cuts)) {
    for (std::size_t k = 0; k < cuts_.size(); ++k) {
      if (!std::isfinite(cuts_[k])) {
        throw Error(ErrorKind::BadLadder, "cut " + std::to_string(k) + " is not finite", k);
      }
      if (k > 0 && cuts_[k - 1] > cuts_[k]) {
        throw Error(ErrorKind::BadLadder,
                    "cut " + std::to_string(k) + " is below its predecessor", k);
      }
    }
  }

  const std::vector<double>& cuts() const { return cuts_; }
  std::size_t size() const { return cuts_.size(); }
  int num_ranks() const { return static_cast<int>(cuts_.size()) + 1; }
  double operator[](std::size_t k) const { return cuts_[k]; }

  double spread() const { return cuts_.empty() ? 0.0 : cuts_.back() - cuts_.front(); }

  double max_abs_diff(const ThresholdLadder& other) const {
    if (other.size() != size()) {
      throw Error(ErrorKind::DimensionMismatch, "ladders have different lengths");
    }
    double m = 0.0;
    for (std::size_t k = 0; k < size(); ++k) m = std::max(m, std::abs(cuts_[k] - other.cuts_[k]));
    return m;
  }

  bool operator==(const ThresholdLadder&) const = default;

 private:
  std::vector<double> cuts_;
};

enum class Variant { Direct, TwoStep, ST, TT };

inline std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::Direct: return "direct";
    case Variant::TwoStep: return "2step";
    case Variant::ST: return "st";
    case Variant::TT: return "tt";
  }
  return "tt";
}

inline Variant parse_variant(std::string_view s) {
  if (s == "direct") return Variant::Direct;
  if (s == "2step" || s == "twostep") return Variant::TwoStep;
  if (s == "st") return Variant::ST;
  if (s == "tt") return Variant::TT;
  throw Error(ErrorKind::Usage, "unknown variant '" + std::string(s) + "'");
}

struct HyperParams {
  double lambda1 = 1.0;   // gender hinge loss weight
  double lambda2 = 1.0;   // ordinal slack weight
  double lambda3 = 1000.0;  // orthogonality coupling
  int t_max = 2;
  Variant variant = Variant::TT;
  double tol = 1e-6;

  void validate() const {
    if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0) || !(lambda3 >= 0.0) || !std::isfinite(lambda1) ||
        !std::isfinite(lambda2) || !std::isfinite(lambda3)) {
      throw Error(ErrorKind::BadHyperParams, "trade-off parameters must be finite and >= 0");
    }
    if (t_max < 1) throw Error(ErrorKind::BadHyperParams, "t_max must be >= 1");
    if (!(tol > 0.0)) throw Error(ErrorKind::BadHyperParams, "tol must be > 0");
  }
};

/// Trained gender-aware age estimator.
///
/// For the TwoStep variant each gender has its own aging direction; `w_a`
/// then belongs to the male model and `w_a_female` to the female one.
struct GenAgeModel {
  Vector w_g;
  double b_g = 0.0;
  Vector w_a;
  std::optional<Vector> w_a_female;
  ThresholdLadder ladder_male;
  ThresholdLadder ladder_female;
  Variant variant = Variant::TT;
  int num_ranks = 2;
  HyperParams hyper;  // as trained, after variant overrides
  std::vector<double> objective_trace;

  const Vector& aging_direction(Gender g) const {
    return (g == Gender::Female && w_a_female) ? *w_a_female : w_a;
  }
  const ThresholdLadder& ladder(Gender g) const {
    return g == Gender::Male ? ladder_male : ladder_female;
  }
};

}  // namespace genage
