#pragma once

#include <algorithm>
#include <limits>
#include <string>
#include <vector>

#include "genage/core.hpp"
#include "genage/hinge_qp.hpp"
#include "genage/metric.hpp"
#include "genage/svm.hpp"

namespace genage {

struct SvorSolution {
  Vector w;
  ThresholdLadder ladder_male;
  ThresholdLadder ladder_female;
  double objective = 0.0;
  int iterations = 0;
};

/// Smallest k with score < cuts[k - 1], or K when the score clears every cut.
inline int predict_rank_from_score(double score, const ThresholdLadder& ladder) {
  const auto& cuts = ladder.cuts();
  for (std::size_t k = 0; k < cuts.size(); ++k) {
    if (score < cuts[k]) return static_cast<int>(k) + 1;
  }
  return ladder.num_ranks();
}

inline int predict_rank(const Vector& w, const ThresholdLadder& ladder, const Vector& x) {
  if (w.size() != x.size()) {
    throw Error(ErrorKind::DimensionMismatch,
                "direction has dimension " + std::to_string(w.size()) + ", sample has " +
                    std::to_string(x.size()));
  }
  return predict_rank_from_score(w.dot(x), ladder);
}

/// Sum of explicit-constraint slacks at a fixed (w, ladder) for the given
/// samples: rank-k samples must score at most cuts[k] - 1 and at least
/// cuts[k-1] + 1. Rank 1 has no lower side and rank K no upper side.
inline double ordinal_slack(double score, int rank, const ThresholdLadder& ladder) {
  const int K = ladder.num_ranks();
  double s = 0.0;
  if (rank < K) s += std::max(0.0, 1.0 + score - ladder[static_cast<std::size_t>(rank - 1)]);
  if (rank > 1) s += std::max(0.0, 1.0 - (score - ladder[static_cast<std::size_t>(rank - 2)]));
  return s;
}

inline double svor_slack_sum(const Dataset& ds, const Vector& w, const ThresholdLadder& male,
                             const ThresholdLadder& female) {
  const Vector scores = ds.features * w;
  double total = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    total += ordinal_slack(scores[static_cast<Eigen::Index>(i)], ds.rank[i],
                           ds.gender[i] == Gender::Male ? male : female);
  }
  return total;
}

/// 0.5 w^T (I + 2 lambda3 anchor anchor^T) w + lambda2 * (sum of all slacks)
inline double svor_objective(const Dataset& ds, double lambda2, const Vector& anchor,
                             double lambda3, const Vector& w, const ThresholdLadder& male,
                             const ThresholdLadder& female) {
  const RankOneMetric metric(anchor, lambda3);
  return 0.5 * metric.quadratic(w) + lambda2 * svor_slack_sum(ds, w, male, female);
}

namespace detail {

struct OrdinalFit {
  Vector w;
  std::vector<ThresholdLadder> ladders;
  int iterations = 0;
};

// Joint fit of one direction and one ladder per group. Cut points outside a
// group's observed rank range have no finite optimum (their constraints are
// satisfied by sending the cut to -inf or +inf), so they are left out of the
// program and afterwards placed just far enough out that every constraint
// touching them holds with zero slack.
inline OrdinalFit fit_ordinal(const Matrix& x, const std::vector<int>& rank,
                              const std::vector<int>& group, int num_groups, int num_ranks,
                              double lambda2, const Vector& anchor, double lambda3, double tol,
                              MetricRoute route) {
  const int K = num_ranks;
  std::vector<int> rmin(static_cast<std::size_t>(num_groups), K + 1);
  std::vector<int> rmax(static_cast<std::size_t>(num_groups), 0);
  for (std::size_t i = 0; i < rank.size(); ++i) {
    auto g = static_cast<std::size_t>(group[i]);
    rmin[g] = std::min(rmin[g], rank[i]);
    rmax[g] = std::max(rmax[g], rank[i]);
  }
  for (int g = 0; g < num_groups; ++g) {
    if (rmax[static_cast<std::size_t>(g)] <= rmin[static_cast<std::size_t>(g)]) {
      throw Error(ErrorKind::InsufficientRanks,
                  "every ladder needs samples in at least two distinct ranks");
    }
  }

  // bias id of (group, threshold j in 1..K-1), or -1 when inactive
  std::vector<std::vector<int>> bias_id(static_cast<std::size_t>(num_groups),
                                        std::vector<int>(static_cast<std::size_t>(K), -1));
  HingeProgram prog;
  for (int g = 0; g < num_groups; ++g) {
    const auto gi = static_cast<std::size_t>(g);
    for (int j = rmin[gi]; j < rmax[gi]; ++j) {
      bias_id[gi][static_cast<std::size_t>(j)] = prog.num_bias++;
      if (j > rmin[gi]) {
        prog.order.emplace_back(bias_id[gi][static_cast<std::size_t>(j - 1)],
                                bias_id[gi][static_cast<std::size_t>(j)]);
      }
    }
  }

  const RankOneMetric metric(anchor, lambda3);
  const Matrix xt = route == MetricRoute::Transform ? metric.transform_rows(x) : x;
  if (route == MetricRoute::Direct && !metric.is_identity()) prog.quad = metric.dense();

  std::vector<Eigen::Index> src;
  std::vector<double> sgn;
  for (std::size_t i = 0; i < rank.size(); ++i) {
    const auto gi = static_cast<std::size_t>(group[i]);
    const int k = rank[i];
    if (k < rmax[gi]) {  // upper side: w.x - b_k <= -1 + xi
      src.push_back(static_cast<Eigen::Index>(i));
      sgn.push_back(-1.0);
      prog.bias_index.push_back(bias_id[gi][static_cast<std::size_t>(k)]);
      prog.bias_coef.push_back(1.0);
    }
    if (k > rmin[gi]) {  // lower side: w.x - b_{k-1} >= 1 - xi*
      src.push_back(static_cast<Eigen::Index>(i));
      sgn.push_back(1.0);
      prog.bias_index.push_back(bias_id[gi][static_cast<std::size_t>(k - 1)]);
      prog.bias_coef.push_back(-1.0);
    }
  }
  prog.rows.resize(static_cast<Eigen::Index>(src.size()), x.cols());
  for (std::size_t r = 0; r < src.size(); ++r) {
    prog.rows.row(static_cast<Eigen::Index>(r)) = sgn[r] * xt.row(src[r]);
  }
  prog.weight = lambda2;

  const HingeSolution sol = solve_hinge_program(prog);
  if (!sol.acceptable(tol)) {
    throw Error(ErrorKind::NonConvergence,
                "SVOR interior point stopped after " + std::to_string(sol.iterations) +
                    " iterations (relative gap " + std::to_string(sol.relative_gap) + ")",
                static_cast<std::size_t>(sol.iterations));
  }

  OrdinalFit fit;
  fit.iterations = sol.iterations;
  fit.w = route == MetricRoute::Transform ? metric.inverse_sqrt(sol.w) : sol.w;
  const Vector scores = x * fit.w;
  for (int g = 0; g < num_groups; ++g) {
    const auto gi = static_cast<std::size_t>(g);
    std::vector<double> cuts(static_cast<std::size_t>(K - 1), 0.0);
    for (int j = rmin[gi]; j < rmax[gi]; ++j) {
      cuts[static_cast<std::size_t>(j - 1)] = sol.b[bias_id[gi][static_cast<std::size_t>(j)]];
    }
    double lowest = std::numeric_limits<double>::infinity();
    double highest = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < rank.size(); ++i) {
      if (group[i] != g) continue;
      if (rank[i] == rmin[gi]) lowest = std::min(lowest, scores[static_cast<Eigen::Index>(i)]);
      if (rank[i] == rmax[gi]) highest = std::max(highest, scores[static_cast<Eigen::Index>(i)]);
    }
    const double low_fill = std::min(cuts[static_cast<std::size_t>(rmin[gi] - 1)], lowest - 1.0);
    for (int j = rmin[gi] - 1; j >= 1; --j) {
      cuts[static_cast<std::size_t>(j - 1)] = low_fill - 2.0 * (rmin[gi] - 1 - j);
    }
    const double high_fill = std::max(cuts[static_cast<std::size_t>(rmax[gi] - 2)], highest + 1.0);
    for (int j = rmax[gi]; j <= K - 1; ++j) {
      cuts[static_cast<std::size_t>(j - 1)] = high_fill + 2.0 * (j - rmax[gi]);
    }
    fit.ladders.emplace_back(std::move(cuts));
  }
  return fit;
}

inline void check_svor_inputs(const Matrix& x, const std::vector<int>& rank, int num_ranks,
                              double lambda2, const Vector& anchor, double lambda3, double tol) {
  if (num_ranks < 2) throw Error(ErrorKind::InsufficientRanks, "need K >= 2");
  if (static_cast<std::size_t>(x.rows()) != rank.size()) {
    throw Error(ErrorKind::DimensionMismatch, "feature rows and ranks differ in count");
  }
  if (anchor.size() != x.cols()) {
    throw Error(ErrorKind::DimensionMismatch,
                "anchor has dimension " + std::to_string(anchor.size()) + ", expected " +
                    std::to_string(x.cols()));
  }
  if (!(lambda2 >= 0.0) || !(lambda3 >= 0.0) || !(tol > 0.0)) {
    throw Error(ErrorKind::BadHyperParams, "lambda2, lambda3 must be >= 0 and tol > 0");
  }
  for (std::size_t i = 0; i < rank.size(); ++i) {
    if (rank[i] < 1 || rank[i] > num_ranks) {
      throw Error(ErrorKind::RankOutOfRange, "sample " + std::to_string(i) + " rank out of range",
                  i);
    }
  }
}

}  // namespace detail

/// Single-ladder ordinal regression on ranks alone (genders ignored).
inline SvorSolution solve_ordinal(const Matrix& x, const std::vector<int>& rank, int num_ranks,
                                  double lambda2, const Vector& anchor, double lambda3,
                                  double tol = 1e-6, MetricRoute route = MetricRoute::Transform) {
  detail::check_svor_inputs(x, rank, num_ranks, lambda2, anchor, lambda3, tol);
  const std::vector<int> group(rank.size(), 0);
  detail::OrdinalFit fit =
      detail::fit_ordinal(x, rank, group, 1, num_ranks, lambda2, anchor, lambda3, tol, route);
  SvorSolution out;
  out.w = fit.w;
  out.ladder_male = fit.ladders[0];
  out.ladder_female = fit.ladders[0];
  out.iterations = fit.iterations;
  const RankOneMetric metric(anchor, lambda3);
  const Vector scores = x * out.w;
  double slack = 0.0;
  for (std::size_t i = 0; i < rank.size(); ++i) {
    slack += ordinal_slack(scores[static_cast<Eigen::Index>(i)], rank[i], out.ladder_male);
  }
  out.objective = 0.5 * metric.quadratic(out.w) + lambda2 * slack;
  return out;
}

/// Ordinal SVM with one shared direction and, when `split_thresholds`, a
/// separate ladder per gender; otherwise one ladder copied into both fields.
inline SvorSolution solve_svor(const Dataset& ds, double lambda2, const Vector& anchor,
                               double lambda3, bool split_thresholds, double tol = 1e-6,
                               MetricRoute route = MetricRoute::Transform) {
  detail::check_svor_inputs(ds.features, ds.rank, ds.num_ranks, lambda2, anchor, lambda3, tol);
  if (!split_thresholds) {
    return solve_ordinal(ds.features, ds.rank, ds.num_ranks, lambda2, anchor, lambda3, tol,
                         route);
  }
  if (ds.distinct_ranks(Gender::Male) < 2 || ds.distinct_ranks(Gender::Female) < 2) {
    throw Error(ErrorKind::InsufficientRanks,
                "split ladders need each gender in at least two distinct ranks");
  }
  std::vector<int> group(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) group[i] = ds.gender[i] == Gender::Male ? 0 : 1;
  detail::OrdinalFit fit = detail::fit_ordinal(ds.features, ds.rank, group, 2, ds.num_ranks,
                                               lambda2, anchor, lambda3, tol, route);
  SvorSolution out;
  out.w = fit.w;
  out.ladder_male = fit.ladders[0];
  out.ladder_female = fit.ladders[1];
  out.iterations = fit.iterations;
  out.objective =
      svor_objective(ds, lambda2, anchor, lambda3, out.w, out.ladder_male, out.ladder_female);
  return out;
}

}  // namespace genage
