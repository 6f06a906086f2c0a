#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "genage/core.hpp"
#include "genage/svm.hpp"
#include "genage/svor.hpp"

namespace genage {

struct TrainConfig {
  HyperParams hyper;
  std::uint64_t init_seed = 42;  // the initialization is deterministic; kept for provenance
  bool record_trace = true;
};

struct Prediction {
  Gender gender = Gender::Male;
  int rank = 1;
};

/// Joint objective at a model state:
///   0.5|w_g|^2 + lambda1 * sum hinge + 0.5|w_a|^2 + lambda2 * sum slacks + lambda3 (w_g^T w_a)^2
/// Samples are scored with their own gender's ladder (and, for TwoStep
/// models, their own gender's aging direction).
inline double objective_value(const GenAgeModel& model, const Dataset& ds,
                              const HyperParams& hyper) {
  const Eigen::Index d = ds.dim();
  if (model.w_g.size() != d || model.w_a.size() != d ||
      (model.w_a_female && model.w_a_female->size() != d)) {
    throw Error(ErrorKind::DimensionMismatch, "model and dataset dimensions differ");
  }
  if (model.ladder_male.num_ranks() != ds.num_ranks ||
      model.ladder_female.num_ranks() != ds.num_ranks) {
    throw Error(ErrorKind::DimensionMismatch, "ladder length does not match num_ranks");
  }
  double hinge = 0.0;
  double slack = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto row = ds.features.row(static_cast<Eigen::Index>(i));
    const Gender g = ds.gender[i];
    hinge += std::max(0.0, 1.0 - sign_of(g) * (row.dot(model.w_g) + model.b_g));
    slack += ordinal_slack(row.dot(model.aging_direction(g)), ds.rank[i], model.ladder(g));
  }
  double reg = 0.5 * model.w_g.squaredNorm() + 0.5 * model.w_a.squaredNorm();
  double coupling = std::pow(model.w_g.dot(model.w_a), 2);
  if (model.w_a_female) {
    reg += 0.5 * model.w_a_female->squaredNorm();
    coupling += std::pow(model.w_g.dot(*model.w_a_female), 2);
  }
  return reg + hyper.lambda1 * hinge + hyper.lambda2 * slack + hyper.lambda3 * coupling;
}

/// The hyperparameters a variant actually trains with.
inline HyperParams effective_hyper(const HyperParams& hyper) {
  HyperParams h = hyper;
  if (h.variant == Variant::Direct || h.variant == Variant::TwoStep) h.lambda3 = 0.0;
  if (h.variant == Variant::Direct) h.t_max = 1;
  return h;
}

namespace detail {

inline GenAgeModel fit_two_step(const Dataset& ds, const HyperParams& h, bool record) {
  GenAgeModel model;
  model.variant = Variant::TwoStep;
  model.num_ranks = ds.num_ranks;
  model.hyper = h;
  const Vector zero = Vector::Zero(ds.dim());
  const SvmSolution svm = solve_svm(ds, h.lambda1, zero, 0.0, h.tol);
  model.w_g = svm.w;
  model.b_g = svm.b;
  for (Gender g : {Gender::Male, Gender::Female}) {
    const auto idx = ds.indices_of(g);
    const Dataset part = ds.subset(idx);
    const SvorSolution sol =
        solve_ordinal(part.features, part.rank, ds.num_ranks, h.lambda2, zero, 0.0, h.tol);
    if (g == Gender::Male) {
      model.w_a = sol.w;
      model.ladder_male = sol.ladder_male;
    } else {
      model.w_a_female = sol.w;
      model.ladder_female = sol.ladder_male;
    }
  }
  if (record) model.objective_trace.push_back(objective_value(model, ds, h));
  return model;
}

}  // namespace detail

/// Alternating minimization of the joint objective.
///
/// TT and ST alternate an SVM step (anchor = current w_a) with an SVOR step
/// (anchor = current w_g), starting from a single-ladder, uncoupled SVOR fit;
/// TT splits the ladder by gender, ST keeps one. Direct is ST with
/// lambda3 = 0 and one pass. TwoStep trains one SVM and an independent SVOR
/// per true gender.
///
/// Every half-step exactly minimizes a convex restriction of the joint
/// objective, so the trace cannot rise; a half-step whose result comes back
/// worse by solver round-off is discarded and the previous block kept.
inline GenAgeModel fit(const Dataset& ds, const TrainConfig& cfg) {
  validate_dataset(ds);
  cfg.hyper.validate();
  if (ds.count(Gender::Male) == 0 || ds.count(Gender::Female) == 0) {
    throw Error(ErrorKind::DegenerateGender, "both genders must be present in the training data");
  }
  const HyperParams h = effective_hyper(cfg.hyper);
  if (h.variant == Variant::TwoStep) return detail::fit_two_step(ds, h, cfg.record_trace);

  const bool split = h.variant == Variant::TT;
  const Eigen::Index d = ds.dim();

  GenAgeModel model;
  model.variant = h.variant;
  model.num_ranks = ds.num_ranks;
  model.hyper = h;
  const SvorSolution init = solve_svor(ds, h.lambda2, Vector::Zero(d), 0.0, false, h.tol);
  model.w_a = init.w;
  model.ladder_male = init.ladder_male;
  model.ladder_female = init.ladder_female;
  model.w_g = Vector::Zero(d);
  model.b_g = 0.0;

  double current = objective_value(model, ds, h);
  double previous_iteration = current;
  std::vector<double> trace;
  for (int t = 1; t <= h.t_max; ++t) {
    const SvmSolution svm = solve_svm(ds, h.lambda1, model.w_a, h.lambda3, h.tol);
    {
      GenAgeModel next = model;
      next.w_g = svm.w;
      next.b_g = svm.b;
      const double value = objective_value(next, ds, h);
      if (value <= current) {
        model = std::move(next);
        current = value;
      }
      trace.push_back(current);
    }
    const SvorSolution svor = solve_svor(ds, h.lambda2, model.w_g, h.lambda3, split, h.tol);
    {
      GenAgeModel next = model;
      next.w_a = svor.w;
      next.ladder_male = svor.ladder_male;
      next.ladder_female = svor.ladder_female;
      const double value = objective_value(next, ds, h);
      if (value <= current) {
        model = std::move(next);
        current = value;
      }
      trace.push_back(current);
    }
    if (t >= 2 && std::abs(previous_iteration - current) <= h.tol * std::max(1.0, std::abs(current))) {
      break;
    }
    previous_iteration = current;
  }
  if (cfg.record_trace) model.objective_trace = std::move(trace);
  return model;
}

inline Prediction predict_with_gender(const GenAgeModel& model, const Vector& x, Gender route) {
  const Vector& w = model.aging_direction(route);
  if (x.size() != w.size()) {
    throw Error(ErrorKind::DimensionMismatch,
                "sample has dimension " + std::to_string(x.size()) + ", model expects " +
                    std::to_string(w.size()));
  }
  return Prediction{route, predict_rank(w, model.ladder(route), x)};
}

/// Gender from the SVM hyperplane (a zero score counts as male); the rank
/// uses the predicted gender's ladder.
inline Prediction predict(const GenAgeModel& model, const Vector& x) {
  if (x.size() != model.w_g.size()) {
    throw Error(ErrorKind::DimensionMismatch,
                "sample has dimension " + std::to_string(x.size()) + ", model expects " +
                    std::to_string(model.w_g.size()));
  }
  const Gender g = model.w_g.dot(x) + model.b_g >= 0.0 ? Gender::Male : Gender::Female;
  return predict_with_gender(model, x, g);
}

}  // namespace genage
