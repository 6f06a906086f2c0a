#pragma once

#include <string>
#include <vector>

#include "genage/core.hpp"
#include "genage/hinge_qp.hpp"
#include "genage/metric.hpp"

namespace genage {

/// How the rank-1 metric enters the solve. `Transform` whitens the features
/// with M^{-1/2} and solves a plain SVM; `Direct` keeps Q = M in the program.
/// Both must reach the same optimum.
enum class MetricRoute { Transform, Direct };

struct SvmSolution {
  Vector w;
  double b = 0.0;
  double objective = 0.0;
  int iterations = 0;
};

/// 0.5 w^T (I + 2 lambda3 anchor anchor^T) w + lambda1 * sum_i max(0, 1 - y_i (w^T x_i + b))
inline double svm_objective(const Matrix& x, const std::vector<Gender>& y, double lambda1,
                            const Vector& anchor, double lambda3, const Vector& w, double b) {
  const RankOneMetric metric(anchor, lambda3);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double yi = sign_of(y[static_cast<std::size_t>(i)]);
    loss += std::max(0.0, 1.0 - yi * (x.row(i).dot(w) + b));
  }
  return 0.5 * metric.quadratic(w) + lambda1 * loss;
}

/// Linear hinge-loss SVM under the rank-1-modified metric; the bias is not
/// regularized.
inline SvmSolution solve_svm(const Matrix& x, const std::vector<Gender>& y, double lambda1,
                             const Vector& anchor, double lambda3, double tol = 1e-6,
                             MetricRoute route = MetricRoute::Transform) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    throw Error(ErrorKind::DimensionMismatch, "feature rows and labels differ in count");
  }
  if (anchor.size() != x.cols()) {
    throw Error(ErrorKind::DimensionMismatch,
                "anchor has dimension " + std::to_string(anchor.size()) + ", expected " +
                    std::to_string(x.cols()));
  }
  if (!(lambda1 >= 0.0) || !(lambda3 >= 0.0) || !(tol > 0.0)) {
    throw Error(ErrorKind::BadHyperParams, "lambda1, lambda3 must be >= 0 and tol > 0");
  }
  bool has_male = false, has_female = false;
  for (Gender g : y) {
    if (!is_valid(g)) throw Error(ErrorKind::BadGenderLabel, "labels must be +1 or -1");
    (g == Gender::Male ? has_male : has_female) = true;
  }
  if (!has_male || !has_female) {
    throw Error(ErrorKind::SingleClassInput, "both classes must be present");
  }
  if (x.rows() > 1 && (x.rowwise() - x.row(0)).cwiseAbs().maxCoeff() == 0.0) {
    throw Error(ErrorKind::SingleClassInput, "all samples are identical; classes are inseparable");
  }

  const RankOneMetric metric(anchor, lambda3);
  HingeProgram prog;
  prog.weight = lambda1;
  prog.num_bias = 1;
  if (route == MetricRoute::Transform) {
    prog.rows = metric.transform_rows(x);
  } else {
    prog.rows = x;
    if (!metric.is_identity()) prog.quad = metric.dense();
  }
  prog.bias_index.assign(y.size(), 0);
  prog.bias_coef.resize(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double yi = sign_of(y[i]);
    prog.rows.row(static_cast<Eigen::Index>(i)) *= yi;
    prog.bias_coef[i] = yi;
  }

  const HingeSolution sol = solve_hinge_program(prog);
  if (!sol.acceptable(tol)) {
    throw Error(ErrorKind::NonConvergence,
                "SVM interior point stopped after " + std::to_string(sol.iterations) +
                    " iterations (relative gap " + std::to_string(sol.relative_gap) + ")",
                static_cast<std::size_t>(sol.iterations));
  }
  SvmSolution out;
  out.w = route == MetricRoute::Transform ? metric.inverse_sqrt(sol.w) : sol.w;
  out.b = sol.b[0];
  out.iterations = sol.iterations;
  out.objective = svm_objective(x, y, lambda1, anchor, lambda3, out.w, out.b);
  return out;
}

inline SvmSolution solve_svm(const Dataset& ds, double lambda1, const Vector& anchor,
                             double lambda3, double tol = 1e-6,
                             MetricRoute route = MetricRoute::Transform) {
  return solve_svm(ds.features, ds.gender, lambda1, anchor, lambda3, tol, route);
}

}  // namespace genage
