#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "genage/core.hpp"

namespace genage {

/// Two-block PLS regression of (gender, age rank) on the features.
struct PlsModel {
  int n_components = 0;
  std::vector<Vector> x_weights;   // unit norm
  std::vector<Vector> x_loadings;
  std::vector<Vector> y_loadings;  // length 2
  std::vector<Vector> x_scores;    // training scores, one per component
  Matrix coefficients;             // d x 2
  Vector x_mean;
  Vector y_mean;                   // length 2
  int num_ranks = 2;
};

struct PlsOptions {
  int max_iterations = 5000;
  double tol = 1e-15;
};

/// NIPALS with deflation of X only. Each pass alternates
///   w ∝ E^T u,  t = E w,  c ∝ Y^T t,  u = Y c
/// until w settles, which is the unit-norm pair maximizing cov(E w, Y c).
inline PlsModel fit_pls(const Matrix& x, const Matrix& y, int n_components, int num_ranks = 2,
                        const PlsOptions& opt = {}) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (n < 2) throw Error(ErrorKind::RankDeficient, "need at least two samples");
  if (y.rows() != n || y.cols() != 2) {
    throw Error(ErrorKind::DimensionMismatch, "Y must be N x 2 (gender, age)");
  }
  if (n_components < 1 || n_components > std::min<Eigen::Index>(d, n - 1)) {
    throw Error(ErrorKind::RankDeficient,
                "n_components must lie in 1..min(d, N-1), got " + std::to_string(n_components));
  }

  PlsModel model;
  model.num_ranks = num_ranks;
  model.x_mean = x.colwise().mean().transpose();
  model.y_mean = y.colwise().mean().transpose();
  Matrix e = x.rowwise() - model.x_mean.transpose();
  const Matrix yc = y.rowwise() - model.y_mean.transpose();
  if (e.cwiseAbs().maxCoeff() == 0.0) {
    throw Error(ErrorKind::RankDeficient, "every feature column is constant");
  }
  const double x_scale = e.norm();

  for (int a = 0; a < n_components; ++a) {
    Eigen::Index col = 0;
    yc.colwise().squaredNorm().maxCoeff(&col);
    Vector u = yc.col(col);
    Vector w = e.transpose() * u;
    if (!(w.norm() > 1e-12 * x_scale * std::max(1.0, u.norm()))) {
      throw Error(ErrorKind::RankDeficient,
                  "deflated X carries no covariance with Y at component " + std::to_string(a + 1));
    }
    w.normalize();
    Vector t;
    for (int it = 0; it < opt.max_iterations; ++it) {
      t = e * w;
      Vector c = yc.transpose() * t;
      const double cn = c.norm();
      if (cn == 0.0) break;
      c /= cn;
      u = yc * c;
      Vector w_next = e.transpose() * u;
      const double wn = w_next.norm();
      if (wn == 0.0) break;
      w_next /= wn;
      const double change = (w_next - w).norm();
      w = std::move(w_next);
      if (change < opt.tol) break;
    }
    t = e * w;
    const double tt = t.squaredNorm();
    if (!(tt > 1e-24 * x_scale * x_scale)) {
      throw Error(ErrorKind::RankDeficient,
                  "deflated X reached zero at component " + std::to_string(a + 1));
    }
    const Vector p = e.transpose() * t / tt;
    const Vector q = yc.transpose() * t / tt;
    e -= t * p.transpose();
    model.x_weights.push_back(w);
    model.x_loadings.push_back(p);
    model.y_loadings.push_back(q);
    model.x_scores.push_back(t);
  }
  model.n_components = n_components;

  Matrix W(d, n_components), P(d, n_components), Q(2, n_components);
  for (int a = 0; a < n_components; ++a) {
    W.col(a) = model.x_weights[static_cast<std::size_t>(a)];
    P.col(a) = model.x_loadings[static_cast<std::size_t>(a)];
    Q.col(a) = model.y_loadings[static_cast<std::size_t>(a)];
  }
  const Matrix ptw = P.transpose() * W;
  model.coefficients = W * ptw.fullPivLu().solve(Q.transpose());
  return model;
}

inline Vector predict_pls_continuous(const PlsModel& model, const Vector& x) {
  if (x.size() != model.x_mean.size()) {
    throw Error(ErrorKind::DimensionMismatch,
                "sample has dimension " + std::to_string(x.size()) + ", model expects " +
                    std::to_string(model.x_mean.size()));
  }
  return model.coefficients.transpose() * (x - model.x_mean) + model.y_mean;
}

struct PlsPrediction {
  Gender gender = Gender::Male;
  int rank = 1;
};

/// Gender by the sign of the first output (0 counts as male); rank by
/// rounding the second output and clamping it to 1..K.
inline PlsPrediction predict_pls(const PlsModel& model, const Vector& x) {
  const Vector y = predict_pls_continuous(model, x);
  PlsPrediction out;
  out.gender = y[0] >= 0.0 ? Gender::Male : Gender::Female;
  const double r = std::round(y[1]);
  out.rank = static_cast<int>(std::clamp(r, 1.0, static_cast<double>(model.num_ranks)));
  return out;
}

inline Matrix pls_targets(const Dataset& ds) {
  Matrix y(static_cast<Eigen::Index>(ds.size()), 2);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    y(static_cast<Eigen::Index>(i), 0) = sign_of(ds.gender[i]);
    y(static_cast<Eigen::Index>(i), 1) = ds.rank[i];
  }
  return y;
}

inline PlsModel fit_pls(const Dataset& ds, int n_components) {
  return fit_pls(ds.features, pls_targets(ds), n_components, ds.num_ranks);
}

}  // namespace genage
