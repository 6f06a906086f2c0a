#pragma once

#include <cmath>

#include "genage/core.hpp"

namespace genage {

/// The metric M = I + 2 * lambda3 * anchor * anchor^T used by both
/// alternation half-steps.
///
/// Written as M = I + beta * u u^T with unit u and beta = 2 lambda3 |anchor|^2,
/// every power of M is I + ((1 + beta)^p - 1) u u^T, so M^{-1/2} needs no
/// factorization (Sherman-Morrison on the identity).
class RankOneMetric {
 public:
  RankOneMetric(const Vector& anchor, double lambda3) : dim_(anchor.size()) {
    const double n2 = anchor.squaredNorm();
    if (lambda3 > 0.0 && n2 > 0.0) {
      unit_ = anchor / std::sqrt(n2);
      beta_ = 2.0 * lambda3 * n2;
    }
  }

  Eigen::Index dim() const { return dim_; }
  bool is_identity() const { return beta_ == 0.0; }
  double beta() const { return beta_; }

  /// M v
  Vector apply(const Vector& v) const { return apply_power(v, 1.0); }

  /// M^{-1/2} v
  Vector inverse_sqrt(const Vector& v) const { return apply_power(v, -0.5); }

  /// Rows of X mapped through M^{-1/2}.
  Matrix transform_rows(const Matrix& x) const {
    if (is_identity()) return x;
    const double gamma = 1.0 / std::sqrt(1.0 + beta_) - 1.0;
    Vector proj = x * unit_;
    return x + gamma * proj * unit_.transpose();
  }

  /// w^T M w
  double quadratic(const Vector& w) const {
    if (is_identity()) return w.squaredNorm();
    const double p = unit_.dot(w);
    return w.squaredNorm() + beta_ * p * p;
  }

  Matrix dense() const {
    Matrix m = Matrix::Identity(dim_, dim_);
    if (!is_identity()) m += beta_ * unit_ * unit_.transpose();
    return m;
  }

 private:
  Vector apply_power(const Vector& v, double power) const {
    if (is_identity()) return v;
    const double gamma = std::pow(1.0 + beta_, power) - 1.0;
    return v + gamma * unit_.dot(v) * unit_;
  }

  Eigen::Index dim_ = 0;
  Vector unit_;
  double beta_ = 0.0;
};

}  // namespace genage
