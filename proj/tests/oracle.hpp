#pragma once

// Brute-force reference minimizers for tiny instances (d <= 2). They share
// nothing with the interior point path: the direction is found by nested
// ternary search over a box that provably contains the optimum, and the
// biases/cut points for a fixed direction are minimized exactly by scanning
// the breakpoints of the piecewise-linear loss.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline double quad_form(const Vec& w, const Vec& anchor, double lambda3) {
  const double p = anchor.dot(w);
  return 0.5 * (w.squaredNorm() + 2.0 * lambda3 * p * p);
}

inline double ternary(const std::function<double(double)>& f, double lo, double hi, int iters,
                      double* arg = nullptr) {
  for (int i = 0; i < iters; ++i) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (f(m1) <= f(m2)) {
      hi = m2;
    } else {
      lo = m1;
    }
  }
  const double x = 0.5 * (lo + hi);
  if (arg) *arg = x;
  return f(x);
}

/// min over w in R^d (d = 1 or 2) of reg(w) + loss(w), loss convex.
inline double minimize_direction(int d, double radius, const std::function<double(const Vec&)>& g,
                                 Vec* argmin = nullptr) {
  const int iters = 110;
  Vec w = Vec::Zero(d);
  if (d == 1) {
    double a = 0.0;
    const double v = ternary([&](double t) { Vec u(1); u << t; return g(u); }, -radius, radius,
                             iters, &a);
    w << a;
    if (argmin) *argmin = w;
    return v;
  }
  auto inner = [&](double t1, double* t2) {
    return ternary([&](double t) { Vec u(2); u << t1, t; return g(u); }, -radius, radius, iters,
                   t2);
  };
  double a1 = 0.0;
  const double v = ternary([&](double t1) { return inner(t1, nullptr); }, -radius, radius, iters,
                           &a1);
  double a2 = 0.0;
  inner(a1, &a2);
  w << a1, a2;
  if (argmin) *argmin = w;
  return v;
}

/// 0.5 w^T (I + 2 l3 a a^T) w + l1 * sum hinge(1 - y (w.x + b)), y in {+1, -1}.
inline double svm_optimum(const Mat& x, const std::vector<int>& y, double lambda1,
                          const Vec& anchor, double lambda3, Vec* w_out = nullptr) {
  const auto n = static_cast<int>(y.size());
  auto loss_at = [&](const Vec& z, double b) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::max(0.0, 1.0 - y[i] * (z[i] + b));
    return s;
  };
  auto g = [&](const Vec& w) {
    const Vec z = x * w;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) best = std::min(best, loss_at(z, y[i] - z[i]));
    return quad_form(w, anchor, lambda3) + lambda1 * best;
  };
  const double radius = std::sqrt(2.0 * g(Vec::Zero(x.cols()))) + 1e-9;
  return minimize_direction(static_cast<int>(x.cols()), radius, g, w_out);
}

/// Explicit-constraint ordinal objective. `group[i]` picks the ladder of
/// sample i; each ladder is monotone. Cut points are found exactly by a
/// dynamic program over the union of breakpoints of their groups.
inline double svor_optimum(const Mat& x, const std::vector<int>& rank,
                           const std::vector<int>& group, int num_groups, int K, double lambda2,
                           const Vec& anchor, double lambda3, Vec* w_out = nullptr) {
  const auto n = static_cast<int>(rank.size());
  auto ladder_loss = [&](const Vec& z, int g) {
    std::vector<double> cand;
    for (int i = 0; i < n; ++i) {
      if (group[i] != g) continue;
      cand.push_back(z[i] + 1.0);
      cand.push_back(z[i] - 1.0);
    }
    std::sort(cand.begin(), cand.end());
    const auto V = cand.size();
    auto f = [&](int j, double b) {  // threshold j in 1..K-1
      double s = 0.0;
      for (int i = 0; i < n; ++i) {
        if (group[i] != g) continue;
        if (rank[i] == j) s += std::max(0.0, 1.0 + z[i] - b);
        if (rank[i] == j + 1) s += std::max(0.0, 1.0 - z[i] + b);
      }
      return s;
    };
    std::vector<double> best(V, 0.0);
    for (int j = 1; j <= K - 1; ++j) {
      std::vector<double> next(V);
      double run = std::numeric_limits<double>::infinity();
      for (std::size_t v = 0; v < V; ++v) {
        run = std::min(run, best[v]);
        next[v] = f(j, cand[v]) + run;
      }
      best = std::move(next);
    }
    return *std::min_element(best.begin(), best.end());
  };
  auto g = [&](const Vec& w) {
    const Vec z = x * w;
    double total = 0.0;
    for (int gr = 0; gr < num_groups; ++gr) total += ladder_loss(z, gr);
    return quad_form(w, anchor, lambda3) + lambda2 * total;
  };
  const double radius = std::sqrt(2.0 * g(Vec::Zero(x.cols()))) + 1e-9;
  return minimize_direction(static_cast<int>(x.cols()), radius, g, w_out);
}

/// Projected subgradient descent on the SVM objective (bias included),
/// averaged iterates with a diminishing step. Slow but structure-free; used
/// as a second opinion on small instances.
inline double svm_subgradient(const Mat& x, const std::vector<int>& y, double lambda1,
                              const Vec& anchor, double lambda3, int iters) {
  const auto n = static_cast<int>(y.size());
  const auto d = x.cols();
  Vec w = Vec::Zero(d);
  double b = 0.0;
  auto obj = [&](const Vec& ww, double bb) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::max(0.0, 1.0 - y[i] * (x.row(i).dot(ww) + bb));
    return quad_form(ww, anchor, lambda3) + lambda1 * s;
  };
  double best = obj(w, b);
  for (int k = 1; k <= iters; ++k) {
    Vec gw = w + 2.0 * lambda3 * anchor.dot(w) * anchor;
    double gb = 0.0;
    for (int i = 0; i < n; ++i) {
      if (1.0 - y[i] * (x.row(i).dot(w) + b) > 0.0) {
        gw -= lambda1 * y[i] * x.row(i).transpose();
        gb -= lambda1 * y[i];
      }
    }
    const double step = 1.0 / (std::sqrt(static_cast<double>(k)) * (1.0 + lambda1 * n));
    w -= step * gw;
    b -= step * gb;
    best = std::min(best, obj(w, b));
  }
  return best;
}

}  // namespace oracle
