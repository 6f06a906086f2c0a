#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "genage/core.hpp"

namespace genage {

/// min_{w, b}  0.5 w^T Q w + weight * sum_r max(0, 1 - (u_r^T w + coef_r * b[index_r]))
///   s.t.      b[lo] <= b[hi]  for every (lo, hi) in `order`
///
/// One program covers the gender SVM (a single bias, coef = y) and the
/// ordinal SVOR (one bias per cut point, coef = +/-1). Biases carry no
/// quadratic term. A row with index -1 has no bias entry. `order` pairs must
/// be listed along each chain, lowest cut first.
struct HingeProgram {
  Matrix quad;  // d x d, symmetric positive definite; empty means identity
  Matrix rows;  // m x d
  std::vector<int> bias_index;
  std::vector<double> bias_coef;
  int num_bias = 0;
  double weight = 1.0;
  std::vector<std::pair<int, int>> order;

  Eigen::Index dim() const { return rows.cols(); }
  Eigen::Index num_rows() const { return rows.rows(); }

  Vector margins(const Vector& w, const Vector& b) const {
    Vector z = rows * w;
    for (Eigen::Index r = 0; r < z.size(); ++r) {
      const int j = bias_index[static_cast<std::size_t>(r)];
      if (j >= 0) z[r] += bias_coef[static_cast<std::size_t>(r)] * b[j];
    }
    return z;
  }

  double regularizer(const Vector& w) const {
    return quad.size() == 0 ? 0.5 * w.squaredNorm() : 0.5 * w.dot(quad * w);
  }

  double objective(const Vector& w, const Vector& b) const {
    const Vector z = margins(w, b);
    return regularizer(w) + weight * (1.0 - z.array()).max(0.0).sum();
  }
};

struct HingeSolution {
  Vector w;
  Vector b;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  double relative_gap = 0.0;  // complementarity / max(1, |objective|) at exit
  double residual = 0.0;      // max primal/dual infeasibility at exit

  /// Converged to the interior point tolerances, or stalled with a gap that
  /// is still within the caller's tolerance.
  bool acceptable(double tol) const {
    return converged || (std::isfinite(relative_gap) && relative_gap <= tol && residual <= 1e-6);
  }
};

struct InteriorPointOptions {
  double gap_tol = 1e-12;
  double residual_tol = 1e-10;
  int max_iterations = 200;
};

namespace detail {

struct IpState {
  Vector w, b;          // primal block variables
  Vector xi, t, s;      // slack, hinge margin surplus, ordering surplus
  Vector alpha, lam, mu;  // multipliers of t >= 0, xi >= 0, s >= 0
};

struct IpStep {
  Vector dw, db, dxi, dt, ds, dalpha, dlam, dmu;
};

}  // namespace detail

/// Mehrotra predictor-corrector interior point method. The slack block is
/// eliminated analytically, so each Newton step factors a (d + p) x (d + p)
/// matrix regardless of the number of hinge rows.
inline HingeSolution solve_hinge_program(const HingeProgram& prog,
                                         const InteriorPointOptions& opt = {}) {
  const Eigen::Index d = prog.dim();
  const Eigen::Index m = prog.num_rows();
  const Eigen::Index p = prog.num_bias;
  const Eigen::Index q = static_cast<Eigen::Index>(prog.order.size());
  const double c = prog.weight;

  HingeSolution out;
  out.w = Vector::Zero(d);
  out.b = Vector::Zero(p);
  if (m == 0 || c == 0.0) {
    out.objective = prog.objective(out.w, out.b);
    out.converged = true;
    return out;
  }

  auto quad_times = [&](const Vector& w) -> Vector {
    return prog.quad.size() == 0 ? Vector(w) : Vector(prog.quad * w);
  };
  auto rows_T_times = [&](const Vector& v, Vector& gw, Vector& gb) {
    gw = prog.rows.transpose() * v;
    gb = Vector::Zero(p);
    for (Eigen::Index r = 0; r < m; ++r) {
      const int j = prog.bias_index[static_cast<std::size_t>(r)];
      if (j >= 0) gb[j] += prog.bias_coef[static_cast<std::size_t>(r)] * v[r];
    }
  };
  auto order_times = [&](const Vector& b) -> Vector {  // G b
    Vector g(q);
    for (Eigen::Index k = 0; k < q; ++k) {
      const auto [lo, hi] = prog.order[static_cast<std::size_t>(k)];
      g[k] = b[lo] - b[hi];
    }
    return g;
  };
  auto order_T_times = [&](const Vector& v) -> Vector {  // G^T v
    Vector g = Vector::Zero(p);
    for (Eigen::Index k = 0; k < q; ++k) {
      const auto [lo, hi] = prog.order[static_cast<std::size_t>(k)];
      g[lo] += v[k];
      g[hi] -= v[k];
    }
    return g;
  };

  detail::IpState st;
  st.w = Vector::Zero(d);
  st.b = Vector::Zero(p);
  st.xi = Vector::Ones(m);
  st.t = Vector::Ones(m);
  st.alpha = Vector::Constant(m, 0.5 * c);
  st.lam = Vector::Constant(m, 0.5 * c);
  st.s = Vector::Ones(q);
  st.mu = Vector::Ones(q);

  const double pairs = static_cast<double>(2 * m + q);
  const double dual_scale = 1.0 + c;
  detail::IpState best = st;
  double best_merit = std::numeric_limits<double>::infinity();

  for (int iter = 1; iter <= opt.max_iterations; ++iter) {
    out.iterations = iter;
    Vector aw, ab;
    rows_T_times(st.alpha, aw, ab);
    const Vector r_dw = quad_times(st.w) - aw;
    const Vector r_db = -ab + order_T_times(st.mu);
    const Vector r_xi = Vector::Constant(m, c) - st.alpha - st.lam;
    const Vector z = prog.margins(st.w, st.b);
    const Vector r_t = z + st.xi - Vector::Ones(m) - st.t;
    const Vector r_s = -order_times(st.b) - st.s;

    const double gap = st.xi.dot(st.lam) + st.t.dot(st.alpha) + st.s.dot(st.mu);
    const double primal_obj = prog.objective(st.w, st.b);
    const double res_primal =
        std::max(r_t.lpNorm<Eigen::Infinity>(), q > 0 ? r_s.lpNorm<Eigen::Infinity>() : 0.0);
    const double res_dual = std::max(
        {r_dw.lpNorm<Eigen::Infinity>(), p > 0 ? r_db.lpNorm<Eigen::Infinity>() : 0.0,
         r_xi.lpNorm<Eigen::Infinity>()});
    const double rel_gap = gap / std::max(1.0, std::abs(primal_obj));
    const double residual = std::max(res_primal, res_dual / dual_scale);
    if (std::max(rel_gap, residual) < best_merit) {
      best_merit = std::max(rel_gap, residual);
      best = st;
      out.relative_gap = rel_gap;
      out.residual = residual;
    }

    if (gap <= opt.gap_tol * std::max(1.0, std::abs(primal_obj)) &&
        res_primal <= opt.residual_tol && res_dual <= opt.residual_tol * dual_scale) {
      out.converged = true;
      out.relative_gap = rel_gap;
      out.residual = residual;
      break;
    }

    // Reduced Newton matrix over (w, b).
    const Vector e = st.xi.cwiseQuotient(st.lam) + st.t.cwiseQuotient(st.alpha);
    const Vector inv_e = e.cwiseInverse();
    Matrix normal = Matrix::Zero(d + p, d + p);
    {
      const Matrix scaled = inv_e.cwiseSqrt().asDiagonal() * prog.rows;
      normal.topLeftCorner(d, d) = scaled.transpose() * scaled;
      if (prog.quad.size() == 0) {
        normal.topLeftCorner(d, d).diagonal().array() += 1.0;
      } else {
        normal.topLeftCorner(d, d) += prog.quad;
      }
      for (Eigen::Index r = 0; r < m; ++r) {
        const int j = prog.bias_index[static_cast<std::size_t>(r)];
        if (j < 0) continue;
        const double cf = prog.bias_coef[static_cast<std::size_t>(r)];
        normal.block(0, d + j, d, 1) += (inv_e[r] * cf) * prog.rows.row(r).transpose();
        normal(d + j, d + j) += inv_e[r] * cf * cf;
      }
      for (Eigen::Index k = 0; k < q; ++k) {
        const auto [lo, hi] = prog.order[static_cast<std::size_t>(k)];
        const double g = st.mu[k] / st.s[k];
        normal(d + lo, d + lo) += g;
        normal(d + hi, d + hi) += g;
        normal(d + lo, d + hi) -= g;
        normal(d + hi, d + lo) -= g;
      }
      normal.bottomLeftCorner(p, d) = normal.topRightCorner(d, p).transpose();
    }
    // A tiny ridge keeps the factorization stable late in the run, when the
    // barrier weights span many orders of magnitude; refinement against the
    // unperturbed matrix removes its bias from the step.
    Matrix ridged = normal;
    ridged.diagonal().array() += 1e-14 * (1.0 + normal.diagonal().cwiseAbs().maxCoeff());
    const Eigen::LDLT<Matrix> factor(ridged);
    if (factor.info() != Eigen::Success) break;
    auto solve_normal = [&](const Vector& rhs) {
      Vector sol = factor.solve(rhs);
      for (int pass = 0; pass < 2; ++pass) sol += factor.solve(rhs - normal * sol);
      return sol;
    };

    auto direction = [&](const Vector& r_xl, const Vector& r_ta,
                         const Vector& r_sm) -> detail::IpStep {
      detail::IpStep dir;
      const Vector rhs_alpha = -r_t + (st.xi.cwiseProduct(r_xi) + r_xl).cwiseQuotient(st.lam) -
                               r_ta.cwiseQuotient(st.alpha);
      const Vector rhs_mu = (-st.mu.cwiseProduct(r_s) - r_sm).cwiseQuotient(st.s);
      Vector gw, gb;
      rows_T_times(rhs_alpha.cwiseProduct(inv_e), gw, gb);
      Vector rhs(d + p);
      rhs.head(d) = -r_dw + gw;
      rhs.tail(p) = -r_db + gb - order_T_times(rhs_mu);
      const Vector sol = solve_normal(rhs);
      dir.dw = sol.head(d);
      dir.db = sol.tail(p);
      const Vector dz = prog.margins(dir.dw, dir.db);
      dir.dalpha = (rhs_alpha - dz).cwiseProduct(inv_e);
      dir.dmu = st.mu.cwiseQuotient(st.s).cwiseProduct(order_times(dir.db)) + rhs_mu;
      dir.dxi = st.xi.cwiseQuotient(st.lam).cwiseProduct(dir.dalpha - r_xi) -
                r_xl.cwiseQuotient(st.lam);
      dir.dlam = r_xi - dir.dalpha;
      dir.dt = -(r_ta + st.t.cwiseProduct(dir.dalpha)).cwiseQuotient(st.alpha);
      dir.ds = -(r_sm + st.s.cwiseProduct(dir.dmu)).cwiseQuotient(st.mu);
      return dir;
    };
    auto max_step = [](const Vector& v, const Vector& dv) {
      double a = 1.0;
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (dv[i] < 0.0) a = std::min(a, -v[i] / dv[i]);
      }
      return a;
    };
    auto step_length = [&](const detail::IpStep& dir) {
      return std::min({max_step(st.xi, dir.dxi), max_step(st.t, dir.dt), max_step(st.s, dir.ds),
                       max_step(st.alpha, dir.dalpha), max_step(st.lam, dir.dlam),
                       max_step(st.mu, dir.dmu)});
    };

    const double mean_gap = gap / pairs;
    const detail::IpStep affine =
        direction(st.xi.cwiseProduct(st.lam), st.t.cwiseProduct(st.alpha),
                  st.s.cwiseProduct(st.mu));
    const double a_aff = step_length(affine);
    const double gap_aff =
        (st.xi + a_aff * affine.dxi).dot(st.lam + a_aff * affine.dlam) +
        (st.t + a_aff * affine.dt).dot(st.alpha + a_aff * affine.dalpha) +
        (st.s + a_aff * affine.ds).dot(st.mu + a_aff * affine.dmu);
    const double sigma = std::pow(std::clamp(gap_aff / gap, 0.0, 1.0), 3);
    const double target = sigma * mean_gap;

    const detail::IpStep dir = direction(
        ((st.xi.cwiseProduct(st.lam) + affine.dxi.cwiseProduct(affine.dlam)).array() - target).matrix(),
        ((st.t.cwiseProduct(st.alpha) + affine.dt.cwiseProduct(affine.dalpha)).array() - target).matrix(),
        ((st.s.cwiseProduct(st.mu) + affine.ds.cwiseProduct(affine.dmu)).array() - target).matrix());
    const double a = std::min(1.0, 0.995 * step_length(dir));
    if (!std::isfinite(a) || !dir.dw.allFinite() || !dir.db.allFinite()) break;

    st.w += a * dir.dw;
    st.b += a * dir.db;
    st.xi += a * dir.dxi;
    st.t += a * dir.dt;
    st.s += a * dir.ds;
    st.alpha += a * dir.dalpha;
    st.lam += a * dir.dlam;
    st.mu += a * dir.dmu;
  }

  // Without convergence, hand back the iterate closest to optimality.
  if (!out.converged) st = std::move(best);
  out.w = st.w;
  out.b = st.b;
  // The interior iterate satisfies the ordering up to the primal residual;
  // remove that rounding-level violation.
  for (const auto& [lo, hi] : prog.order) out.b[hi] = std::max(out.b[hi], out.b[lo]);
  out.objective = prog.objective(out.w, out.b);
  return out;
}

}  // namespace genage
