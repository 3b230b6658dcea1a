#include "hkde/lsq.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Cholesky>

namespace hkde {

namespace {

Eigen::MatrixXd forward_jacobian(const ResidualFunction& f, const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& r, const Eigen::VectorXd& lower,
                                 const Eigen::VectorXd& upper, double rel_step, int& evaluations) {
  Eigen::MatrixXd jac(r.size(), x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double h = rel_step * std::max(std::abs(x[i]), 1e-3);
    if (x[i] + h > upper[i]) h = -h;
    if (x[i] + h < lower[i]) h = 0.5 * (upper[i] - x[i]);
    Eigen::VectorXd xh = x;
    xh[i] += h;
    const double step = xh[i] - x[i];
    if (step == 0.0) {  // degenerate box: variable is fixed
      jac.col(i).setZero();
      continue;
    }
    jac.col(i) = (f(xh) - r) / step;
    ++evaluations;
  }
  return jac;
}

}  // namespace

LsqResult solve_bounded_lsq(const ResidualFunction& residuals, const Eigen::VectorXd& x0,
                            const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                            const LsqOptions& options) {
  const Eigen::Index n = x0.size();
  if (lower.size() != n || upper.size() != n)
    throw std::invalid_argument("solve_bounded_lsq: bound dimensions differ from x0");
  if ((lower.array() > upper.array()).any())
    throw std::invalid_argument("solve_bounded_lsq: lower bound above upper bound");

  LsqResult out;
  out.x = x0.cwiseMax(lower).cwiseMin(upper);
  Eigen::VectorXd r = residuals(out.x);
  out.evaluations = 1;
  out.cost = r.squaredNorm();
  if (!std::isfinite(out.cost)) throw std::invalid_argument("solve_bounded_lsq: non-finite start");

  double mu = -1.0;
  double nu = 2.0;
  bool need_jacobian = true;
  Eigen::MatrixXd jac, jtj;
  Eigen::VectorXd grad;

  for (out.iterations = 0; out.iterations < options.max_iterations;) {
    if (out.cost == 0.0) {
      out.converged = true;
      out.message = "zero residual";
      return out;
    }
    if (need_jacobian) {
      jac = forward_jacobian(residuals, out.x, r, lower, upper, options.fd_relative_step,
                             out.evaluations);
      jtj = jac.transpose() * jac;
      grad = jac.transpose() * r;
      need_jacobian = false;
      if (mu < 0.0) mu = 1e-3 * std::max(jtj.diagonal().maxCoeff(), 1e-300);
    }

    // Free variables: interior, or at a bound with the descent direction pointing inward.
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool pinned_low = out.x[i] <= lower[i] && grad[i] > 0.0;
      const bool pinned_high = out.x[i] >= upper[i] && grad[i] < 0.0;
      if (!pinned_low && !pinned_high) free.push_back(i);
    }
    double scaled_grad = 0.0;
    for (Eigen::Index i : free) {
      const double d = std::sqrt(std::max(jtj(i, i), 1e-300));
      scaled_grad = std::max(scaled_grad, std::abs(grad[i]) / d);
    }
    if (free.empty() || scaled_grad <= options.gtol * std::sqrt(out.cost)) {
      out.converged = true;
      out.message = "projected gradient below tolerance";
      return out;
    }

    const Eigen::Index m = Eigen::Index(free.size());
    Eigen::MatrixXd a(m, m);
    Eigen::VectorXd b(m);
    for (Eigen::Index p = 0; p < m; ++p) {
      b[p] = -grad[free[p]];
      for (Eigen::Index q = 0; q < m; ++q) a(p, q) = jtj(free[p], free[q]);
    }
    const double diag_floor = 1e-12 * std::max(a.diagonal().maxCoeff(), 1e-300);
    for (Eigen::Index p = 0; p < m; ++p) a(p, p) += mu * std::max(a(p, p), diag_floor);
    const Eigen::VectorXd delta = a.ldlt().solve(b);

    Eigen::VectorXd trial = out.x;
    for (Eigen::Index p = 0; p < m; ++p) trial[free[p]] += delta[p];
    trial = trial.cwiseMax(lower).cwiseMin(upper);
    const Eigen::VectorXd step = trial - out.x;
    ++out.iterations;

    if (step.norm() <= 1e-15 * (out.x.norm() + 1e-15)) {
      out.converged = true;
      out.message = "step below resolution";
      return out;
    }

    const Eigen::VectorXd r_trial = residuals(trial);
    ++out.evaluations;
    const double cost_trial = r_trial.squaredNorm();
    const double predicted = -(2.0 * grad.dot(step) + step.dot(jtj * step));

    if (std::isfinite(cost_trial) && cost_trial < out.cost) {
      const double decrease = out.cost - cost_trial;
      const double rho = predicted > 0.0 ? decrease / predicted : 0.0;
      out.x = trial;
      r = r_trial;
      const double previous = out.cost;
      out.cost = cost_trial;
      need_jacobian = true;
      mu *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
      nu = 2.0;
      // Only trust a small decrease when the local model predicted it well.
      if (decrease <= options.ftol * previous && rho > 0.25) {
        out.converged = true;
        out.message = "relative cost change below tolerance";
        return out;
      }
    } else {
      mu *= nu;
      nu *= 2.0;
      if (mu > 1e20) {
        out.stagnated = true;
        out.message = "damping exceeded limit without progress";
        return out;
      }
    }
  }
  out.stagnated = true;
  out.message = "iteration limit reached";
  return out;
}

}  // namespace hkde
