#pragma once

#include <functional>
#include <string>

#include <Eigen/Core>

namespace hkde {

/// Residual vector r(x); the solver minimises r.squaredNorm().
using ResidualFunction = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct LsqOptions {
  double ftol = 1e-8;             // stop when the relative cost decrease falls below this
  double gtol = 1e-12;            // ... or the scaled projected gradient does
  int max_iterations = 200;
  double fd_relative_step = 1e-6;
};

struct LsqResult {
  Eigen::VectorXd x;
  double cost = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  bool stagnated = false;  // damping blew up or the iteration cap was hit
  std::string message;
};

/// Box-constrained Levenberg-Marquardt with Marquardt diagonal scaling.
/// Steps are projected onto [lower, upper]; variables pinned at a bound with
/// the gradient pushing outward are frozen for that iteration. The Jacobian
/// is built by forward differences (backward when a step would leave the box).
LsqResult solve_bounded_lsq(const ResidualFunction& residuals, const Eigen::VectorXd& x0,
                            const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                            const LsqOptions& options = {});

}  // namespace hkde
