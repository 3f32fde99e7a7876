#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>

namespace ringforge {

struct LevMarOptions {
  int max_iterations = 200;
  double ftol = 1e-14;          // relative cost improvement
  double xtol = 1e-12;          // relative step size
  double initial_lambda = 1e-3;
  std::optional<Eigen::VectorXd> lower;  // box clamp, applied after each step
  std::optional<Eigen::VectorXd> upper;
};

struct LevMarResult {
  Eigen::VectorXd parameters;
  Eigen::MatrixXd covariance;  // (J^T J)^-1 * rss / (m - n); zero if m <= n
  double rss = 0.0;
  int iterations = 0;
  bool converged = false;
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

/// Dense Levenberg-Marquardt for small parameter counts. When `jacobian` is
/// null a central-difference Jacobian is used. Deterministic: no randomized
/// restarts, fixed iteration order.
LevMarResult levmar_fit(const ResidualFn& residual, Eigen::VectorXd initial,
                        const LevMarOptions& options = {},
                        const JacobianFn& jacobian = nullptr);

/// Golden-section minimization of a unimodal scalar function on [a, b].
double golden_section_min(const std::function<double(double)>& f, double a, double b,
                          double tol, int max_iterations = 200);

}  // namespace ringforge
