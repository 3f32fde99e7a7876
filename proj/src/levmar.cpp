#include "ringforge/levmar.hpp"

#include <cmath>

namespace ringforge {

namespace {

Eigen::MatrixXd numeric_jacobian(const ResidualFn& residual, const Eigen::VectorXd& p,
                                 int m) {
  const int n = static_cast<int>(p.size());
  Eigen::MatrixXd jac(m, n);
  for (int j = 0; j < n; ++j) {
    const double step = 1e-6 * std::max(1.0, std::abs(p[j]));
    Eigen::VectorXd lo = p, hi = p;
    lo[j] -= step;
    hi[j] += step;
    jac.col(j) = (residual(hi) - residual(lo)) / (2.0 * step);
  }
  return jac;
}

void clamp(Eigen::VectorXd& p, const LevMarOptions& options) {
  if (options.lower)
    p = p.cwiseMax(*options.lower);
  if (options.upper)
    p = p.cwiseMin(*options.upper);
}

}  // namespace

LevMarResult levmar_fit(const ResidualFn& residual, Eigen::VectorXd initial,
                        const LevMarOptions& options, const JacobianFn& jacobian) {
  LevMarResult result;
  clamp(initial, options);
  Eigen::VectorXd p = initial;
  Eigen::VectorXd r = residual(p);
  const int m = static_cast<int>(r.size());
  const int n = static_cast<int>(p.size());
  double cost = r.squaredNorm();
  double lambda = options.initial_lambda;

  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    const Eigen::MatrixXd jac = jacobian ? jacobian(p) : numeric_jacobian(residual, p, m);
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * r;

    bool stepped = false;
    for (int attempt = 0; attempt < 40; ++attempt) {
      Eigen::MatrixXd damped = jtj;
      damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
      const Eigen::VectorXd delta = damped.ldlt().solve(-jtr);
      Eigen::VectorXd trial = p + delta;
      clamp(trial, options);
      const Eigen::VectorXd r_trial = residual(trial);
      const double cost_trial = r_trial.squaredNorm();
      if (std::isfinite(cost_trial) && cost_trial < cost) {
        const double step_norm = (trial - p).norm();
        const double improvement = (cost - cost_trial) / std::max(cost, 1e-300);
        p = trial;
        r = r_trial;
        cost = cost_trial;
        lambda = std::max(lambda * 0.3, 1e-12);
        stepped = true;
        if (improvement < options.ftol || step_norm < options.xtol * (1.0 + p.norm())) {
          result.converged = true;
          iter++;
          goto done;
        }
        break;
      }
      lambda *= 8.0;
      if (lambda > 1e14) break;
    }
    if (!stepped) {
      result.converged = true;  // stuck at a (local) minimum
      break;
    }
  }
done:
  result.parameters = p;
  result.rss = cost;
  result.iterations = iter;
  const Eigen::MatrixXd jac = jacobian ? jacobian(p) : numeric_jacobian(residual, p, m);
  const Eigen::MatrixXd jtj = jac.transpose() * jac;
  if (m > n) {
    const double s2 = cost / static_cast<double>(m - n);
    Eigen::MatrixXd reg = jtj;
    reg.diagonal().array() += 1e-300;
    result.covariance = reg.inverse() * s2;
  } else {
    result.covariance = Eigen::MatrixXd::Zero(n, n);
  }
  return result;
}

double golden_section_min(const std::function<double(double)>& f, double a, double b,
                          double tol, int max_iterations) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < max_iterations && std::abs(b - a) > tol; ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace ringforge
