#include "dot/irgn.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <stdexcept>

namespace dot {

double alpha_at(const IrgnConfig& cfg, int k) {
  if (!(cfg.alpha0 > 0)) throw std::runtime_error("irgn: alpha0 must be positive");
  if (!(cfg.decay > 1)) throw std::runtime_error("irgn: decay must exceed 1 so alpha_k -> 0");
  return cfg.alpha0 / std::pow(cfg.decay, k);
}

Eigen::VectorXd BoxBounds::project(Eigen::VectorXd x) const {
  if (lower.size()) x = x.cwiseMax(lower);
  if (upper.size()) x = x.cwiseMin(upper);
  return x;
}

bool BoxBounds::contains(const Eigen::VectorXd& x) const {
  if (lower.size() && (x.array() < lower.array()).any()) return false;
  if (upper.size() && (x.array() > upper.array()).any()) return false;
  return true;
}

Eigen::VectorXd search_direction(const Eigen::MatrixXd& J, const Eigen::VectorXd& r,
                                 const Eigen::SparseMatrix<double>& L, double alpha,
                                 const Eigen::VectorXd& v) {
  if (!(alpha > 0)) throw std::runtime_error("search_direction: alpha must be positive");
  const Eigen::Index n = J.cols();
  if (L.rows() != n || L.cols() != n || v.size() != n || r.size() != J.rows())
    throw std::runtime_error("search_direction: dimension mismatch");

  Eigen::MatrixXd H = J.transpose() * J + alpha * Eigen::MatrixXd(L);
  Eigen::VectorXd rhs = -(J.transpose() * r + alpha * (L * v));

  Eigen::LLT<Eigen::MatrixXd> llt(H);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("search_direction: Gauss-Newton system is not positive definite");

  const double rhs_norm = rhs.norm();
  if (rhs_norm == 0.0) return Eigen::VectorXd::Zero(n);
  Eigen::VectorXd p = llt.solve(rhs);
  p += llt.solve(rhs - H * p);
  if ((H * p - rhs).norm() / rhs_norm > 1e-10)
    throw std::runtime_error("search_direction: linear solve residual above tolerance");
  return p;
}

double wolfe_backtrack(const std::function<double(const Eigen::VectorXd&)>& cost,
                       const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
                       const Eigen::VectorXd& x, const Eigen::VectorXd& p, double gamma1,
                       double gamma2, int max_backtracks, double s_min, double cost0,
                       const Eigen::VectorXd* grad0) {
  const double f0 = std::isnan(cost0) ? cost(x) : cost0;
  const Eigen::VectorXd g0 = grad0 ? *grad0 : grad(x);
  const double d0 = g0.dot(p);
  if (!(d0 < 0)) return s_min;  // not a descent direction

  double s = 1.0;
  double last_finite = -1.0;
  for (int bt = 0;; ++bt) {
    const double f_trial = cost(x + s * p);
    if (std::isfinite(f_trial)) {
      last_finite = s;
      if (f_trial <= f0 + gamma1 * s * d0) return s;
      const double d_trial = grad(x + s * p).dot(p);
      if (std::isfinite(d_trial) && std::abs(d_trial) <= std::abs(gamma2 * d0)) return s;
    }
    const double next = 0.5 * s;
    if (bt + 1 >= max_backtracks || next <= s_min)
      return last_finite > 0 ? last_finite : s_min;
    s = next;
  }
}

IrgnReport run_irgn(const IrgnProblem& problem, const Eigen::VectorXd& g, double xi,
                    const IrgnConfig& cfg, Eigen::VectorXd x0) {
  if (!(cfg.rho > 1)) throw std::runtime_error("irgn: rho must exceed 1");
  if (!(xi >= 0)) throw std::runtime_error("irgn: xi must be nonnegative");
  if (!problem.bounds.contains(x0)) throw std::runtime_error("irgn: x0 violates bounds");

  const Eigen::Index n = x0.size();
  const Eigen::VectorXd anchor =
      problem.anchor.size() ? problem.anchor : Eigen::VectorXd::Zero(n);
  const Eigen::SparseMatrix<double>& L = problem.laplacian;

  IrgnReport report;
  Eigen::VectorXd x = std::move(x0);
  Eigen::VectorXd r = problem.theta(x) - g;
  report.residual_norms.push_back(r.norm());

  int k = 0;
  for (; k < cfg.max_iterations; ++k) {
    if (r.squaredNorm() <= cfg.rho * xi) {
      report.discrepancy_fired = true;
      break;
    }
    const double alpha = alpha_at(cfg, k);
    report.alphas.push_back(alpha);

    const Eigen::MatrixXd J = problem.jacobian(x);
    const Eigen::VectorXd v = x - anchor;
    const Eigen::VectorXd p = search_direction(J, r, L, alpha, v);

    auto cost = [&](const Eigen::VectorXd& y) {
      // line-search trials may leave the feasible set; such trials are
      // rejected by reporting a non-finite objective
      try {
        const Eigen::VectorXd ry = problem.theta(y) - g;
        const Eigen::VectorXd dy = y - anchor;
        return 0.5 * ry.squaredNorm() + 0.5 * alpha * dy.dot(L * dy);
      } catch (const std::exception&) {
        return std::numeric_limits<double>::infinity();
      }
    };
    auto grad = [&](const Eigen::VectorXd& y) -> Eigen::VectorXd {
      const Eigen::VectorXd ry = problem.theta(y) - g;
      return problem.jacobian(y).transpose() * ry + alpha * (L * (y - anchor));
    };
    const double f0 = 0.5 * r.squaredNorm() + 0.5 * alpha * v.dot(L * v);
    const Eigen::VectorXd g0 = J.transpose() * r + alpha * (L * v);
    const double s =
        wolfe_backtrack(cost, grad, x, p, cfg.gamma1, cfg.gamma2, cfg.max_backtracks, cfg.s_min,
                        f0, &g0);
    report.steps.push_back(s);

    x = problem.bounds.project(x + s * p);
    r = problem.theta(x) - g;
    report.residual_norms.push_back(r.norm());
  }

  report.x = std::move(x);
  report.iterations = k;
  report.termination = report.discrepancy_fired ? "discrepancy" : "max_iterations";
  return report;
}

}  // namespace dot
