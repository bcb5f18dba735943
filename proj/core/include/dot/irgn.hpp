#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace dot {

/// Knobs of the iteratively regularized Gauss-Newton loop. The regularization
/// sequence is alpha_k = alpha0 / decay^k with decay > 1, which satisfies
/// monotonicity, bounded successive ratio, and convergence to zero.
struct IrgnConfig {
  double alpha0 = 1e-2;
  double decay = 1.5;  // sup alpha_k / alpha_{k+1}
  double rho = 1.5;    // discrepancy factor, > 1
  double s_min = 1e-3;
  double gamma1 = 1e-4;  // sufficient-decrease constant
  double gamma2 = 0.9;   // curvature constant
  int max_iterations = 200;
  int max_backtracks = 20;
};

double alpha_at(const IrgnConfig& cfg, int k);

/// Componentwise box projection; empty bounds mean unconstrained.
struct BoxBounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Eigen::VectorXd project(Eigen::VectorXd x) const;
  bool contains(const Eigen::VectorXd& x) const;
};

/// Gauss-Newton search direction: solves
///   (J^T J + alpha L) p = -(J^T r + alpha L v)
/// by Cholesky (the system must be positive definite; an indefinite system
/// signals a broken Laplacian). The relative linear-solve residual is kept
/// below 1e-10. `v` is the vector the Laplacian penalizes, normally the offset
/// of the iterate from the known background.
Eigen::VectorXd search_direction(const Eigen::MatrixXd& J, const Eigen::VectorXd& r,
                                 const Eigen::SparseMatrix<double>& L, double alpha,
                                 const Eigen::VectorXd& v);

/// Backtracking over s in {1, 1/2, 1/4, ...}: returns the first trial meeting
/// either strong Wolfe condition
///   cost(x + s p) <= cost(x) + gamma1 s grad(x)'p          (sufficient decrease)
///   |grad(x + s p)'p| <= |gamma2 grad(x)'p|                (curvature)
/// or the last admissible trial once max_backtracks is exhausted. Trials never
/// go at or below s_min, and trials with a non-finite objective are rejected.
/// If p is not a descent direction the fallback is s_min. `cost0`/`grad0`, when
/// provided, skip the re-evaluation at x.
double wolfe_backtrack(const std::function<double(const Eigen::VectorXd&)>& cost,
                       const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
                       const Eigen::VectorXd& x, const Eigen::VectorXd& p, double gamma1,
                       double gamma2, int max_backtracks, double s_min,
                       double cost0 = std::numeric_limits<double>::quiet_NaN(),
                       const Eigen::VectorXd* grad0 = nullptr);

/// A nonlinear least-squares problem with Tikhonov smoothing: minimize
///   1/2 ||theta(x) - g||^2 + alpha_k/2 (x - anchor)^T L (x - anchor).
struct IrgnProblem {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> theta;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian;
  Eigen::SparseMatrix<double> laplacian;  // over the unknown vector
  Eigen::VectorXd anchor;                 // empty means zero
  BoxBounds bounds;                       // applied after every step
};

struct IrgnReport {
  Eigen::VectorXd x;
  int iterations = 0;
  bool discrepancy_fired = false;
  std::string termination;             // "discrepancy" or "max_iterations"
  std::vector<double> residual_norms;  // ||theta(x_k) - g|| for k = 0..iterations
  std::vector<double> alphas;
  std::vector<double> steps;
};

/// Modified IRGN: q_{k+1} = q_k + s_k p_k with the direction above and the
/// discrepancy stopping rule ||theta(x_K) - g||^2 <= rho * xi checked before
/// every step (so an exact initial fit terminates with zero iterations).
IrgnReport run_irgn(const IrgnProblem& problem, const Eigen::VectorXd& g, double xi,
                    const IrgnConfig& cfg, Eigen::VectorXd x0);

}  // namespace dot
