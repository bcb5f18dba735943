#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "dot/mesh.hpp"
#include "dot/phantom.hpp"

namespace dot {

enum class RegKind { Lp, Tv, Mixed };

/// Parameters of the regularization functionals. `kind` selects the inner
/// functional applied to the background-scaled absorption and reduced
/// scattering; beta1/beta2 weight the two physical channels.
struct RegularizerSpec {
  RegKind kind = RegKind::Tv;
  double p = 1.0;                 // l_p exponent, (0, 2]
  Eigen::VectorXd weights;        // c_i; empty means all ones
  double alpha1 = 1.0;            // mixed: weight of the l_p part
  double alpha2 = 1.0;            // mixed: weight of the TV part
  double beta1 = 0.5;
  double beta2 = 0.5;
  double mu_background = 0.025;       // expected background of mu
  double mus_background = 2.0;        // expected background of mu_s' = 1/(3D) - mu
};

/// R(y) = sum_i c_i |y_i - y_b_i|^p, 0 < p <= 2.
double lp_reg(const Eigen::VectorXd& y, const Eigen::VectorXd& y_background,
              const Eigen::VectorXd& weights, double p);

/// R(y) = sum over interior edges of l_i |y_a - y_b|.
double tv_reg(const Eigen::VectorXd& y, const EdgeAdjacency& adjacency);

/// alpha1 * lp_reg + alpha2 * tv_reg.
double mixed_reg(const Eigen::VectorXd& y, const Eigen::VectorXd& y_background,
                 const Eigen::VectorXd& weights, double p, const EdgeAdjacency& adjacency,
                 double alpha1, double alpha2);

/// Combined two-channel regularizer
///   R(q) = beta1 R(mu / mu_b) + beta2 R(mus' / mus_b),  mus' = 1/(3D) - mu,
/// with the inner R selected by the spec. The scaled fields have background 1.
double dot_reg(const ParameterField& q, const RegularizerSpec& spec,
               const EdgeAdjacency& adjacency);

/// Edge-weighted graph Laplacian over the free parameter vector, replicated on
/// the D and mu blocks. Edges to pinned (boundary-adjacent) triangles
/// contribute a diagonal anchor, making the operator strictly positive
/// definite on the free set.
Eigen::SparseMatrix<double> graph_laplacian(const Mesh& mesh, const EdgeAdjacency& adjacency,
                                            const FreeIndexMap& map);

}  // namespace dot
