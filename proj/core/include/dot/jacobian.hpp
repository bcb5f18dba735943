#pragma once

#include <Eigen/Core>

#include "dot/forward.hpp"
#include "dot/mesh.hpp"
#include "dot/phantom.hpp"

namespace dot {

/// Derivative of the flattened measurement vector with respect to the free
/// parameter vector [D_free, mu_free]. Rows follow the measurement flattening
/// (source-major, boundary-node-minor, real then imaginary).
struct JacobianMatrix {
  Eigen::MatrixXd J;
  Eigen::VectorXd col_scale;  // parameter magnitude per column, for diagnostics/scaling
};

/// Adjoint-method Jacobian. For measurement functional u_s(node b) the adjoint
/// field w_b solves A w = e_b (A is complex-symmetric, so the adjoint solve is
/// a forward solve), and
///   d g_{s,b} / d D_T  = - w_b^T K_T u_s,
///   d g_{s,b} / d mu_T = - w_b^T M_T u_s
/// with K_T, M_T the element stiffness and mass blocks.
JacobianMatrix adjoint_jacobian(const Mesh& mesh, const ParameterField& q, double wavenumber,
                                const SourceBank& sources, const FreeIndexMap& map);

/// Central finite differences per free parameter; the step for parameter i is
/// `relative_step * x_i`. Serves as the independent oracle for the adjoint
/// computation. Cost: two forward maps per free parameter.
JacobianMatrix fd_jacobian(const Mesh& mesh, const ParameterField& q, double wavenumber,
                           const SourceBank& sources, const FreeIndexMap& map,
                           double relative_step);

}  // namespace dot
