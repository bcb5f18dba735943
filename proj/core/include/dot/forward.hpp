#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <array>
#include <complex>
#include <memory>
#include <vector>

#include "dot/mesh.hpp"
#include "dot/phantom.hpp"

namespace dot {

using Complex = std::complex<double>;
using SparseMatrixC = Eigen::SparseMatrix<Complex>;

/// Per-triangle P1 element matrices: unit-coefficient stiffness and mass.
struct ElementMatrices {
  std::vector<Eigen::Matrix3d> stiffness;
  std::vector<Eigen::Matrix3d> mass;
};

ElementMatrices element_matrices(const Mesh& mesh);

/// Neumann boundary data: one real flux value per boundary edge (aligned with
/// Mesh::boundary_edges) for each source.
struct SourceBank {
  std::vector<Eigen::VectorXd> edge_flux;

  int count() const { return static_cast<int>(edge_flux.size()); }
};

/// Trigonometric flux patterns cos(n theta), sin(n theta) with n = 1,1,2,2,...
/// sampled at boundary-edge midpoints; theta is measured around the area
/// centroid of the mesh.
SourceBank trig_source_bank(const Mesh& mesh, int count);

/// Nodal load b_a = integral over the boundary of f phi_a, assembled edge-wise
/// (exact for the per-edge-constant flux representation).
Eigen::VectorXcd neumann_load(const Mesh& mesh, const Eigen::VectorXd& edge_flux);

/// Assembled frequency-domain diffusion system
///   A_{ab} = sum_T [ D_T (grad phi_a, grad phi_b)_T + (mu_T + i k) (phi_a, phi_b)_T ].
/// The matrix is complex-symmetric; a sparse LU factorization is cached. The
/// sparsity pattern depends only on the mesh, so refactor() re-assembles and
/// re-factorizes for new parameters without repeating the symbolic analysis.
class ForwardSystem {
 public:
  ForwardSystem(const Mesh& mesh, const ParameterField& q, double wavenumber);

  void refactor(const ParameterField& q);

  /// Solves A u = b with a relative residual of at most 1e-10 (one step of
  /// iterative refinement is applied if the direct solve falls short).
  Eigen::VectorXcd solve(const Eigen::VectorXcd& load) const;

  const SparseMatrixC& matrix() const { return matrix_; }
  const Mesh& mesh() const { return *mesh_; }
  const ElementMatrices& elements() const { return elements_; }
  double wavenumber() const { return k_; }

 private:
  const Mesh* mesh_;
  double k_;
  ElementMatrices elements_;
  std::vector<std::array<int, 9>> scatter_;  // value-array offsets per triangle entry
  SparseMatrixC matrix_;
  Eigen::SparseLU<SparseMatrixC> lu_;
  bool singular_guard_;  // true when mu == 0 everywhere and k == 0
};

/// Boundary photon-density measurements: the Dirichlet trace per source at the
/// boundary nodes in canonical order. flatten() freezes the layout
/// (source-major, boundary-node-minor, real part then imaginary part) used by
/// every consumer of the measurement vector.
struct MeasurementSet {
  int source_count = 0;
  int boundary_node_count = 0;
  std::vector<Eigen::VectorXcd> traces;
  Eigen::VectorXd sigma;  // per-flattened-entry noise std; empty until a noise model is attached

  long flat_size() const { return 2L * source_count * boundary_node_count; }
  Eigen::VectorXd flatten() const;
  static MeasurementSet from_flat(const Eigen::VectorXd& g, int sources, int boundary_nodes);
};

/// Dirichlet trace: u restricted to the boundary nodes in canonical loop order.
Eigen::VectorXcd measure(const Eigen::VectorXcd& u, const Mesh& mesh);

MeasurementSet forward_map(const Mesh& mesh, const ParameterField& q, double wavenumber,
                           const SourceBank& sources);

/// forward_map against an existing factorization (the system must have been
/// built or refactored for the parameters of interest).
MeasurementSet forward_map(const ForwardSystem& system, const SourceBank& sources);

}  // namespace dot
