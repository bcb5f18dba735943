#include "dot/jacobian.hpp"

#include <stdexcept>

namespace dot {

JacobianMatrix adjoint_jacobian(const Mesh& mesh, const ParameterField& q, double wavenumber,
                                const SourceBank& sources, const FreeIndexMap& map) {
  ForwardSystem system(mesh, q, wavenumber);
  const int ns = sources.count();
  const int nb = mesh.boundary_node_count();
  const int n = map.count();
  const long m = 2L * ns * nb;

  std::vector<Eigen::VectorXcd> u(ns);
  for (int s = 0; s < ns; ++s) u[s] = system.solve(neumann_load(mesh, sources.edge_flux[s]));

  std::vector<Eigen::VectorXcd> w(nb);
  for (int b = 0; b < nb; ++b) {
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(mesh.node_count());
    e[mesh.boundary_nodes[b]] = Complex(1, 0);
    w[b] = system.solve(e);
  }

  JacobianMatrix out;
  out.J.setZero(m, 2 * n);
  out.col_scale.resize(2 * n);

  const ElementMatrices& em = system.elements();
  for (int c = 0; c < n; ++c) {
    const int t = map.tris[c];
    const auto& tri = mesh.triangles[t];
    out.col_scale[c] = std::abs(q.D[t]);
    out.col_scale[n + c] = std::abs(q.mu[t]);

    // element-local restriction of each forward solution, premultiplied
    Eigen::Matrix<Complex, 3, Eigen::Dynamic> Ku(3, ns), Mu(3, ns);
    for (int s = 0; s < ns; ++s) {
      Eigen::Vector3cd ul(u[s][tri[0]], u[s][tri[1]], u[s][tri[2]]);
      Ku.col(s) = em.stiffness[t].cast<Complex>() * ul;
      Mu.col(s) = em.mass[t].cast<Complex>() * ul;
    }
    for (int b = 0; b < nb; ++b) {
      const Eigen::Vector3cd wl(w[b][tri[0]], w[b][tri[1]], w[b][tri[2]]);
      for (int s = 0; s < ns; ++s) {
        const Complex dD = -(wl.transpose() * Ku.col(s))(0);
        const Complex dmu = -(wl.transpose() * Mu.col(s))(0);
        const long row = 2L * (static_cast<long>(s) * nb + b);
        out.J(row, c) = dD.real();
        out.J(row + 1, c) = dD.imag();
        out.J(row, n + c) = dmu.real();
        out.J(row + 1, n + c) = dmu.imag();
      }
    }
  }
  return out;
}

JacobianMatrix fd_jacobian(const Mesh& mesh, const ParameterField& q, double wavenumber,
                           const SourceBank& sources, const FreeIndexMap& map,
                           double relative_step) {
  if (!(relative_step > 0)) throw std::runtime_error("fd_jacobian: step must be positive");
  const int n = map.count();
  ForwardSystem system(mesh, q, wavenumber);
  const long m = 2L * sources.count() * mesh.boundary_node_count();

  JacobianMatrix out;
  out.J.resize(m, 2 * n);
  out.col_scale.resize(2 * n);

  Eigen::VectorXd x = pack_free(q, map);
  auto theta = [&](const Eigen::VectorXd& xv) {
    ParameterField f = q;  // pinned triangles keep their values from q
    for (int i = 0; i < n; ++i) {
      f.D[map.tris[i]] = xv[i];
      f.mu[map.tris[i]] = xv[n + i];
    }
    system.refactor(f);
    return forward_map(system, sources).flatten();
  };

  for (int i = 0; i < 2 * n; ++i) {
    const double h = relative_step * std::abs(x[i]);
    if (!(h > 0)) throw std::runtime_error("fd_jacobian: zero step for a zero parameter");
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    if (xm[i] <= 0) throw std::runtime_error("fd_jacobian: perturbation leaves the feasible set");
    out.J.col(i) = (theta(xp) - theta(xm)) / (2 * h);
    out.col_scale[i] = std::abs(x[i]);
  }
  return out;
}

}  // namespace dot
