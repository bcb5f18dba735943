#include "dot/forward.hpp"

#include <cmath>
#include <stdexcept>

namespace dot {

ElementMatrices element_matrices(const Mesh& mesh) {
  ElementMatrices em;
  const int nt = mesh.triangle_count();
  em.stiffness.resize(nt);
  em.mass.resize(nt);
  for (int t = 0; t < nt; ++t) {
    const auto& tri = mesh.triangles[t];
    const Vec2 p0 = mesh.nodes[tri[0]], p1 = mesh.nodes[tri[1]], p2 = mesh.nodes[tri[2]];
    const double area = mesh.tri_area[t];
    // P1 gradients: grad phi_i = (b_i, c_i) / (2 area), cyclic edge differences
    const double b[3] = {p1.y - p2.y, p2.y - p0.y, p0.y - p1.y};
    const double c[3] = {p2.x - p1.x, p0.x - p2.x, p1.x - p0.x};
    Eigen::Matrix3d K, M;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        K(i, j) = (b[i] * b[j] + c[i] * c[j]) / (4.0 * area);
        M(i, j) = area / 12.0 * (i == j ? 2.0 : 1.0);
      }
    em.stiffness[t] = K;
    em.mass[t] = M;
  }
  return em;
}

SourceBank trig_source_bank(const Mesh& mesh, int count) {
  if (count < 1) throw std::runtime_error("trig_source_bank: need at least one source");
  // angle origin at the area centroid
  double cx = 0, cy = 0, total = 0;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    cx += mesh.tri_area[t] * mesh.tri_centroid[t].x;
    cy += mesh.tri_area[t] * mesh.tri_centroid[t].y;
    total += mesh.tri_area[t];
  }
  cx /= total;
  cy /= total;

  const int ne = mesh.boundary_edge_count();
  SourceBank bank;
  for (int j = 1; j <= count; ++j) {
    const int mode = (j + 1) / 2;
    const bool use_cos = (j % 2) == 1;
    Eigen::VectorXd f(ne);
    for (int e = 0; e < ne; ++e) {
      const Vec2 mid = 0.5 * (mesh.nodes[mesh.boundary_edges[e][0]] +
                              mesh.nodes[mesh.boundary_edges[e][1]]);
      const double th = std::atan2(mid.y - cy, mid.x - cx);
      f[e] = use_cos ? std::cos(mode * th) : std::sin(mode * th);
    }
    if (f.cwiseAbs().maxCoeff() == 0.0)
      throw std::runtime_error("trig_source_bank: source vanishes on the whole boundary");
    bank.edge_flux.push_back(std::move(f));
  }
  return bank;
}

Eigen::VectorXcd neumann_load(const Mesh& mesh, const Eigen::VectorXd& edge_flux) {
  if (edge_flux.size() != mesh.boundary_edge_count())
    throw std::runtime_error("neumann_load: flux length does not match boundary edge count");
  Eigen::VectorXcd b = Eigen::VectorXcd::Zero(mesh.node_count());
  for (int e = 0; e < mesh.boundary_edge_count(); ++e) {
    const auto& edge = mesh.boundary_edges[e];
    const double len = norm(mesh.nodes[edge[1]] - mesh.nodes[edge[0]]);
    const double w = 0.5 * len * edge_flux[e];
    b[edge[0]] += w;
    b[edge[1]] += w;
  }
  return b;
}

ForwardSystem::ForwardSystem(const Mesh& mesh, const ParameterField& q, double wavenumber)
    : mesh_(&mesh), k_(wavenumber), elements_(element_matrices(mesh)) {
  if (k_ < 0) throw std::runtime_error("forward: wavenumber must be nonnegative");

  // fixed sparsity from mesh connectivity
  const int nn = mesh.node_count();
  std::vector<Eigen::Triplet<Complex>> trips;
  trips.reserve(9 * mesh.triangle_count());
  for (const auto& tri : mesh.triangles)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) trips.emplace_back(tri[i], tri[j], Complex(0, 0));
  matrix_.resize(nn, nn);
  matrix_.setFromTriplets(trips.begin(), trips.end());
  matrix_.makeCompressed();

  // per-triangle offsets into the value array
  scatter_.resize(mesh.triangle_count());
  const auto* outer = matrix_.outerIndexPtr();
  const auto* inner = matrix_.innerIndexPtr();
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const int row = tri[i], col = tri[j];
        int lo = outer[col], hi = outer[col + 1], found = -1;
        while (lo < hi) {
          const int mid = (lo + hi) / 2;
          if (inner[mid] < row)
            lo = mid + 1;
          else if (inner[mid] > row)
            hi = mid;
          else {
            found = mid;
            break;
          }
        }
        if (found < 0) throw std::logic_error("forward: sparsity scatter construction failed");
        scatter_[t][3 * i + j] = found;
      }
  }

  lu_.analyzePattern(matrix_);
  refactor(q);
}

void ForwardSystem::refactor(const ParameterField& q) {
  if (q.mesh != mesh_) throw std::runtime_error("forward: parameter field belongs to another mesh");
  const int nt = mesh_->triangle_count();
  if (q.D.size() != nt || q.mu.size() != nt)
    throw std::runtime_error("forward: parameter field length mismatch");
  double mu_max = 0;
  for (int t = 0; t < nt; ++t) {
    if (!(q.D[t] > 0)) throw std::runtime_error("forward: nonpositive diffusion coefficient");
    if (!(q.mu[t] >= 0)) throw std::runtime_error("forward: negative absorption coefficient");
    mu_max = std::max(mu_max, q.mu[t]);
  }
  singular_guard_ = (mu_max == 0.0 && k_ == 0.0);

  Complex* vals = matrix_.valuePtr();
  std::fill(vals, vals + matrix_.nonZeros(), Complex(0, 0));
  for (int t = 0; t < nt; ++t) {
    const Eigen::Matrix3d& K = elements_.stiffness[t];
    const Eigen::Matrix3d& M = elements_.mass[t];
    const Complex w_mass(q.mu[t], k_);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        vals[scatter_[t][3 * i + j]] += q.D[t] * K(i, j) + w_mass * M(i, j);
  }
  if (!singular_guard_) {
    lu_.factorize(matrix_);
    if (lu_.info() != Eigen::Success)
      throw std::runtime_error("forward: sparse factorization failed");
  }
}

Eigen::VectorXcd ForwardSystem::solve(const Eigen::VectorXcd& load) const {
  if (load.size() != mesh_->node_count())
    throw std::runtime_error("forward: load length does not match node count");
  if (singular_guard_)
    throw std::runtime_error("forward: singular system (mu == 0 everywhere and k == 0)");
  const double bnorm = load.norm();
  if (bnorm == 0.0) return Eigen::VectorXcd::Zero(load.size());
  Eigen::VectorXcd u = lu_.solve(load);
  double rel = (matrix_ * u - load).norm() / bnorm;
  if (rel > 1e-10) {
    u += lu_.solve(load - matrix_ * u);
    rel = (matrix_ * u - load).norm() / bnorm;
    if (rel > 1e-10) throw std::runtime_error("forward: solve residual above tolerance");
  }
  return u;
}

Eigen::VectorXd MeasurementSet::flatten() const {
  Eigen::VectorXd g(flat_size());
  long idx = 0;
  for (int s = 0; s < source_count; ++s)
    for (int b = 0; b < boundary_node_count; ++b) {
      g[idx++] = traces[s][b].real();
      g[idx++] = traces[s][b].imag();
    }
  return g;
}

MeasurementSet MeasurementSet::from_flat(const Eigen::VectorXd& g, int sources, int boundary_nodes) {
  if (g.size() != 2L * sources * boundary_nodes)
    throw std::runtime_error("measurements: flat vector length mismatch");
  MeasurementSet ms;
  ms.source_count = sources;
  ms.boundary_node_count = boundary_nodes;
  long idx = 0;
  for (int s = 0; s < sources; ++s) {
    Eigen::VectorXcd tr(boundary_nodes);
    for (int b = 0; b < boundary_nodes; ++b) {
      tr[b] = Complex(g[idx], g[idx + 1]);
      idx += 2;
    }
    ms.traces.push_back(std::move(tr));
  }
  return ms;
}

Eigen::VectorXcd measure(const Eigen::VectorXcd& u, const Mesh& mesh) {
  if (u.size() != mesh.node_count())
    throw std::runtime_error("measure: field length does not match node count");
  Eigen::VectorXcd g(mesh.boundary_node_count());
  for (int b = 0; b < mesh.boundary_node_count(); ++b) g[b] = u[mesh.boundary_nodes[b]];
  return g;
}

MeasurementSet forward_map(const ForwardSystem& system, const SourceBank& sources) {
  if (sources.count() < 1) throw std::runtime_error("forward_map: empty source bank");
  MeasurementSet ms;
  ms.source_count = sources.count();
  ms.boundary_node_count = system.mesh().boundary_node_count();
  for (const auto& flux : sources.edge_flux) {
    const Eigen::VectorXcd u = system.solve(neumann_load(system.mesh(), flux));
    ms.traces.push_back(measure(u, system.mesh()));
  }
  return ms;
}

MeasurementSet forward_map(const Mesh& mesh, const ParameterField& q, double wavenumber,
                           const SourceBank& sources) {
  ForwardSystem system(mesh, q, wavenumber);
  return forward_map(system, sources);
}

}  // namespace dot
