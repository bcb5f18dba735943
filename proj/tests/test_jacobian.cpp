#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "dot/forward.hpp"
#include "dot/jacobian.hpp"
#include "dot/mesh.hpp"
#include "dot/phantom.hpp"
#include "helpers.hpp"

using namespace dot;

namespace {

struct SmallProblem {
  Mesh mesh;
  ParameterField q;
  FreeIndexMap map;
  SourceBank sources;
  double k = 2.9e-3;

  explicit SmallProblem(int target = 54, int n_sources = 6, std::uint64_t seed = 3)
      : mesh(generate_disk_mesh(25, target, seed)) {
    q.mesh = &mesh;
    q.boundary_background = {0.1646, 0.025};
    q.D = Eigen::VectorXd::Constant(mesh.triangle_count(), 0.1646);
    q.mu = Eigen::VectorXd::Constant(mesh.triangle_count(), 0.025);
    map = free_parameter_index(q);
    sources = trig_source_bank(mesh, n_sources);
  }
};

double max_rel_col_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double worst = 0;
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    const double scale = b.col(c).cwiseAbs().maxCoeff();
    if (scale == 0) continue;
    worst = std::max(worst, (a.col(c) - b.col(c)).cwiseAbs().maxCoeff() / scale);
  }
  return worst;
}

}  // namespace

TEST_CASE("jacobian: zero source gives zero rows") {
  SmallProblem p;
  SourceBank bank;
  bank.edge_flux.push_back(Eigen::VectorXd::Zero(p.mesh.boundary_edge_count()));
  bank.edge_flux.push_back(p.sources.edge_flux[0]);
  const JacobianMatrix J = adjoint_jacobian(p.mesh, p.q, p.k, bank, p.map);
  const long rows_per_source = 2L * p.mesh.boundary_node_count();
  CHECK(J.J.topRows(rows_per_source).cwiseAbs().maxCoeff() == 0.0);
  CHECK(J.J.bottomRows(rows_per_source).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("jacobian: adjoint agrees with central finite differences") {
  SmallProblem p;
  REQUIRE(p.mesh.triangle_count() <= 60);
  const JacobianMatrix adj = adjoint_jacobian(p.mesh, p.q, p.k, p.sources, p.map);
  const JacobianMatrix fd = fd_jacobian(p.mesh, p.q, p.k, p.sources, p.map, 1e-6);
  CHECK(max_rel_col_error(adj.J, fd.J) < 1e-4);
}

TEST_CASE("jacobian: adjoint/FD agreement at random in-bounds parameters") {
  SmallProblem p;
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> uD(0.08, 0.4), umu(0.01, 0.12);
  for (int rep = 0; rep < 3; ++rep) {
    ParameterField q = p.q;
    for (int t = 0; t < p.mesh.triangle_count(); ++t) {
      q.D[t] = uD(rng);
      q.mu[t] = umu(rng);
    }
    const JacobianMatrix adj = adjoint_jacobian(p.mesh, q, p.k, p.sources, p.map);
    const JacobianMatrix fd = fd_jacobian(p.mesh, q, p.k, p.sources, p.map, 1e-6);
    CHECK(max_rel_col_error(adj.J, fd.J) < 1e-4);
  }
}

TEST_CASE("jacobian: adjoint solve equals explicit transpose solve") {
  SmallProblem p;
  ForwardSystem system(p.mesh, p.q, p.k);
  const Eigen::MatrixXcd A = Eigen::MatrixXcd(system.matrix());
  Eigen::VectorXcd e = Eigen::VectorXcd::Zero(p.mesh.node_count());
  e[p.mesh.boundary_nodes[0]] = Complex(1, 0);
  const Eigen::VectorXcd w_forward = system.solve(e);
  const Eigen::VectorXcd w_transpose = A.transpose().fullPivLu().solve(e);
  CHECK((w_forward - w_transpose).norm() / w_transpose.norm() < 1e-10);
}

TEST_CASE("jacobian: Taylor remainder has quadratic slope") {
  SmallProblem p;
  const JacobianMatrix adj = adjoint_jacobian(p.mesh, p.q, p.k, p.sources, p.map);
  const Eigen::VectorXd x = pack_free(p.q, p.map);
  const int n2 = static_cast<int>(x.size());

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uni(-1, 1);
  Eigen::VectorXd eta(n2);
  for (int i = 0; i < n2; ++i) eta[i] = 0.4 * uni(rng) * x[i];  // in-bounds base direction

  ForwardSystem system(p.mesh, p.q, p.k);
  auto theta = [&](const Eigen::VectorXd& xv) {
    ParameterField f = p.q;
    for (int i = 0; i < p.map.count(); ++i) {
      f.D[p.map.tris[i]] = xv[i];
      f.mu[p.map.tris[i]] = xv[p.map.count() + i];
    }
    system.refactor(f);
    return forward_map(system, p.sources).flatten();
  };
  const Eigen::VectorXd base = theta(x);

  std::vector<double> log_t, log_err;
  for (double t : {0.1, 0.0316227766016838, 0.01, 0.00316227766016838}) {
    const double err = (theta(x + t * eta) - base - adj.J * (t * eta)).norm();
    log_t.push_back(std::log(t * eta.cwiseAbs().maxCoeff()));
    log_err.push_back(std::log(err));
  }
  // least-squares slope of log err vs log ||eta||_inf
  const int n = static_cast<int>(log_t.size());
  double mt = 0, me = 0;
  for (int i = 0; i < n; ++i) {
    mt += log_t[i];
    me += log_err[i];
  }
  mt /= n;
  me /= n;
  double num = 0, den = 0;
  for (int i = 0; i < n; ++i) {
    num += (log_t[i] - mt) * (log_err[i] - me);
    den += (log_t[i] - mt) * (log_t[i] - mt);
  }
  const double slope = num / den;
  CHECK(slope > 1.8);
  CHECK(slope < 2.2);
}

TEST_CASE("jacobian: permuting sources permutes row blocks exactly") {
  SmallProblem p(54, 4);
  SourceBank swapped;
  swapped.edge_flux = {p.sources.edge_flux[1], p.sources.edge_flux[0], p.sources.edge_flux[2],
                       p.sources.edge_flux[3]};
  const Eigen::MatrixXd J1 = adjoint_jacobian(p.mesh, p.q, p.k, p.sources, p.map).J;
  const Eigen::MatrixXd J2 = adjoint_jacobian(p.mesh, p.q, p.k, swapped, p.map).J;
  const long rows = 2L * p.mesh.boundary_node_count();
  CHECK((J1.middleRows(0, rows) - J2.middleRows(rows, rows)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((J1.middleRows(rows, rows) - J2.middleRows(0, rows)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((J1.middleRows(2 * rows, 2 * rows) - J2.middleRows(2 * rows, 2 * rows))
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("fd_jacobian: halving the step changes entries within the truncation estimate") {
  SmallProblem p(54, 2);
  const Eigen::MatrixXd coarse = fd_jacobian(p.mesh, p.q, p.k, p.sources, p.map, 2e-5).J;
  const Eigen::MatrixXd fine = fd_jacobian(p.mesh, p.q, p.k, p.sources, p.map, 1e-5).J;
  // central differences are O(h^2); the h -> h/2 difference stays tiny
  const double scale = fine.cwiseAbs().maxCoeff();
  CHECK((coarse - fine).cwiseAbs().maxCoeff() / scale < 1e-6);
}

TEST_CASE("fd_jacobian: invalid steps are rejected") {
  SmallProblem p(54, 2);
  CHECK_THROWS_AS(fd_jacobian(p.mesh, p.q, p.k, p.sources, p.map, 0.0), std::runtime_error);
  CHECK_THROWS_AS(fd_jacobian(p.mesh, p.q, p.k, p.sources, p.map, 1.5), std::runtime_error);
}
