#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "dot/mesh.hpp"
#include "dot/phantom.hpp"
#include "dot/regularizers.hpp"
#include "helpers.hpp"

using namespace dot;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

const Eigen::VectorXd kNoWeights;

}  // namespace

TEST_CASE("lp_reg: exact values") {
  CHECK(lp_reg(vec({1, 2, 3}), vec({1, 2, 3}), kNoWeights, 1.0) == 0.0);
  CHECK(lp_reg(vec({2, 0}), vec({1, 1}), vec({1, 1}), 1.0) == 2.0);
  // p = 2 with unit weights is the squared Euclidean distance
  const Eigen::VectorXd y = vec({3, -1, 4});
  const Eigen::VectorXd yb = vec({1, 1, 1});
  CHECK(lp_reg(y, yb, kNoWeights, 2.0) == doctest::Approx((y - yb).squaredNorm()));
}

TEST_CASE("lp_reg: zero exactly at the background where weights are positive") {
  const Eigen::VectorXd yb = vec({1, 2});
  CHECK(lp_reg(vec({1, 5}), yb, vec({1, 0}), 1.0) == 0.0);   // deviation only where c = 0
  CHECK(lp_reg(vec({1.5, 2}), yb, vec({1, 0}), 1.0) > 0.0);
}

TEST_CASE("lp_reg: error paths") {
  CHECK_THROWS_AS(lp_reg(vec({1}), vec({1, 2}), kNoWeights, 1.0), std::runtime_error);
  CHECK_THROWS_AS(lp_reg(vec({1}), vec({1}), kNoWeights, 0.0), std::runtime_error);
  CHECK_THROWS_AS(lp_reg(vec({1}), vec({1}), kNoWeights, 2.5), std::runtime_error);
  CHECK_THROWS_AS(lp_reg(vec({1}), vec({1}), vec({-1}), 1.0), std::runtime_error);
}

TEST_CASE("tv_reg: constant field, single jump, shift invariance") {
  const Mesh two = testutil::two_triangle_square();
  const EdgeAdjacency adj = edge_adjacency(two);
  CHECK(tv_reg(vec({5, 5}), adj) == 0.0);
  CHECK(tv_reg(vec({0, 1}), adj) == doctest::Approx(std::sqrt(2.0)));

  const Mesh disk = generate_disk_mesh(10, 150, 8);
  const EdgeAdjacency dadj = edge_adjacency(disk);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> uni(-3, 3);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::VectorXd y(disk.triangle_count());
    for (int t = 0; t < disk.triangle_count(); ++t) y[t] = uni(rng);
    const double c = uni(rng);
    const Eigen::VectorXd shifted = y.array() + c;
    CHECK(tv_reg(y, dadj) == doctest::Approx(tv_reg(shifted, dadj)).epsilon(1e-12));
  }
}

TEST_CASE("tv_reg: triangle inequality on random triples") {
  const Mesh disk = generate_disk_mesh(10, 100, 2);
  const EdgeAdjacency adj = edge_adjacency(disk);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> uni(-2, 2);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::VectorXd a(disk.triangle_count()), b(disk.triangle_count());
    for (int t = 0; t < disk.triangle_count(); ++t) {
      a[t] = uni(rng);
      b[t] = uni(rng);
    }
    CHECK(tv_reg(a + b, adj) <= tv_reg(a, adj) + tv_reg(b, adj) + 1e-10);
  }
}

TEST_CASE("lp_reg: p-th root satisfies the triangle inequality for p = 1, 2") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> uni(-2, 2);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(6);
  for (double p : {1.0, 2.0}) {
    for (int rep = 0; rep < 20; ++rep) {
      Eigen::VectorXd a(6), b(6);
      for (int i = 0; i < 6; ++i) {
        a[i] = uni(rng);
        b[i] = uni(rng);
      }
      const double lhs = std::pow(lp_reg(a + b, zero, kNoWeights, p), 1.0 / p);
      const double rhs = std::pow(lp_reg(a, zero, kNoWeights, p), 1.0 / p) +
                         std::pow(lp_reg(b, zero, kNoWeights, p), 1.0 / p);
      CHECK(lhs <= rhs + 1e-10);
    }
  }
}

TEST_CASE("mixed_reg: zero at background, linear in the mix weights") {
  const Mesh two = testutil::two_triangle_square();
  const EdgeAdjacency adj = edge_adjacency(two);
  const Eigen::VectorXd yb = vec({1, 1});
  CHECK(mixed_reg(yb, yb, kNoWeights, 1.0, adj, 0.7, 0.3) == 0.0);

  const Eigen::VectorXd y = vec({2, 0.5});
  const double v1 = mixed_reg(y, yb, kNoWeights, 1.0, adj, 0.7, 0.3);
  const double v2 = mixed_reg(y, yb, kNoWeights, 1.0, adj, 1.4, 0.6);
  CHECK(v2 == doctest::Approx(2 * v1));
  CHECK_THROWS_AS(mixed_reg(y, yb, kNoWeights, 1.0, adj, 0.0, 1.0), std::runtime_error);
}

TEST_CASE("mixed_reg: spot value on a three-triangle chain") {
  // fan of three triangles around node 0: adjacency is a path with two edges
  const Mesh chain = make_mesh({{0, 0}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}},
                               {{{0, 1, 2}}, {{0, 2, 3}}, {{0, 3, 4}}});
  const EdgeAdjacency adj = edge_adjacency(chain);
  REQUIRE(adj.entries.size() == 2);
  const Eigen::VectorXd y = vec({1.0, 3.0, 2.0});
  const Eigen::VectorXd yb = vec({1.0, 1.0, 1.0});
  // independent scalar evaluation: lp = |0| + |2| + |1| = 3;
  // tv = |y0-y1| * |(0,0)-(1,1)| + |y1-y2| * |(0,0)-(0,1)| = 2 sqrt(2) + 1
  const double expected = 0.25 * 3.0 + 1.5 * (2.0 * std::sqrt(2.0) + 1.0);
  CHECK(mixed_reg(y, yb, kNoWeights, 1.0, adj, 0.25, 1.5) == doctest::Approx(expected));
}

TEST_CASE("dot_reg: zero exactly at background") {
  const Mesh m = generate_disk_mesh(10, 100, 2);
  const EdgeAdjacency adj = edge_adjacency(m);
  const double D_bg = 1.0 / (3.0 * 2.025);
  RegularizerSpec spec;
  spec.mu_background = 0.025;
  // the expected background of mu_s' is derived with the same expression the
  // regularizer uses, so the scaled field is exactly 1 at background
  spec.mus_background = 1.0 / (3.0 * D_bg) - 0.025;
  ParameterField q;
  q.mesh = &m;
  q.D = Eigen::VectorXd::Constant(m.triangle_count(), D_bg);
  q.mu = Eigen::VectorXd::Constant(m.triangle_count(), 0.025);
  for (RegKind kind : {RegKind::Lp, RegKind::Tv, RegKind::Mixed}) {
    spec.kind = kind;
    CHECK(dot_reg(q, spec, adj) == 0.0);
  }
}

TEST_CASE("dot_reg: hand value on a two-triangle mesh with one mu anomaly") {
  const Mesh m = testutil::two_triangle_square();
  const EdgeAdjacency adj = edge_adjacency(m);
  RegularizerSpec spec;
  spec.kind = RegKind::Lp;
  spec.p = 1.0;
  spec.mu_background = 0.025;
  spec.mus_background = 2.0;
  const double D_bg = 1.0 / (3.0 * 2.025);

  ParameterField q;
  q.mesh = &m;
  q.D = Eigen::VectorXd::Constant(2, D_bg);
  q.mu = vec({0.05, 0.025});  // mu doubled on triangle 0 only

  // scaled absorption: (2, 1); scaled scattering couples through 1/(3D) - mu:
  // mus_0 = 2.025 - 0.05 = 1.975 -> 0.9875, mus_1 = 2 -> 1
  const double expected = 0.5 * (std::abs(2.0 - 1.0)) + 0.5 * std::abs(0.9875 - 1.0);
  CHECK(dot_reg(q, spec, adj) == doctest::Approx(expected).epsilon(1e-12));

  // TV inner: jump in scaled mu is 1, jump in scaled mus is 0.0125, edge sqrt(2)
  spec.kind = RegKind::Tv;
  const double expected_tv = 0.5 * std::sqrt(2.0) * 1.0 + 0.5 * std::sqrt(2.0) * 0.0125;
  CHECK(dot_reg(q, spec, adj) == doctest::Approx(expected_tv).epsilon(1e-12));
}

TEST_CASE("dot_reg: monotone in the anomaly size for the lp inner") {
  const Mesh m = testutil::two_triangle_square();
  const EdgeAdjacency adj = edge_adjacency(m);
  RegularizerSpec spec;
  spec.kind = RegKind::Lp;
  spec.mu_background = 0.025;
  spec.mus_background = 2.0;
  const double D_bg = 1.0 / (3.0 * 2.025);
  double prev = 0;
  for (double t : {1.0, 1.5, 2.0, 3.0}) {
    ParameterField q;
    q.mesh = &m;
    q.D = Eigen::VectorXd::Constant(2, D_bg);
    q.mu = vec({0.025 * (1 + t), 0.025});
    const double v = dot_reg(q, spec, adj);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("dot_reg: invalid specs and fields are rejected") {
  const Mesh m = testutil::two_triangle_square();
  const EdgeAdjacency adj = edge_adjacency(m);
  RegularizerSpec spec;
  ParameterField q;
  q.mesh = &m;
  q.D = vec({0.16, 0.16});
  q.mu = vec({0.025, 0.025});
  spec.beta1 = 0.6;  // betas no longer sum to 1
  CHECK_THROWS_AS(dot_reg(q, spec, adj), std::runtime_error);
  spec.beta1 = 0.5;
  q.D[0] = 0.0;  // mu_s' undefined
  CHECK_THROWS_AS(dot_reg(q, spec, adj), std::runtime_error);
}

TEST_CASE("graph_laplacian: single free triangle with one pinned neighbor") {
  // inner triangle of the ring mesh has three pinned neighbors; build the
  // expected diagonal from the shared edge lengths
  const Mesh m = testutil::ring_with_inner_triangle();
  ParameterField q;
  q.mesh = &m;
  q.D = Eigen::VectorXd::Constant(m.triangle_count(), 0.16);
  q.mu = Eigen::VectorXd::Constant(m.triangle_count(), 0.025);
  const FreeIndexMap map = free_parameter_index(q);
  REQUIRE(map.count() == 1);
  const EdgeAdjacency adj = edge_adjacency(m);
  double expected = 0;
  for (const auto& e : adj.entries)
    if (e.tri_a == map.tris[0] || e.tri_b == map.tris[0]) expected += e.length;
  const Eigen::MatrixXd L = Eigen::MatrixXd(graph_laplacian(m, adj, map));
  REQUIRE(L.rows() == 2);
  CHECK(L(0, 0) == doctest::Approx(expected));
  CHECK(L(1, 1) == doctest::Approx(expected));
  CHECK(L(0, 1) == 0.0);
}

TEST_CASE("graph_laplacian: two free triangles sharing an edge of length l") {
  // hand-built map over the two-triangle square, ignoring boundary pinning
  const Mesh m = testutil::two_triangle_square();
  const EdgeAdjacency adj = edge_adjacency(m);
  FreeIndexMap map;
  map.tris = {0, 1};
  map.pos_of_tri = {0, 1};
  const Eigen::MatrixXd L = Eigen::MatrixXd(graph_laplacian(m, adj, map));
  const double l = std::sqrt(2.0);
  REQUIRE(L.rows() == 4);
  for (int offset : {0, 2}) {
    CHECK(L(offset, offset) == doctest::Approx(l));
    CHECK(L(offset + 1, offset + 1) == doctest::Approx(l));
    CHECK(L(offset, offset + 1) == doctest::Approx(-l));
  }
  CHECK(L(0, 2) == 0.0);  // no coupling between the D and mu blocks
}

TEST_CASE("graph_laplacian: quadratic form matches the brute-force sum and is PD") {
  const Mesh m = generate_disk_mesh(25, 300, 6);
  ParameterField q;
  q.mesh = &m;
  q.D = Eigen::VectorXd::Constant(m.triangle_count(), 0.16);
  q.mu = Eigen::VectorXd::Constant(m.triangle_count(), 0.025);
  const FreeIndexMap map = free_parameter_index(q);
  const EdgeAdjacency adj = edge_adjacency(m);
  const Eigen::SparseMatrix<double> L = graph_laplacian(m, adj, map);
  const int n = map.count();

  std::mt19937_64 rng(21);
  std::normal_distribution<double> normal(0, 1);
  double min_rayleigh = 1e300;
  for (int rep = 0; rep < 100; ++rep) {
    Eigen::VectorXd v(2 * n);
    for (int i = 0; i < 2 * n; ++i) v[i] = normal(rng);

    // brute-force quadratic form over edges, separately per block
    double expected = 0;
    for (int block = 0; block < 2; ++block) {
      const int off = block * n;
      for (const auto& e : adj.entries) {
        const int pa = map.pos_of_tri[e.tri_a], pb = map.pos_of_tri[e.tri_b];
        if (pa >= 0 && pb >= 0) {
          const double d = v[off + pa] - v[off + pb];
          expected += e.length * d * d;
        } else if (pa >= 0) {
          expected += e.length * v[off + pa] * v[off + pa];
        } else if (pb >= 0) {
          expected += e.length * v[off + pb] * v[off + pb];
        }
      }
    }
    const double got = v.dot(L * v);
    CHECK(got == doctest::Approx(expected).epsilon(1e-10));
    min_rayleigh = std::min(min_rayleigh, got / v.squaredNorm());
  }
  CHECK(min_rayleigh > 0.0);  // strict PD thanks to the boundary anchors
}
