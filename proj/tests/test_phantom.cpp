#include <doctest.h>

#include <cmath>

#include "dot/mesh.hpp"
#include "dot/phantom.hpp"
#include "helpers.hpp"

using namespace dot;

namespace {

Phantom background_only() {
  Phantom p;
  p.background = {0.1646, 0.025};
  return p;
}

}  // namespace

TEST_CASE("rasterize: no inclusions gives the constant background") {
  const Mesh m = generate_disk_mesh(25, 100, 1);
  const ParameterField f = rasterize(background_only(), m, ParameterBounds{});
  CHECK((f.D.array() == 0.1646).all());
  CHECK((f.mu.array() == 0.025).all());
}

TEST_CASE("rasterize: inclusion covering the whole domain wins everywhere") {
  const Mesh m = generate_disk_mesh(25, 100, 1);
  Phantom p = background_only();
  Inclusion inc;
  inc.shape = Inclusion::Shape::Circle;
  inc.center = {0, 0};
  inc.radius = 100;
  inc.values = {0.08, 0.05};
  p.inclusions.push_back(inc);
  const ParameterField f = rasterize(p, m, ParameterBounds{});
  CHECK((f.D.array() == 0.08).all());
  CHECK((f.mu.array() == 0.05).all());
}

TEST_CASE("rasterize: later inclusions overwrite earlier ones") {
  const Mesh m = generate_disk_mesh(25, 300, 1);
  Phantom p = background_only();
  Inclusion big;
  big.center = {0, 0};
  big.radius = 12;
  big.values = {0.08, 0.05};
  Inclusion small;
  small.center = {0, 0};
  small.radius = 5;
  small.values = {0.3, 0.1};
  p.inclusions = {big, small};
  const ParameterField f = rasterize(p, m, ParameterBounds{});
  for (int t = 0; t < m.triangle_count(); ++t) {
    const double r = norm(m.tri_centroid[t]);
    if (r <= 5) CHECK(f.mu[t] == 0.1);
    else if (r <= 12) CHECK(f.mu[t] == 0.05);
    else CHECK(f.mu[t] == 0.025);
  }
}

TEST_CASE("rasterize: circle area within 5% of pi r^2 on the fine mesh") {
  const Mesh m = generate_disk_mesh(25, 2097, 11);
  Phantom p = background_only();
  Inclusion inc;
  inc.center = {5, -3};
  inc.radius = 8;
  inc.values = {0.08, 0.05};
  p.inclusions.push_back(inc);
  const ParameterField f = rasterize(p, m, ParameterBounds{});
  double area = 0;
  for (int t = 0; t < m.triangle_count(); ++t)
    if (f.mu[t] == 0.05) area += m.tri_area[t];
  CHECK(area == doctest::Approx(M_PI * 64).epsilon(0.05));
}

TEST_CASE("rasterize: refining the mesh shrinks the inclusion-area error") {
  Phantom p = background_only();
  Inclusion inc;
  inc.center = {5, -3};
  inc.radius = 8;
  inc.values = {0.08, 0.05};
  p.inclusions.push_back(inc);
  // centroid misclassification is confined to a band of one triangle diameter
  // around the inclusion boundary, so the area error is bounded by
  // perimeter * h and halves with uniform refinement
  const double exact = M_PI * 64;
  const double perimeter = 2 * M_PI * 8;
  const auto snap = [](const Vec2& v) {
    const double s = 25.0 / norm(v);
    return Vec2{v.x * s, v.y * s};
  };
  Mesh m = generate_disk_mesh(25, 150, 3);
  for (int level = 0; level < 3; ++level) {
    const ParameterField f = rasterize(p, m, ParameterBounds{});
    double area = 0, h_max = 0;
    for (int t = 0; t < m.triangle_count(); ++t) {
      if (f.mu[t] == 0.05) area += m.tri_area[t];
      const auto& tri = m.triangles[t];
      for (int e = 0; e < 3; ++e)
        h_max = std::max(h_max, norm(m.nodes[tri[e]] - m.nodes[tri[(e + 1) % 3]]));
    }
    CHECK(std::abs(area - exact) <= 1.5 * perimeter * h_max);
    if (level < 2) m = refine_uniform(m, snap);
  }
}

TEST_CASE("rasterize: bound violations are rejected") {
  const Mesh m = generate_disk_mesh(25, 100, 1);
  Phantom p = background_only();
  Inclusion inc;
  inc.center = {0, 0};
  inc.radius = 5;
  inc.values = {0.08, 2.0};  // mu above mu_max
  p.inclusions.push_back(inc);
  CHECK_THROWS_AS(rasterize(p, m, ParameterBounds{}), std::runtime_error);
  p.inclusions[0].values = {5.0, 0.05};  // D above D_max
  CHECK_THROWS_AS(rasterize(p, m, ParameterBounds{}), std::runtime_error);
}

TEST_CASE("half-annulus and polygon membership") {
  Inclusion half;
  half.shape = Inclusion::Shape::HalfAnnulus;
  half.center = {0, 0};
  half.r_in = 1;
  half.r_out = 2;
  half.angle0 = 0;
  half.angle1 = M_PI;
  CHECK(half.contains({0, 1.5}));        // angle pi/2, radius 1.5
  CHECK_FALSE(half.contains({0, -1.5})); // lower half excluded
  CHECK_FALSE(half.contains({0, 0.5}));  // inside the hole
  CHECK_FALSE(half.contains({0, 2.5}));  // outside r_out

  Inclusion poly;
  poly.shape = Inclusion::Shape::Polygon;
  poly.vertices = {{0, 0}, {2, 0}, {2, 2}, {0, 2}};
  CHECK(poly.contains({1, 1}));
  CHECK_FALSE(poly.contains({3, 1}));
}

TEST_CASE("free_parameter_index: meshes where every triangle touches the boundary") {
  const ParameterBounds bounds;
  for (const Mesh& m : {testutil::single_triangle_mesh(), testutil::two_triangle_square()}) {
    const ParameterField f = rasterize(background_only(), m, bounds);
    CHECK(free_parameter_index(f).count() == 0);
  }
}

TEST_CASE("free_parameter_index: exactly one interior triangle") {
  const Mesh m = testutil::ring_with_inner_triangle();
  const ParameterField f = rasterize(background_only(), m, ParameterBounds{});
  const FreeIndexMap map = free_parameter_index(f);
  REQUIRE(map.count() == 1);
  const auto& tri = m.triangles[map.tris[0]];
  CHECK_FALSE(m.node_on_boundary[tri[0]]);
  CHECK_FALSE(m.node_on_boundary[tri[1]]);
  CHECK_FALSE(m.node_on_boundary[tri[2]]);
}

TEST_CASE("free_parameter_index: paper-scale interior fraction") {
  // the paper's unstructured 541-triangle mesh kept 477 unknowns per field;
  // the structured ring generator pins a somewhat larger boundary band, so
  // the count is checked as a band rather than a point value
  const Mesh m = generate_disk_mesh(25, 541, 7);
  const ParameterField f = rasterize(background_only(), m, ParameterBounds{});
  const FreeIndexMap map = free_parameter_index(f);
  CHECK(map.count() > 0.6 * m.triangle_count());
  CHECK(map.count() < m.triangle_count());
}

TEST_CASE("pack/embed round trip is the identity on interior triangles") {
  const Mesh m = generate_disk_mesh(25, 150, 2);
  const ParameterField base = rasterize(background_only(), m, ParameterBounds{});
  const FreeIndexMap map = free_parameter_index(base);
  REQUIRE(map.count() > 0);

  Eigen::VectorXd x(2 * map.count());
  for (int i = 0; i < map.count(); ++i) {
    x[i] = 0.1 + 0.001 * i;
    x[map.count() + i] = 0.02 + 0.0001 * i;
  }
  const ParameterField f = embed_free(x, base, map);
  const Eigen::VectorXd back = pack_free(f, map);
  CHECK((back - x).cwiseAbs().maxCoeff() == 0.0);

  // bijection: positions and triangle indices are mutually inverse
  for (int i = 0; i < map.count(); ++i) CHECK(map.pos_of_tri[map.tris[i]] == i);
  // pinned triangles keep the background
  for (int t = 0; t < m.triangle_count(); ++t)
    if (map.pos_of_tri[t] < 0) {
      CHECK(f.D[t] == base.boundary_background.D);
      CHECK(f.mu[t] == base.boundary_background.mu);
    }
}
