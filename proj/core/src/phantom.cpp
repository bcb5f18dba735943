#include "dot/phantom.hpp"

#include <cmath>
#include <stdexcept>

namespace dot {

namespace {

bool point_in_polygon(const std::vector<Vec2>& poly, Vec2 p) {
  // even-odd crossing rule
  bool inside = false;
  const size_t n = poly.size();
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = poly[i], b = poly[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

void check_values(const OpticalValues& v, const ParameterBounds& b, const char* what) {
  if (!(v.D >= b.D_min && v.D <= b.D_max))
    throw std::runtime_error(std::string(what) + ": D outside configured bounds");
  if (!(v.mu > 0 && v.mu <= b.mu_max))
    throw std::runtime_error(std::string(what) + ": mu outside configured bounds");
}

}  // namespace

bool Inclusion::contains(Vec2 p) const {
  switch (shape) {
    case Shape::Circle:
      return norm(p - center) <= radius;
    case Shape::HalfAnnulus: {
      const double r = norm(p - center);
      if (r < r_in || r > r_out) return false;
      const double span = std::fmod(std::fmod(angle1 - angle0, 2 * M_PI) + 2 * M_PI, 2 * M_PI);
      double rel = std::atan2(p.y - center.y, p.x - center.x) - angle0;
      rel = std::fmod(std::fmod(rel, 2 * M_PI) + 2 * M_PI, 2 * M_PI);
      return rel <= (span == 0 ? 2 * M_PI : span);
    }
    case Shape::Polygon:
      return point_in_polygon(vertices, p);
  }
  return false;
}

ParameterField rasterize(const Phantom& phantom, const Mesh& mesh, const ParameterBounds& bounds) {
  check_values(phantom.background, bounds, "phantom background");
  for (const Inclusion& inc : phantom.inclusions) check_values(inc.values, bounds, "phantom inclusion");

  ParameterField f;
  f.mesh = &mesh;
  f.boundary_background = phantom.background;
  const int nt = mesh.triangle_count();
  f.D.resize(nt);
  f.mu.resize(nt);
  for (int t = 0; t < nt; ++t) {
    OpticalValues v = phantom.background;
    const Vec2 c = mesh.tri_centroid[t];
    for (const Inclusion& inc : phantom.inclusions)
      if (inc.contains(c)) v = inc.values;  // last inclusion wins
    f.D[t] = v.D;
    f.mu[t] = v.mu;
  }
  return f;
}

FreeIndexMap free_parameter_index(const ParameterField& field) {
  if (!field.mesh) throw std::runtime_error("free_parameter_index: field has no mesh");
  const Mesh& m = *field.mesh;
  FreeIndexMap map;
  map.pos_of_tri.assign(m.triangle_count(), -1);
  for (int t = 0; t < m.triangle_count(); ++t) {
    const auto& tri = m.triangles[t];
    const bool touches_boundary =
        m.node_on_boundary[tri[0]] || m.node_on_boundary[tri[1]] || m.node_on_boundary[tri[2]];
    if (!touches_boundary) {
      map.pos_of_tri[t] = static_cast<int>(map.tris.size());
      map.tris.push_back(t);
    }
  }
  return map;
}

Eigen::VectorXd pack_free(const ParameterField& field, const FreeIndexMap& map) {
  const int n = map.count();
  Eigen::VectorXd x(2 * n);
  for (int i = 0; i < n; ++i) {
    x[i] = field.D[map.tris[i]];
    x[n + i] = field.mu[map.tris[i]];
  }
  return x;
}

ParameterField embed_free(const Eigen::VectorXd& x, const ParameterField& base,
                          const FreeIndexMap& map) {
  const int n = map.count();
  if (x.size() != 2 * n) throw std::runtime_error("embed_free: vector length mismatch");
  ParameterField f;
  f.mesh = base.mesh;
  f.boundary_background = base.boundary_background;
  const int nt = base.mesh->triangle_count();
  f.D = Eigen::VectorXd::Constant(nt, base.boundary_background.D);
  f.mu = Eigen::VectorXd::Constant(nt, base.boundary_background.mu);
  for (int i = 0; i < n; ++i) {
    f.D[map.tris[i]] = x[i];
    f.mu[map.tris[i]] = x[n + i];
  }
  return f;
}

}  // namespace dot
