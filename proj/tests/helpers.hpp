#pragma once

// Shared mesh builders and independent oracles for the test suites. Oracles
// here must stay independent of the library code paths they check.

#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "dot/mesh.hpp"
#include "dot/phantom.hpp"

namespace testutil {

inline dot::Mesh single_triangle_mesh() {
  return dot::make_mesh({{0, 0}, {1, 0}, {0, 1}}, {{{0, 1, 2}}});
}

// two triangles sharing the diagonal (0,0)-(1,1) of the unit square
inline dot::Mesh two_triangle_square() {
  return dot::make_mesh({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{{0, 1, 2}}, {{0, 2, 3}}});
}

// seven triangles: a triangular ring around one interior triangle whose nodes
// all lie strictly inside the domain
inline dot::Mesh ring_with_inner_triangle() {
  auto pt = [](double r, double deg) {
    return dot::Vec2{r * std::cos(deg * M_PI / 180.0), r * std::sin(deg * M_PI / 180.0)};
  };
  std::vector<dot::Vec2> nodes{pt(4, 90),   pt(4, 210),  pt(4, 330),
                               pt(1.2, 90), pt(1.2, 210), pt(1.2, 330)};
  std::vector<std::array<int, 3>> tris{{{0, 1, 4}}, {{0, 4, 3}}, {{1, 2, 5}}, {{1, 5, 4}},
                                       {{2, 0, 3}}, {{2, 3, 5}}, {{3, 4, 5}}};
  return dot::make_mesh(nodes, tris);
}

// brute-force interior edge count (oracle for edge_adjacency)
inline int brute_force_interior_edges(const dot::Mesh& mesh) {
  std::set<std::pair<int, int>> seen, interior;
  for (const auto& tri : mesh.triangles)
    for (int e = 0; e < 3; ++e) {
      const int i = std::min(tri[e], tri[(e + 1) % 3]);
      const int j = std::max(tri[e], tri[(e + 1) % 3]);
      if (!seen.insert({i, j}).second) interior.insert({i, j});
    }
  return static_cast<int>(interior.size());
}

// modified-Bessel separation-of-variables solution of the homogeneous disk
// Neumann problem with flux cos(n theta) (or sin): u = A I_n(kappa r) trig(n theta),
// A = 1 / (D kappa I_n'(kappa R)); evaluated through std::cyl_bessel_i only.
struct BesselDiskOracle {
  double D, mu, R;
  int n;
  bool use_cos = true;

  double kappa() const { return std::sqrt(mu / D); }
  double deriv_In(double x) const {
    if (n == 0) return std::cyl_bessel_i(1.0, x);
    return 0.5 * (std::cyl_bessel_i(n - 1.0, x) + std::cyl_bessel_i(n + 1.0, x));
  }
  double amplitude() const { return 1.0 / (D * kappa() * deriv_In(kappa() * R)); }
  double eval(double r, double theta) const {
    const double radial = std::cyl_bessel_i(static_cast<double>(n), kappa() * r);
    const double angular = use_cos ? std::cos(n * theta) : std::sin(n * theta);
    return amplitude() * radial * angular;
  }
};

// composite-Simpson quadrature of f over [a, b]
template <typename F>
double simpson(F f, double a, double b, int intervals) {
  if (intervals % 2) ++intervals;
  const double h = (b - a) / intervals;
  double s = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// mean of a standard normal truncated to (0, inf), by quadrature
inline double truncated_normal_mean_oracle() {
  auto phi = [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2 * M_PI); };
  const double z = simpson([&](double x) { return phi(x); }, 0.0, 12.0, 4000);
  const double m1 = simpson([&](double x) { return x * phi(x); }, 0.0, 12.0, 4000);
  return m1 / z;
}

}  // namespace testutil
