#pragma once

#include <Eigen/Core>

#include <vector>

#include "dot/mesh.hpp"

namespace dot {

/// One (diffusion, absorption) pair. D in mm, mu in 1/mm.
struct OpticalValues {
  double D{};
  double mu{};
};

/// Box constraints for the optical parameters: D in [D_min, D_max], mu in (0, mu_max].
struct ParameterBounds {
  double D_min = 0.02;
  double D_max = 1.0;
  double mu_max = 0.5;
};

struct Inclusion {
  enum class Shape { Circle, HalfAnnulus, Polygon };
  Shape shape = Shape::Circle;
  Vec2 center{};
  double radius = 0;                  // circle
  double r_in = 0, r_out = 0;         // half-annulus radii
  double angle0 = 0, angle1 = 0;      // half-annulus angular range, radians CCW from angle0
  std::vector<Vec2> vertices;         // polygon
  OpticalValues values{};

  bool contains(Vec2 p) const;
};

/// Ground-truth scene: background values plus a list of inclusions. Later
/// inclusions overwrite earlier ones where they overlap.
struct Phantom {
  OpticalValues background{1.0 / (3.0 * (0.025 + 2.0)), 0.025};
  std::vector<Inclusion> inclusions;
};

/// Per-triangle optical parameters on a mesh.
struct ParameterField {
  const Mesh* mesh = nullptr;  // non-owning; meshes are immutable
  Eigen::VectorXd D;
  Eigen::VectorXd mu;
  OpticalValues boundary_background{};
};

/// Samples the phantom at triangle centroids. Throws when any phantom value
/// violates the bounds.
ParameterField rasterize(const Phantom& phantom, const Mesh& mesh, const ParameterBounds& bounds);

/// Ordered list of interior triangles: those owning no boundary node. These
/// are the unknowns of the inverse problem; boundary-adjacent triangles stay
/// pinned to the background.
struct FreeIndexMap {
  std::vector<int> tris;       // interior triangle indices, increasing
  std::vector<int> pos_of_tri; // triangle -> position in tris, or -1

  int count() const { return static_cast<int>(tris.size()); }
};

FreeIndexMap free_parameter_index(const ParameterField& field);

/// Packs the free unknowns as [D over free triangles, mu over free triangles].
Eigen::VectorXd pack_free(const ParameterField& field, const FreeIndexMap& map);

/// Rebuilds a full field from a free vector; pinned triangles take the base
/// field's boundary background.
ParameterField embed_free(const Eigen::VectorXd& x, const ParameterField& base,
                          const FreeIndexMap& map);

}  // namespace dot
