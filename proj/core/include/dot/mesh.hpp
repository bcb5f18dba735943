#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace dot {

struct Vec2 {
  double x{};
  double y{};
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot_product(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross_product(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::sqrt(a.x * a.x + a.y * a.y); }

/// Signed area of the triangle (p0, p1, p2); positive for counter-clockwise order.
inline double signed_area(Vec2 p0, Vec2 p1, Vec2 p2) {
  return 0.5 * cross_product(p1 - p0, p2 - p0);
}

/// Immutable triangulated planar domain.
///
/// Construction goes through make_mesh()/load_mesh()/generate_disk_mesh(),
/// which validate the invariants (positive triangle areas, manifold edges,
/// closed boundary loops, in-range indices) and fill the derived members.
/// Boundary nodes are held in canonical order: loops sorted by their smallest
/// node index, each loop starting at that node and walking in the direction
/// induced by the counter-clockwise triangle orientation.
struct Mesh {
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> triangles;       // CCW node triples
  std::vector<std::array<int, 2>> boundary_edges;  // directed as induced by owning triangle
  std::vector<int> region_labels;                  // optional per-triangle tag (empty or size T)

  // derived
  std::vector<int> boundary_nodes;      // canonical loop order
  std::vector<char> node_on_boundary;   // size node_count()
  std::vector<int> boundary_node_pos;   // node -> index into boundary_nodes, or -1
  std::vector<double> tri_area;
  std::vector<Vec2> tri_centroid;

  int node_count() const { return static_cast<int>(nodes.size()); }
  int triangle_count() const { return static_cast<int>(triangles.size()); }
  int boundary_edge_count() const { return static_cast<int>(boundary_edges.size()); }
  int boundary_node_count() const { return static_cast<int>(boundary_nodes.size()); }
  double total_area() const;
};

/// One record per interior edge: the two triangles sharing it and the edge length.
struct EdgeAdjacency {
  struct Entry {
    int tri_a;
    int tri_b;
    double length;
  };
  std::vector<Entry> entries;
};

/// Validates raw node/triangle data and builds a Mesh. Clockwise triangles are
/// reoriented; degenerate ones are rejected. If `declared_boundary` is given it
/// is cross-checked (as a set of unordered pairs) against the boundary
/// recomputed from connectivity.
Mesh make_mesh(std::vector<Vec2> nodes, std::vector<std::array<int, 3>> triangles,
               const std::vector<std::array<int, 2>>* declared_boundary = nullptr,
               std::vector<int> region_labels = {});

/// Reads the plain-text mesh format:
///   dotmesh 1
///   nodes N       followed by N lines "x y"
///   triangles T   followed by T lines "i j k" (0-based)
///   boundary B    (optional) followed by B lines "i j"
/// Lines starting with '#' are comments.
Mesh load_mesh(const std::string& path);

void save_mesh(const Mesh& mesh, const std::string& path);

/// Structured disk triangulation: concentric rings with seed-jittered interior
/// nodes. Deterministic for a given seed; boundary nodes lie exactly on the
/// nominal radius. The triangle count lands within +-20% of the target.
Mesh generate_disk_mesh(double radius, int target_triangle_count, std::uint64_t seed);

/// Midpoint refinement (each triangle into four). New nodes created on
/// boundary edges are passed through `boundary_snap` when provided, e.g. to
/// project them back onto a curved domain boundary.
Mesh refine_uniform(const Mesh& mesh,
                    const std::function<Vec2(const Vec2&)>& boundary_snap = nullptr);

EdgeAdjacency edge_adjacency(const Mesh& mesh);

/// Index of the triangle containing p, or -1 when p is outside the mesh.
int locate_triangle(const Mesh& mesh, Vec2 p);

/// Index of the triangle closest to p (by point-to-triangle distance).
int nearest_triangle(const Mesh& mesh, Vec2 p);

/// Piecewise-constant inter-mesh transfer: every destination triangle receives
/// the value of the source triangle containing its centroid; centroids outside
/// the source mesh fall back to the nearest source triangle.
Eigen::VectorXd transfer_field(const Mesh& src, const Eigen::VectorXd& field, const Mesh& dst);

}  // namespace dot
