#include "dot/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

namespace dot {

namespace {

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, args...);
  return std::string(buf);
}

// Undirected edge key with deterministic ordering.
std::pair<int, int> edge_key(int i, int j) { return {std::min(i, j), std::max(i, j)}; }

struct EdgeUse {
  int tri[2] = {-1, -1};
  // directed orientation (i -> j) as the edge appears in the first owning triangle
  int dir_from = -1, dir_to = -1;
  int count = 0;
};

std::map<std::pair<int, int>, EdgeUse> build_edge_map(const Mesh& m) {
  std::map<std::pair<int, int>, EdgeUse> edges;
  for (int t = 0; t < m.triangle_count(); ++t) {
    const auto& tri = m.triangles[t];
    for (int e = 0; e < 3; ++e) {
      int i = tri[e], j = tri[(e + 1) % 3];
      EdgeUse& u = edges[edge_key(i, j)];
      if (u.count < 2) u.tri[u.count] = t;
      if (u.count == 0) {
        u.dir_from = i;
        u.dir_to = j;
      }
      ++u.count;
    }
  }
  return edges;
}

}  // namespace

double Mesh::total_area() const {
  double a = 0;
  for (double t : tri_area) a += t;
  return a;
}

Mesh make_mesh(std::vector<Vec2> nodes, std::vector<std::array<int, 3>> triangles,
               const std::vector<std::array<int, 2>>* declared_boundary,
               std::vector<int> region_labels) {
  Mesh m;
  m.nodes = std::move(nodes);
  m.triangles = std::move(triangles);
  m.region_labels = std::move(region_labels);

  const int nn = m.node_count();
  const int nt = m.triangle_count();
  if (nt == 0) throw std::runtime_error("mesh: no triangles");
  if (!m.region_labels.empty() && static_cast<int>(m.region_labels.size()) != nt)
    throw std::runtime_error("mesh: region_labels size mismatch");

  // index range and degeneracy checks; reorient clockwise triangles
  double bbox_lo_x = 1e300, bbox_lo_y = 1e300, bbox_hi_x = -1e300, bbox_hi_y = -1e300;
  for (const Vec2& p : m.nodes) {
    bbox_lo_x = std::min(bbox_lo_x, p.x);
    bbox_lo_y = std::min(bbox_lo_y, p.y);
    bbox_hi_x = std::max(bbox_hi_x, p.x);
    bbox_hi_y = std::max(bbox_hi_y, p.y);
  }
  const double diag2 = (bbox_hi_x - bbox_lo_x) * (bbox_hi_x - bbox_lo_x) +
                       (bbox_hi_y - bbox_lo_y) * (bbox_hi_y - bbox_lo_y);
  const double area_tol = 1e-14 * std::max(diag2, 1e-300);

  m.tri_area.resize(nt);
  m.tri_centroid.resize(nt);
  for (int t = 0; t < nt; ++t) {
    auto& tri = m.triangles[t];
    for (int v : tri)
      if (v < 0 || v >= nn)
        throw std::runtime_error(fmt("mesh: triangle %d references node %d out of range", t, v));
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
      throw std::runtime_error(fmt("mesh: triangle %d has a repeated node", t));
    double a = signed_area(m.nodes[tri[0]], m.nodes[tri[1]], m.nodes[tri[2]]);
    if (a < 0) {
      std::swap(tri[1], tri[2]);
      a = -a;
    }
    if (a <= area_tol) throw std::runtime_error(fmt("mesh: triangle %d is degenerate", t));
    m.tri_area[t] = a;
    m.tri_centroid[t] = (1.0 / 3.0) * (m.nodes[tri[0]] + m.nodes[tri[1]] + m.nodes[tri[2]]);
  }

  // manifold edges; recompute boundary from connectivity
  auto edges = build_edge_map(m);
  m.boundary_edges.clear();
  for (const auto& [key, use] : edges) {
    if (use.count > 2)
      throw std::runtime_error(
          fmt("mesh: edge (%d,%d) shared by %d triangles", key.first, key.second, use.count));
    if (use.count == 1) m.boundary_edges.push_back({use.dir_from, use.dir_to});
  }

  if (declared_boundary) {
    auto canon = [](const std::array<int, 2>& e) { return edge_key(e[0], e[1]); };
    std::vector<std::pair<int, int>> a, b;
    for (const auto& e : m.boundary_edges) a.push_back(canon(e));
    for (const auto& e : *declared_boundary) b.push_back(canon(e));
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b)
      throw std::runtime_error("mesh: declared boundary does not match connectivity-derived boundary");
  }

  // boundary loops; each boundary node needs exactly one outgoing directed edge
  std::map<int, int> next_on_boundary;
  for (const auto& e : m.boundary_edges) {
    if (!next_on_boundary.emplace(e[0], e[1]).second)
      throw std::runtime_error(fmt("mesh: boundary is not a set of simple loops at node %d", e[0]));
  }
  m.node_on_boundary.assign(nn, 0);
  for (const auto& e : m.boundary_edges) m.node_on_boundary[e[0]] = m.node_on_boundary[e[1]] = 1;

  m.boundary_nodes.clear();
  std::vector<char> visited(nn, 0);
  // loops in increasing order of their smallest node index
  std::vector<int> starts;
  for (const auto& [from, to] : next_on_boundary) starts.push_back(from);
  std::sort(starts.begin(), starts.end());
  for (int s : starts) {
    if (visited[s]) continue;
    int cur = s;
    size_t guard = 0;
    do {
      if (visited[cur]) throw std::runtime_error(fmt("mesh: boundary loop re-enters node %d", cur));
      visited[cur] = 1;
      m.boundary_nodes.push_back(cur);
      auto it = next_on_boundary.find(cur);
      if (it == next_on_boundary.end())
        throw std::runtime_error(fmt("mesh: boundary loop breaks at node %d", cur));
      cur = it->second;
    } while (cur != s && ++guard <= next_on_boundary.size());
    if (cur != s) throw std::runtime_error("mesh: boundary loop failed to close");
  }

  m.boundary_node_pos.assign(nn, -1);
  for (int i = 0; i < m.boundary_node_count(); ++i) m.boundary_node_pos[m.boundary_nodes[i]] = i;
  return m;
}

Mesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("mesh: cannot open " + path);

  // tokenize, dropping '#' comments
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) tokens.push_back(tok);
  }
  size_t pos = 0;
  auto need = [&](const char* what) -> const std::string& {
    if (pos >= tokens.size())
      throw std::runtime_error(std::string("mesh: unexpected end of file, expected ") + what);
    return tokens[pos++];
  };
  auto need_int = [&](const char* what) {
    const std::string& t = need(what);
    size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(t, &used);
    } catch (...) {
      throw std::runtime_error(fmt("mesh: bad integer '%s' for %s", t.c_str(), what));
    }
    if (used != t.size()) throw std::runtime_error(fmt("mesh: bad integer '%s' for %s", t.c_str(), what));
    return v;
  };
  auto need_double = [&](const char* what) {
    const std::string& t = need(what);
    size_t used = 0;
    double v = 0;
    try {
      v = std::stod(t, &used);
    } catch (...) {
      throw std::runtime_error(fmt("mesh: bad number '%s' for %s", t.c_str(), what));
    }
    if (used != t.size()) throw std::runtime_error(fmt("mesh: bad number '%s' for %s", t.c_str(), what));
    return v;
  };

  if (need("header") != "dotmesh") throw std::runtime_error("mesh: missing 'dotmesh' header");
  if (need_int("format version") != 1) throw std::runtime_error("mesh: unsupported format version");

  if (need("'nodes'") != "nodes") throw std::runtime_error("mesh: expected 'nodes' section");
  int nn = need_int("node count");
  if (nn <= 0) throw std::runtime_error("mesh: node count must be positive");
  std::vector<Vec2> nodes(nn);
  for (int i = 0; i < nn; ++i) {
    nodes[i].x = need_double("node x");
    nodes[i].y = need_double("node y");
  }

  if (need("'triangles'") != "triangles") throw std::runtime_error("mesh: expected 'triangles' section");
  int nt = need_int("triangle count");
  if (nt <= 0) throw std::runtime_error("mesh: triangle count must be positive");
  std::vector<std::array<int, 3>> tris(nt);
  for (int t = 0; t < nt; ++t)
    for (int v = 0; v < 3; ++v) tris[t][v] = need_int("triangle node index");

  std::vector<std::array<int, 2>> declared;
  bool have_declared = false;
  if (pos < tokens.size()) {
    if (need("'boundary'") != "boundary") throw std::runtime_error("mesh: expected 'boundary' section");
    int nb = need_int("boundary edge count");
    declared.resize(nb);
    for (int b = 0; b < nb; ++b) {
      declared[b][0] = need_int("boundary node index");
      declared[b][1] = need_int("boundary node index");
    }
    have_declared = true;
  }
  if (pos != tokens.size()) throw std::runtime_error("mesh: trailing tokens after boundary section");

  return make_mesh(std::move(nodes), std::move(tris), have_declared ? &declared : nullptr);
}

void save_mesh(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("mesh: cannot write " + path);
  out << "dotmesh 1\n";
  out << "nodes " << mesh.node_count() << "\n";
  char buf[96];
  for (const Vec2& p : mesh.nodes) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g\n", p.x, p.y);
    out << buf;
  }
  out << "triangles " << mesh.triangle_count() << "\n";
  for (const auto& t : mesh.triangles) out << t[0] << " " << t[1] << " " << t[2] << "\n";
  out << "boundary " << mesh.boundary_edge_count() << "\n";
  for (const auto& e : mesh.boundary_edges) out << e[0] << " " << e[1] << "\n";
  if (!out) throw std::runtime_error("mesh: write failed for " + path);
}

namespace {

// Triangulate the annulus between two concentric rings of node indices, both
// ordered by increasing angle. Walks the two rings in lockstep, always
// advancing the ring whose next node comes first in angle fraction.
void triangulate_annulus(const std::vector<int>& inner, const std::vector<int>& outer,
                         std::vector<std::array<int, 3>>& tris) {
  const int ni = static_cast<int>(inner.size());
  const int no = static_cast<int>(outer.size());
  if (ni == 1) {  // innermost disk: plain fan around the center node
    for (int j = 0; j < no; ++j) tris.push_back({inner[0], outer[j], outer[(j + 1) % no]});
    return;
  }
  int i = 0, j = 0;
  while (i < ni || j < no) {
    bool advance_outer;
    if (i == ni)
      advance_outer = true;
    else if (j == no)
      advance_outer = false;
    else
      advance_outer = static_cast<long long>(j + 1) * ni <= static_cast<long long>(i + 1) * no;
    if (advance_outer) {
      tris.push_back({outer[j % no], outer[(j + 1) % no], inner[i % ni]});
      ++j;
    } else {
      tris.push_back({inner[i % ni], outer[j % no], inner[(i + 1) % ni]});
      ++i;
    }
  }
}

Mesh build_disk(double radius, int rings, double jitter_frac, std::uint64_t seed) {
  // ring radii graded toward the boundary (sinh profile): the photon-density
  // boundary layer is the hard part of the forward problem, so that is where
  // the radial resolution goes
  constexpr double kGrade = 2.0;
  std::vector<double> ring_radius(rings + 1);
  for (int j = 0; j <= rings; ++j) {
    const double t = static_cast<double>(j) / rings;
    ring_radius[j] = radius * (1.0 - std::sinh(kGrade * (1.0 - t)) / std::sinh(kGrade));
  }

  std::vector<Vec2> nodes;
  std::vector<std::vector<int>> ring_nodes(rings + 1);
  nodes.push_back({0.0, 0.0});
  ring_nodes[0] = {0};
  for (int j = 1; j <= rings; ++j) {
    const int count = 6 * j;
    for (int i = 0; i < count; ++i) {
      const double th = 2.0 * M_PI * i / count;
      ring_nodes[j].push_back(static_cast<int>(nodes.size()));
      nodes.push_back({ring_radius[j] * std::cos(th), ring_radius[j] * std::sin(th)});
    }
  }
  // jitter interior rings only, limited by the local ring gap; the boundary
  // ring stays exactly on the circle
  if (jitter_frac > 0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int j = 1; j < rings; ++j) {
      const double gap = std::min(ring_radius[j] - ring_radius[j - 1],
                                  ring_radius[j + 1] - ring_radius[j]);
      for (int idx : ring_nodes[j]) {
        const double rr = jitter_frac * gap * std::sqrt(uni(rng));
        const double th = 2.0 * M_PI * uni(rng);
        nodes[idx].x += rr * std::cos(th);
        nodes[idx].y += rr * std::sin(th);
      }
    }
  }
  std::vector<std::array<int, 3>> tris;
  for (int j = 1; j <= rings; ++j) triangulate_annulus(ring_nodes[j - 1], ring_nodes[j], tris);
  return make_mesh(std::move(nodes), std::move(tris));
}

}  // namespace

Mesh generate_disk_mesh(double radius, int target_triangle_count, std::uint64_t seed) {
  if (radius <= 0) throw std::runtime_error("generate_disk_mesh: radius must be positive");
  if (target_triangle_count < 4)
    throw std::runtime_error("generate_disk_mesh: target triangle count too small");

  // small targets: a plain fan hits the count exactly
  if (target_triangle_count < 24) {
    const int n = target_triangle_count;
    std::vector<Vec2> nodes{{0.0, 0.0}};
    std::vector<int> rim;
    for (int i = 0; i < n; ++i) {
      const double th = 2.0 * M_PI * i / n;
      rim.push_back(static_cast<int>(nodes.size()));
      nodes.push_back({radius * std::cos(th), radius * std::sin(th)});
    }
    std::vector<std::array<int, 3>> tris;
    for (int i = 0; i < n; ++i) tris.push_back({0, rim[i], rim[(i + 1) % n]});
    return make_mesh(std::move(nodes), std::move(tris));
  }

  const int rings = std::max(2, static_cast<int>(std::llround(std::sqrt(target_triangle_count / 6.0))));
  double jitter = 0.18;
  for (int attempt = 0; attempt < 4; ++attempt) {
    try {
      return build_disk(radius, rings, jitter, seed);
    } catch (const std::runtime_error&) {
      jitter *= 0.5;  // a jittered node inverted a triangle; retry tamer
    }
  }
  return build_disk(radius, rings, 0.0, seed);
}

Mesh refine_uniform(const Mesh& mesh, const std::function<Vec2(const Vec2&)>& boundary_snap) {
  std::vector<Vec2> nodes = mesh.nodes;
  std::map<std::pair<int, int>, int> midpoint;
  auto edges = build_edge_map(mesh);
  for (const auto& [key, use] : edges) {
    Vec2 mid = 0.5 * (mesh.nodes[key.first] + mesh.nodes[key.second]);
    if (use.count == 1 && boundary_snap) mid = boundary_snap(mid);
    midpoint[key] = static_cast<int>(nodes.size());
    nodes.push_back(mid);
  }
  std::vector<std::array<int, 3>> tris;
  std::vector<int> labels;
  const bool has_labels = !mesh.region_labels.empty();
  tris.reserve(4 * mesh.triangle_count());
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    const int a = tri[0], b = tri[1], c = tri[2];
    const int ab = midpoint[edge_key(a, b)];
    const int bc = midpoint[edge_key(b, c)];
    const int ca = midpoint[edge_key(c, a)];
    tris.push_back({a, ab, ca});
    tris.push_back({ab, b, bc});
    tris.push_back({ca, bc, c});
    tris.push_back({ab, bc, ca});
    if (has_labels) labels.insert(labels.end(), 4, mesh.region_labels[t]);
  }
  return make_mesh(std::move(nodes), std::move(tris), nullptr, std::move(labels));
}

EdgeAdjacency edge_adjacency(const Mesh& mesh) {
  EdgeAdjacency adj;
  auto edges = build_edge_map(mesh);
  for (const auto& [key, use] : edges) {
    if (use.count != 2) continue;
    const double len = norm(mesh.nodes[key.second] - mesh.nodes[key.first]);
    adj.entries.push_back({std::min(use.tri[0], use.tri[1]), std::max(use.tri[0], use.tri[1]), len});
  }
  return adj;
}

namespace {

bool point_in_tri(const Mesh& m, int t, Vec2 p) {
  const auto& tri = m.triangles[t];
  const Vec2 a = m.nodes[tri[0]], b = m.nodes[tri[1]], c = m.nodes[tri[2]];
  const double tol = -1e-12 * m.tri_area[t];
  return signed_area(a, b, p) >= tol && signed_area(b, c, p) >= tol && signed_area(c, a, p) >= tol;
}

double point_segment_dist2(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot_product(ab, ab);
  double t = len2 > 0 ? dot_product(p - a, ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const Vec2 proj = a + t * ab;
  return dot_product(p - proj, p - proj);
}

double point_tri_dist2(const Mesh& m, int t, Vec2 p) {
  if (point_in_tri(m, t, p)) return 0.0;
  const auto& tri = m.triangles[t];
  double d = point_segment_dist2(p, m.nodes[tri[0]], m.nodes[tri[1]]);
  d = std::min(d, point_segment_dist2(p, m.nodes[tri[1]], m.nodes[tri[2]]));
  d = std::min(d, point_segment_dist2(p, m.nodes[tri[2]], m.nodes[tri[0]]));
  return d;
}

}  // namespace

int locate_triangle(const Mesh& mesh, Vec2 p) {
  for (int t = 0; t < mesh.triangle_count(); ++t)
    if (point_in_tri(mesh, t, p)) return t;
  return -1;
}

int nearest_triangle(const Mesh& mesh, Vec2 p) {
  int best = -1;
  double best_d = 1e300;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const double d = point_tri_dist2(mesh, t, p);
    if (d < best_d) {
      best_d = d;
      best = t;
    }
  }
  return best;
}

Eigen::VectorXd transfer_field(const Mesh& src, const Eigen::VectorXd& field, const Mesh& dst) {
  if (src.triangle_count() == 0) throw std::runtime_error("transfer_field: empty source mesh");
  if (field.size() != src.triangle_count())
    throw std::runtime_error("transfer_field: field length does not match source mesh");
  Eigen::VectorXd out(dst.triangle_count());
  for (int t = 0; t < dst.triangle_count(); ++t) {
    const Vec2 c = dst.tri_centroid[t];
    int s = locate_triangle(src, c);
    if (s < 0) s = nearest_triangle(src, c);
    out[t] = field[s];
  }
  return out;
}

}  // namespace dot
