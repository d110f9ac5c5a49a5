#include "homog/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace homog {

namespace {

constexpr double kSnapFraction = 0.25;   // of grid spacing
constexpr double kOnCircleTol = 1e-12;
constexpr double kPairTol = 1e-12;

double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

}  // namespace

std::string edge_tag_name(EdgeTag tag) {
  switch (tag) {
    case EdgeTag::HOLE: return "HOLE";
    case EdgeTag::OUTER_CELL: return "OUTER_CELL";
    case EdgeTag::EXTERIOR: return "EXTERIOR";
  }
  return "?";
}

EdgeTag parse_edge_tag(const std::string& name) {
  if (name == "HOLE") return EdgeTag::HOLE;
  if (name == "OUTER_CELL") return EdgeTag::OUTER_CELL;
  if (name == "EXTERIOR") return EdgeTag::EXTERIOR;
  throw MeshError("unknown edge tag: " + name);
}

double TriMesh::triangle_area(int t) const {
  const auto& tri = triangles[t];
  const Vec2 a = vertices[tri[0]], b = vertices[tri[1]], c = vertices[tri[2]];
  return 0.5 * cross(b - a, c - a);
}

Vec2 TriMesh::centroid(int t) const {
  const auto& tri = triangles[t];
  const Vec2 a = vertices[tri[0]], b = vertices[tri[1]], c = vertices[tri[2]];
  return {(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
}

std::array<Vec2, 3> TriMesh::basis_gradients(int t) const {
  const auto& tri = triangles[t];
  const Vec2 p0 = vertices[tri[0]], p1 = vertices[tri[1]], p2 = vertices[tri[2]];
  const double inv2A = 1.0 / (2.0 * triangle_area(t));
  auto perp = [](Vec2 v) { return Vec2{-v.y, v.x}; };
  return {inv2A * perp(p2 - p1), inv2A * perp(p0 - p2), inv2A * perp(p1 - p0)};
}

Vec2 TriMesh::outward_normal(const BoundaryEdge& e) const {
  const Vec2 d = vertices[e.b] - vertices[e.a];
  const double len = norm(d);
  return {d.y / len, -d.x / len};
}

double TriMesh::edge_length(const BoundaryEdge& e) const {
  return norm(vertices[e.b] - vertices[e.a]);
}

double TriMesh::total_area() const {
  double s = 0.0;
  for (int t = 0; t < triangle_count(); ++t) s += triangle_area(t);
  return s;
}

double TriMesh::max_edge_length() const {
  double m = 0.0;
  for (const auto& tri : triangles) {
    for (int k = 0; k < 3; ++k) {
      m = std::max(m, norm(vertices[tri[k]] - vertices[tri[(k + 1) % 3]]));
    }
  }
  return m;
}

double TriMesh::boundary_length(EdgeTag tag) const {
  double s = 0.0;
  for (const auto& e : boundary_edges) {
    if (e.tag == tag) s += edge_length(e);
  }
  return s;
}

// ---------------------------------------------------------------------------
// unit cell generator
// ---------------------------------------------------------------------------

namespace {

struct Builder {
  std::vector<Vec2> verts;
  std::vector<std::array<int, 3>> tris;
};

// in-circumcircle determinant; positive when d lies inside the circumcircle
// of CCW triangle (a, b, c)
double incircle(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const double ax = a.x - d.x, ay = a.y - d.y;
  const double bx = b.x - d.x, by = b.y - d.y;
  const double cx = c.x - d.x, cy = c.y - d.y;
  const double a2 = ax * ax + ay * ay;
  const double b2 = bx * bx + by * by;
  const double c2 = cx * cx + cy * cy;
  return a2 * (bx * cy - by * cx) - b2 * (ax * cy - ay * cx) +
         c2 * (ax * by - ay * bx);
}

void delaunay_repair_near_circle(Builder& mb, const UnitCellGeometry& cell,
                                 double band) {
  for (int pass = 0; pass < 50; ++pass) {
    // adjacency: undirected edge -> up to two (triangle, local edge) slots
    std::unordered_map<std::uint64_t, std::array<int, 2>> adj;
    adj.reserve(mb.tris.size() * 2);
    for (int t = 0; t < static_cast<int>(mb.tris.size()); ++t) {
      for (int k = 0; k < 3; ++k) {
        auto key = edge_key(mb.tris[t][k], mb.tris[t][(k + 1) % 3]);
        auto [it, fresh] = adj.try_emplace(key, std::array<int, 2>{-1, -1});
        it->second[fresh ? 0 : 1] = t;
      }
    }
    std::vector<char> dirty(mb.tris.size(), 0);
    int flips = 0;
    for (int t1 = 0; t1 < static_cast<int>(mb.tris.size()); ++t1) {
      for (int k = 0; k < 3; ++k) {
        if (dirty[t1]) break;
        const int a = mb.tris[t1][k];
        const int b = mb.tris[t1][(k + 1) % 3];
        const int p = mb.tris[t1][(k + 2) % 3];
        auto it = adj.find(edge_key(a, b));
        const int t2 = it->second[0] == t1 ? it->second[1] : it->second[0];
        if (t2 < 0 || t2 < t1 || dirty[t2]) continue;
        const double da = cell.signed_distance(mb.verts[a]);
        const double db = cell.signed_distance(mb.verts[b]);
        if (std::min(std::abs(da), std::abs(db)) > band) continue;
        int q = -1;
        for (int j = 0; j < 3; ++j) {
          const int v = mb.tris[t2][j];
          if (v != a && v != b) q = v;
        }
        const Vec2 pa = mb.verts[a], pb = mb.verts[b];
        const Vec2 pp = mb.verts[p], pq = mb.verts[q];
        const double scale = dot(pa - pq, pa - pq) + dot(pb - pq, pb - pq) +
                             dot(pp - pq, pp - pq);
        if (incircle(pa, pb, pp, pq) <= 1e-12 * scale * scale) continue;
        const double area1 = cross(pq - pa, pp - pa);
        const double area2 = cross(pb - pq, pp - pq);
        if (area1 <= 1e-14 * scale || area2 <= 1e-14 * scale) continue;
        mb.tris[t1] = {a, q, p};
        mb.tris[t2] = {q, b, p};
        dirty[t1] = dirty[t2] = 1;
        ++flips;
      }
    }
    if (flips == 0) break;
  }
}

// collects the boundary edges (directed as traversed by their unique triangle)
std::vector<BoundaryEdge> find_boundary_edges(const std::vector<std::array<int, 3>>& tris) {
  std::unordered_map<std::uint64_t, int> count;
  count.reserve(tris.size() * 2);
  for (const auto& tri : tris) {
    for (int k = 0; k < 3; ++k) {
      ++count[edge_key(tri[k], tri[(k + 1) % 3])];
    }
  }
  std::vector<BoundaryEdge> out;
  for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
    for (int k = 0; k < 3; ++k) {
      const int a = tris[t][k], b = tris[t][(k + 1) % 3];
      if (count[edge_key(a, b)] == 1) {
        out.push_back({a, b, t, EdgeTag::OUTER_CELL});
      }
    }
  }
  return out;
}

void build_periodic_pairs(TriMesh& mesh) {
  auto collect = [&](auto&& pred) {
    std::vector<int> ids;
    for (int v = 0; v < mesh.vertex_count(); ++v) {
      if (pred(mesh.vertices[v])) ids.push_back(v);
    }
    return ids;
  };
  auto match = [&](std::vector<int> lo, std::vector<int> hi, int axis) {
    auto key = [&](int v) {
      return axis == 0 ? mesh.vertices[v].y : mesh.vertices[v].x;
    };
    std::sort(lo.begin(), lo.end(), [&](int u, int v) { return key(u) < key(v); });
    std::sort(hi.begin(), hi.end(), [&](int u, int v) { return key(u) < key(v); });
    if (lo.size() != hi.size()) {
      throw MeshError("periodic boundary vertex counts differ");
    }
    for (size_t i = 0; i < lo.size(); ++i) {
      if (std::abs(key(lo[i]) - key(hi[i])) > kPairTol) {
        throw MeshError("periodic boundary vertices do not pair up");
      }
      mesh.periodic_pairs.push_back({lo[i], hi[i], axis});
    }
  };
  match(collect([](Vec2 p) { return p.x == 0.0; }),
        collect([](Vec2 p) { return p.x == 1.0; }), 0);
  match(collect([](Vec2 p) { return p.y == 0.0; }),
        collect([](Vec2 p) { return p.y == 1.0; }), 1);
}

}  // namespace

TriMesh build_unit_cell_mesh(const UnitCellGeometry& cell, double h_target) {
  cell.validate();
  if (!(h_target > 0.0) || h_target > 0.5) {
    throw MeshError("h_target must lie in (0, 0.5]");
  }
  int n = static_cast<int>(std::ceil(1.0 / h_target - 1e-9));
  n = std::max(n, 2);
  const double r = cell.hole_radius;
  if (cell.has_hole()) {
    if (n % 2 == 1) ++n;
    const double h = 1.0 / n;
    if (r < 2.5 * h) {
      throw MeshError("h_target too coarse to resolve the hole curvature");
    }
    const double margin =
        std::min(std::min(cell.hole_center.x, 1.0 - cell.hole_center.x),
                 std::min(cell.hole_center.y, 1.0 - cell.hole_center.y)) - r;
    if (margin < 2.0 * h) {
      throw MeshError("hole too close to the cell boundary for this h_target");
    }
  }

  Builder mb;
  const int stride = n + 1;
  mb.verts.reserve(static_cast<size_t>(stride) * stride + (cell.has_hole() ? n * n : 0));
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      mb.verts.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
    }
  }
  auto gid = [&](int i, int j) { return j * stride + i; };

  if (!cell.has_hole()) {
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        const int v00 = gid(i, j), v10 = gid(i + 1, j);
        const int v01 = gid(i, j + 1), v11 = gid(i + 1, j + 1);
        mb.tris.push_back({v00, v10, v11});
        mb.tris.push_back({v00, v11, v01});
      }
    }
  } else {
    const int center_base = stride * stride;
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        mb.verts.push_back({(i + 0.5) / n, (j + 0.5) / n});
      }
    }
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        const int v00 = gid(i, j), v10 = gid(i + 1, j);
        const int v01 = gid(i, j + 1), v11 = gid(i + 1, j + 1);
        const int c = center_base + j * n + i;
        mb.tris.push_back({v00, v10, c});
        mb.tris.push_back({v10, v11, c});
        mb.tris.push_back({v11, v01, c});
        mb.tris.push_back({v01, v00, c});
      }
    }

    const double h = 1.0 / n;
    // snap vertices near the circle onto it
    std::vector<double> sd(mb.verts.size());
    for (size_t v = 0; v < mb.verts.size(); ++v) {
      sd[v] = cell.signed_distance(mb.verts[v]);
      if (std::abs(sd[v]) < kSnapFraction * h) {
        const Vec2 p = mb.verts[v];
        if (p.x == 0.0 || p.x == 1.0 || p.y == 0.0 || p.y == 1.0) {
          throw MeshError("hole reaches the cell boundary band");
        }
        const Vec2 dir = p - cell.hole_center;
        mb.verts[v] = cell.hole_center + (r / norm(dir)) * dir;
        sd[v] = 0.0;
      }
    }

    // split every sign-crossing edge at the exact circle intersection
    std::unordered_map<std::uint64_t, int> cut;
    for (const auto& tri : mb.tris) {
      for (int k = 0; k < 3; ++k) {
        const int a = tri[k], b = tri[(k + 1) % 3];
        if (sd[a] * sd[b] >= 0.0) continue;
        const auto key = edge_key(a, b);
        if (cut.count(key)) continue;
        const Vec2 pa = mb.verts[a], pb = mb.verts[b];
        const Vec2 d = pb - pa, f = pa - cell.hole_center;
        const double A = dot(d, d), B = 2.0 * dot(f, d), C = dot(f, f) - r * r;
        const double disc = B * B - 4.0 * A * C;
        if (disc <= 0.0) throw MeshError("edge-circle intersection lost");
        const double sq = std::sqrt(disc);
        const double q = -0.5 * (B + (B >= 0.0 ? sq : -sq));
        double t = q / A;  // root·pair q/A and C/q
        if (!(t > 0.0 && t < 1.0)) t = C / q;
        if (!(t > 0.05 && t < 0.95)) {
          throw MeshError("degenerate circle cut; refine h_target");
        }
        Vec2 p = pa + t * d;
        const Vec2 dir = p - cell.hole_center;
        p = cell.hole_center + (r / norm(dir)) * dir;
        cut[key] = static_cast<int>(mb.verts.size());
        mb.verts.push_back(p);
        sd.push_back(0.0);
      }
    }

    // subdivide triangles around the cut vertices
    std::vector<std::array<int, 3>> refined;
    refined.reserve(mb.tris.size() + 2 * cut.size());
    for (const auto& tri : mb.tris) {
      int m[3];
      int ncut = 0;
      for (int k = 0; k < 3; ++k) {
        auto it = cut.find(edge_key(tri[k], tri[(k + 1) % 3]));
        m[k] = it == cut.end() ? -1 : it->second;
        if (m[k] >= 0) ++ncut;
      }
      if (ncut == 0) {
        refined.push_back(tri);
      } else if (ncut == 1) {
        for (int k = 0; k < 3; ++k) {
          if (m[k] < 0) continue;
          const int a = tri[k], b = tri[(k + 1) % 3], c = tri[(k + 2) % 3];
          refined.push_back({a, m[k], c});
          refined.push_back({m[k], b, c});
        }
      } else if (ncut == 2) {
        // rotate so cuts sit on (A,B) and (B,C)
        int k0 = -1;
        for (int k = 0; k < 3; ++k) {
          if (m[k] >= 0 && m[(k + 1) % 3] >= 0) k0 = k;
        }
        if (k0 < 0) throw MeshError("inconsistent cut pattern");
        const int A = tri[k0], B = tri[(k0 + 1) % 3], C = tri[(k0 + 2) % 3];
        const int mAB = m[k0], mBC = m[(k0 + 1) % 3];
        refined.push_back({mAB, B, mBC});
        const double d1 = norm(mb.verts[A] - mb.verts[mBC]);
        const double d2 = norm(mb.verts[mAB] - mb.verts[C]);
        if (d1 <= d2) {
          refined.push_back({A, mAB, mBC});
          refined.push_back({A, mBC, C});
        } else {
          refined.push_back({A, mAB, C});
          refined.push_back({mAB, mBC, C});
        }
      } else {
        throw MeshError("triangle crossed by the circle three times; refine h_target");
      }
    }
    mb.tris = std::move(refined);

    // prune triangles whose centroid fell inside the hole
    std::vector<std::array<int, 3>> kept;
    kept.reserve(mb.tris.size());
    for (const auto& tri : mb.tris) {
      const Vec2 c = (1.0 / 3.0) * (mb.verts[tri[0]] + mb.verts[tri[1]] + mb.verts[tri[2]]);
      if (cell.signed_distance(c) >= 0.0) kept.push_back(tri);
    }
    mb.tris = std::move(kept);

    delaunay_repair_near_circle(mb, cell, 1.5 * h);
  }

  // drop unreferenced vertices, order-preserving
  std::vector<int> remap(mb.verts.size(), -1);
  for (const auto& tri : mb.tris) {
    for (int v : tri) remap[v] = 0;
  }
  TriMesh mesh;
  for (size_t v = 0; v < mb.verts.size(); ++v) {
    if (remap[v] == 0) {
      remap[v] = mesh.vertex_count();
      mesh.vertices.push_back(mb.verts[v]);
    }
  }
  mesh.triangles.reserve(mb.tris.size());
  for (const auto& tri : mb.tris) {
    mesh.triangles.push_back({remap[tri[0]], remap[tri[1]], remap[tri[2]]});
  }
  mesh.hole_count = cell.has_hole() ? 1 : 0;

  // classify boundary edges
  mesh.boundary_edges = find_boundary_edges(mesh.triangles);
  int hole_edges = 0;
  for (auto& e : mesh.boundary_edges) {
    const Vec2 pa = mesh.vertices[e.a], pb = mesh.vertices[e.b];
    auto on_square = [](Vec2 p) {
      return p.x == 0.0 || p.x == 1.0 || p.y == 0.0 || p.y == 1.0;
    };
    if (on_square(pa) && on_square(pb)) {
      e.tag = EdgeTag::OUTER_CELL;
    } else if (std::abs(cell.signed_distance(pa)) <= kOnCircleTol &&
               std::abs(cell.signed_distance(pb)) <= kOnCircleTol) {
      e.tag = EdgeTag::HOLE;
      ++hole_edges;
    } else {
      throw MeshError("untaggable boundary edge produced by the generator");
    }
  }
  if (cell.has_hole() && hole_edges < 16) {
    throw MeshError("fewer than 16 edges resolve the hole circle; refine h_target");
  }

  build_periodic_pairs(mesh);

  if (mesh.max_edge_length() > 2.0 * h_target) {
    throw MeshError("generator exceeded the 2*h_target edge bound");
  }
  check_mesh(mesh);
  return mesh;
}

// ---------------------------------------------------------------------------
// tiler
// ---------------------------------------------------------------------------

TriMesh tile_perforated_mesh(const TriMesh& cell_mesh, double eps) {
  const int n = cells_per_side_for(eps);
  const int V = cell_mesh.vertex_count();

  std::vector<int> master_x(V, -1), master_y(V, -1);
  for (const auto& p : cell_mesh.periodic_pairs) {
    (p.axis == 0 ? master_x : master_y)[p.slave] = p.master;
  }
  if (n > 1 && cell_mesh.periodic_pairs.empty()) {
    throw MeshError("cell mesh lacks periodic pairing; cannot tile");
  }

  // canonical (cell, vertex) representative: cross interfaces right/upwards
  auto canonical = [&](int cx, int cy, int v) {
    bool moved = true;
    while (moved) {
      moved = false;
      if (master_x[v] >= 0 && cx + 1 < n) {
        v = master_x[v];
        ++cx;
        moved = true;
      }
      if (master_y[v] >= 0 && cy + 1 < n) {
        v = master_y[v];
        ++cy;
        moved = true;
      }
    }
    return (static_cast<long>(cy) * n + cx) * V + v;
  };

  TriMesh out;
  out.epsilon = eps;
  out.hole_count = n * n * cell_mesh.hole_count;

  std::vector<int> global_id(static_cast<size_t>(n) * n * V, -1);
  for (int cy = 0; cy < n; ++cy) {
    for (int cx = 0; cx < n; ++cx) {
      for (int v = 0; v < V; ++v) {
        const long slot = (static_cast<long>(cy) * n + cx) * V + v;
        const long canon = canonical(cx, cy, v);
        if (canon == slot) {
          global_id[slot] = out.vertex_count();
          out.vertices.push_back({eps * (cx + cell_mesh.vertices[v].x),
                                  eps * (cy + cell_mesh.vertices[v].y)});
        }
      }
    }
  }
  for (int cy = 0; cy < n; ++cy) {
    for (int cx = 0; cx < n; ++cx) {
      for (int v = 0; v < V; ++v) {
        const long slot = (static_cast<long>(cy) * n + cx) * V + v;
        if (global_id[slot] < 0) global_id[slot] = global_id[canonical(cx, cy, v)];
      }
    }
  }

  auto vid = [&](int cx, int cy, int v) {
    return global_id[(static_cast<long>(cy) * n + cx) * V + v];
  };

  out.triangles.reserve(static_cast<size_t>(n) * n * cell_mesh.triangle_count());
  out.provenance.reserve(out.triangles.capacity());
  for (int cy = 0; cy < n; ++cy) {
    for (int cx = 0; cx < n; ++cx) {
      for (int t = 0; t < cell_mesh.triangle_count(); ++t) {
        const auto& tri = cell_mesh.triangles[t];
        out.triangles.push_back(
            {vid(cx, cy, tri[0]), vid(cx, cy, tri[1]), vid(cx, cy, tri[2])});
        out.provenance.push_back({cx, cy, t});
      }
    }
  }

  const int cell_tris = cell_mesh.triangle_count();
  for (int cy = 0; cy < n; ++cy) {
    for (int cx = 0; cx < n; ++cx) {
      const int tri_base = (cy * n + cx) * cell_tris;
      for (const auto& e : cell_mesh.boundary_edges) {
        if (e.tag == EdgeTag::HOLE) {
          out.boundary_edges.push_back(
              {vid(cx, cy, e.a), vid(cx, cy, e.b), tri_base + e.triangle, EdgeTag::HOLE});
          continue;
        }
        const Vec2 pa = cell_mesh.vertices[e.a], pb = cell_mesh.vertices[e.b];
        bool exterior = false;
        if (pa.x == 0.0 && pb.x == 0.0) exterior = (cx == 0);
        else if (pa.x == 1.0 && pb.x == 1.0) exterior = (cx == n - 1);
        else if (pa.y == 0.0 && pb.y == 0.0) exterior = (cy == 0);
        else if (pa.y == 1.0 && pb.y == 1.0) exterior = (cy == n - 1);
        else throw MeshError("outer cell edge not aligned with a cell side");
        if (exterior) {
          out.boundary_edges.push_back(
              {vid(cx, cy, e.a), vid(cx, cy, e.b), tri_base + e.triangle, EdgeTag::EXTERIOR});
        }
      }
    }
  }

  check_mesh(out);
  return out;
}

// ---------------------------------------------------------------------------
// point location
// ---------------------------------------------------------------------------

PointLocator::PointLocator(const TriMesh& mesh) : mesh_(&mesh) {
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& v : mesh.vertices) {
    xmin = std::min(xmin, v.x);
    xmax = std::max(xmax, v.x);
    ymin = std::min(ymin, v.y);
    ymax = std::max(ymax, v.y);
  }
  const int T = mesh.triangle_count();
  const int grid = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(T))));
  nx_ = ny_ = std::min(grid, 2048);
  x0_ = xmin;
  y0_ = ymin;
  inv_dx_ = nx_ / std::max(xmax - xmin, 1e-300);
  inv_dy_ = ny_ / std::max(ymax - ymin, 1e-300);

  auto bucket_range = [&](int t) {
    const auto& tri = mesh.triangles[t];
    double bx0 = 1e300, bx1 = -1e300, by0 = 1e300, by1 = -1e300;
    for (int v : tri) {
      bx0 = std::min(bx0, mesh.vertices[v].x);
      bx1 = std::max(bx1, mesh.vertices[v].x);
      by0 = std::min(by0, mesh.vertices[v].y);
      by1 = std::max(by1, mesh.vertices[v].y);
    }
    const int i0 = std::clamp(static_cast<int>((bx0 - x0_) * inv_dx_), 0, nx_ - 1);
    const int i1 = std::clamp(static_cast<int>((bx1 - x0_) * inv_dx_), 0, nx_ - 1);
    const int j0 = std::clamp(static_cast<int>((by0 - y0_) * inv_dy_), 0, ny_ - 1);
    const int j1 = std::clamp(static_cast<int>((by1 - y0_) * inv_dy_), 0, ny_ - 1);
    return std::array<int, 4>{i0, i1, j0, j1};
  };

  std::vector<int> counts(static_cast<size_t>(nx_) * ny_ + 1, 0);
  for (int t = 0; t < T; ++t) {
    const auto [i0, i1, j0, j1] = bucket_range(t);
    for (int j = j0; j <= j1; ++j) {
      for (int i = i0; i <= i1; ++i) ++counts[static_cast<size_t>(j) * nx_ + i + 1];
    }
  }
  std::partial_sum(counts.begin(), counts.end(), counts.begin());
  bucket_start_ = counts;
  bucket_items_.resize(bucket_start_.back());
  std::vector<int> cursor(bucket_start_.begin(), bucket_start_.end() - 1);
  for (int t = 0; t < T; ++t) {
    const auto [i0, i1, j0, j1] = bucket_range(t);
    for (int j = j0; j <= j1; ++j) {
      for (int i = i0; i <= i1; ++i) {
        bucket_items_[cursor[static_cast<size_t>(j) * nx_ + i]++] = t;
      }
    }
  }
}

bool PointLocator::try_locate(Vec2 p, LocateResult& out) const {
  const int i = std::clamp(static_cast<int>((p.x - x0_) * inv_dx_), 0, nx_ - 1);
  const int j = std::clamp(static_cast<int>((p.y - y0_) * inv_dy_), 0, ny_ - 1);
  const size_t b = static_cast<size_t>(j) * nx_ + i;
  for (int s = bucket_start_[b]; s < bucket_start_[b + 1]; ++s) {
    const int t = bucket_items_[s];
    const auto& tri = mesh_->triangles[t];
    const Vec2 a = mesh_->vertices[tri[0]], b1 = mesh_->vertices[tri[1]],
               c = mesh_->vertices[tri[2]];
    const double inv2A = 1.0 / cross(b1 - a, c - a);
    const double l0 = cross(b1 - p, c - p) * inv2A;
    const double l1 = cross(c - p, a - p) * inv2A;
    const double l2 = 1.0 - l0 - l1;
    if (l0 >= -1e-12 && l1 >= -1e-12 && l2 >= -1e-12) {
      out.triangle = t;
      out.bary = {l0, l1, l2};
      return true;
    }
  }
  return false;
}

LocateResult PointLocator::locate(Vec2 p) const {
  LocateResult r;
  if (!try_locate(p, r)) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "point (%.17g, %.17g) not inside the mesh", p.x, p.y);
    throw NotFoundError(buf);
  }
  return r;
}

LocateResult locate(const TriMesh& mesh, Vec2 p) {
  return PointLocator(mesh).locate(p);
}

// ---------------------------------------------------------------------------
// invariant suite
// ---------------------------------------------------------------------------

void check_mesh(const TriMesh& mesh) {
  const int V = mesh.vertex_count();
  const int T = mesh.triangle_count();
  if (V < 3 || T < 1) throw MeshError("mesh is empty");
  for (const auto& v : mesh.vertices) {
    if (!std::isfinite(v.x) || !std::isfinite(v.y)) {
      throw MeshError("non-finite vertex coordinate");
    }
  }
  for (int t = 0; t < T; ++t) {
    const auto& tri = mesh.triangles[t];
    for (int v : tri) {
      if (v < 0 || v >= V) throw MeshError("triangle vertex index out of range");
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) {
      throw MeshError("degenerate triangle (repeated vertex)");
    }
    if (!(mesh.triangle_area(t) > 0.0)) {
      throw MeshError("non-positive triangle area at triangle " + std::to_string(t));
    }
  }

  std::unordered_map<std::uint64_t, int> edge_count;
  edge_count.reserve(static_cast<size_t>(T) * 2);
  for (const auto& tri : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      const int c = ++edge_count[edge_key(tri[k], tri[(k + 1) % 3])];
      if (c > 2) throw MeshError("edge shared by more than two triangles");
    }
  }

  std::unordered_map<std::uint64_t, int> tagged;
  for (const auto& e : mesh.boundary_edges) {
    const auto key = edge_key(e.a, e.b);
    auto it = edge_count.find(key);
    if (it == edge_count.end() || it->second != 1) {
      throw MeshError("tagged edge is not a one-triangle boundary edge");
    }
    if (++tagged[key] > 1) throw MeshError("boundary edge tagged twice");
    if (e.triangle < 0 || e.triangle >= T) {
      throw MeshError("boundary edge has invalid adjacent triangle");
    }
    const auto& tri = mesh.triangles[e.triangle];
    bool found = false;
    for (int k = 0; k < 3; ++k) {
      if (tri[k] == e.a && tri[(k + 1) % 3] == e.b) found = true;
    }
    if (!found) throw MeshError("boundary edge orientation disagrees with its triangle");
  }
  std::size_t boundary_total = 0;
  for (const auto& [key, c] : edge_count) {
    if (c == 1) {
      ++boundary_total;
      if (!tagged.count(key)) throw MeshError("untagged boundary edge");
    }
  }
  if (boundary_total != mesh.boundary_edges.size()) {
    throw MeshError("boundary edge bookkeeping mismatch");
  }

  for (const auto& p : mesh.periodic_pairs) {
    const Vec2 d = mesh.vertices[p.slave] - mesh.vertices[p.master];
    const Vec2 expect = p.axis == 0 ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0};
    if (std::abs(d.x - expect.x) > kPairTol || std::abs(d.y - expect.y) > kPairTol) {
      throw MeshError("periodic pair offset violates the unit translation");
    }
  }

  // boundary loops: every boundary vertex has exactly two incident boundary
  // edges and V - E + F == 2 - loops with loops == hole_count + 1
  std::unordered_map<int, int> incident;
  for (const auto& e : mesh.boundary_edges) {
    ++incident[e.a];
    ++incident[e.b];
  }
  for (const auto& [v, c] : incident) {
    if (c != 2) throw MeshError("boundary is not a disjoint union of loops");
  }
  std::vector<int> dsu(V, -1);
  std::function<int(int)> find = [&](int v) {
    while (dsu[v] >= 0) {
      if (dsu[dsu[v]] >= 0) dsu[v] = dsu[dsu[v]];
      v = dsu[v];
    }
    return v;
  };
  for (const auto& e : mesh.boundary_edges) {
    const int ra = find(e.a), rb = find(e.b);
    if (ra != rb) dsu[ra] = rb;
  }
  int loops = 0;
  for (const auto& [v, c] : incident) {
    if (find(v) == v) ++loops;
  }
  const long E = static_cast<long>(edge_count.size());
  if (static_cast<long>(V) - E + T != 2 - loops) {
    throw MeshError("Euler characteristic mismatch");
  }
  if (loops != mesh.hole_count + 1) {
    throw MeshError("boundary loop count disagrees with hole count");
  }
  if (!mesh.provenance.empty() &&
      mesh.provenance.size() != mesh.triangles.size()) {
    throw MeshError("provenance size mismatch");
  }
}

// ---------------------------------------------------------------------------
// plain-text dump
// ---------------------------------------------------------------------------

void write_mesh_dump(const TriMesh& mesh, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os.precision(17);
  os << "# vertices " << mesh.vertex_count() << "\n";
  for (const auto& v : mesh.vertices) os << v.x << " " << v.y << "\n";
  os << "# triangles " << mesh.triangle_count() << "\n";
  for (const auto& t : mesh.triangles) os << t[0] << " " << t[1] << " " << t[2] << "\n";
  os << "# edges " << mesh.boundary_edges.size() << "\n";
  for (const auto& e : mesh.boundary_edges) {
    os << e.a << " " << e.b << " " << edge_tag_name(e.tag) << "\n";
  }
  if (!os) throw Error("write failed: " + path.string());
}

TriMesh read_mesh_dump(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path.string());
  TriMesh mesh;
  std::string hash, word;
  long count = 0;
  if (!(is >> hash >> word >> count) || word != "vertices") {
    throw Error("bad mesh dump header in " + path.string());
  }
  mesh.vertices.resize(count);
  for (auto& v : mesh.vertices) is >> v.x >> v.y;
  if (!(is >> hash >> word >> count) || word != "triangles") {
    throw Error("bad triangle section in " + path.string());
  }
  mesh.triangles.resize(count);
  for (auto& t : mesh.triangles) is >> t[0] >> t[1] >> t[2];
  if (!(is >> hash >> word >> count) || word != "edges") {
    throw Error("bad edge section in " + path.string());
  }
  mesh.boundary_edges.resize(count);
  for (auto& e : mesh.boundary_edges) {
    std::string tag;
    is >> e.a >> e.b >> tag;
    e.tag = parse_edge_tag(tag);
  }
  if (!is) throw Error("truncated mesh dump: " + path.string());
  return mesh;
}

}  // namespace homog
