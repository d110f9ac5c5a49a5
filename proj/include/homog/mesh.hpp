#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "homog/geometry.hpp"

namespace homog {

enum class EdgeTag { HOLE, OUTER_CELL, EXTERIOR };

std::string edge_tag_name(EdgeTag tag);
EdgeTag parse_edge_tag(const std::string& name);

struct BoundaryEdge {
  int a = -1;
  int b = -1;
  int triangle = -1;  // the unique adjacent triangle
  EdgeTag tag = EdgeTag::OUTER_CELL;
};

/// slave = master + unit vector along axis (0: +e1, 1: +e2)
struct PeriodicPair {
  int master = -1;
  int slave = -1;
  int axis = 0;
};

struct Provenance {
  int cell_x = 0;
  int cell_y = 0;
  int cell_triangle = 0;
};

struct TriMesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;  // CCW
  std::vector<BoundaryEdge> boundary_edges;
  std::vector<PeriodicPair> periodic_pairs;  // cell meshes only
  std::vector<Provenance> provenance;        // tiled meshes only, one per triangle
  int hole_count = 0;
  double epsilon = 1.0;  // scaling used by the tiler; 1 for cell meshes

  int vertex_count() const { return static_cast<int>(vertices.size()); }
  int triangle_count() const { return static_cast<int>(triangles.size()); }

  double triangle_area(int t) const;
  Vec2 centroid(int t) const;
  /// Gradients of the three P1 basis functions on triangle t.
  std::array<Vec2, 3> basis_gradients(int t) const;
  /// Outward normal (unit) of a boundary edge; on hole boundaries this
  /// points out of the material, i.e. into the hole.
  Vec2 outward_normal(const BoundaryEdge& e) const;
  double edge_length(const BoundaryEdge& e) const;

  double total_area() const;
  double max_edge_length() const;
  double boundary_length(EdgeTag tag) const;
};

/// Structured triangulation of the (possibly perforated) unit cell.
/// Background grid: 2 triangles per square for r == 0, crisscross (4 per
/// square, symmetric under the square's symmetries) for r > 0; vertices near
/// the circle are snapped onto it, crossing edges split at exact circle
/// points, triangles inside the hole pruned, followed by local Delaunay edge
/// flips near the circle.
TriMesh build_unit_cell_mesh(const UnitCellGeometry& cell, double h_target);

/// Scales the cell mesh by eps and tiles (1/eps)^2 copies over the unit
/// square, merging shared-interface vertices structurally through the cell's
/// periodic pairing (no coordinate tolerance). Fills provenance.
TriMesh tile_perforated_mesh(const TriMesh& cell_mesh, double eps);

struct LocateResult {
  int triangle = -1;
  std::array<double, 3> bary{0.0, 0.0, 0.0};
};

/// Uniform-bucket point locator. Accepts points with all barycentric
/// coordinates >= -1e-12; throws NotFoundError otherwise.
class PointLocator {
 public:
  explicit PointLocator(const TriMesh& mesh);
  LocateResult locate(Vec2 p) const;
  bool try_locate(Vec2 p, LocateResult& out) const;
  const TriMesh& mesh() const { return *mesh_; }

 private:
  const TriMesh* mesh_;
  double x0_, y0_, inv_dx_, inv_dy_;
  int nx_, ny_;
  std::vector<int> bucket_start_;  // CSR over buckets
  std::vector<int> bucket_items_;
};

/// One-shot convenience wrapper around PointLocator.
LocateResult locate(const TriMesh& mesh, Vec2 p);

/// Full invariant suite: positive areas, edge conformity, boundary tagging,
/// periodic pairing (cell meshes), Euler characteristic against hole count.
/// Throws MeshError on the first violation.
void check_mesh(const TriMesh& mesh);

void write_mesh_dump(const TriMesh& mesh, const std::filesystem::path& path);
TriMesh read_mesh_dump(const std::filesystem::path& path);

}  // namespace homog
