#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "homog/mesh.hpp"

using namespace homog;

namespace {

UnitCellGeometry holed(double r) {
  UnitCellGeometry g;
  g.hole_radius = r;
  return g;
}

}  // namespace

TEST_CASE("hole-free coarse mesh is the structured 2-split grid") {
  const TriMesh mesh = build_unit_cell_mesh(holed(0.0), 0.5);
  CHECK(mesh.vertex_count() == 9);
  CHECK(mesh.triangle_count() == 8);
  CHECK(mesh.hole_count == 0);
  CHECK(mesh.total_area() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(mesh.boundary_length(EdgeTag::HOLE) == 0.0);
  CHECK(mesh.boundary_length(EdgeTag::OUTER_CELL) == doctest::Approx(4.0));
  CHECK(mesh.max_edge_length() <= 2.0 * 0.5 + 1e-15);
  for (const auto& e : mesh.boundary_edges) CHECK(e.tag == EdgeTag::OUTER_CELL);
  CHECK_NOTHROW(check_mesh(mesh));
}

TEST_CASE("perforated cell mesh resolves the hole area and perimeter") {
  const TriMesh mesh = build_unit_cell_mesh(holed(0.25), 0.05);
  const double exact = 1.0 - M_PI * 0.0625;
  CHECK(std::abs(mesh.total_area() - exact) / exact < 0.01);
  // inscribed polygon: meshed hole boundary is shorter than the circle
  const double perim = mesh.boundary_length(EdgeTag::HOLE);
  CHECK(perim <= 2.0 * M_PI * 0.25 + 1e-12);
  CHECK(perim > 2.0 * M_PI * 0.25 * 0.99);
  int hole_edges = 0;
  for (const auto& e : mesh.boundary_edges) {
    if (e.tag == EdgeTag::HOLE) ++hole_edges;
  }
  CHECK(hole_edges >= 16);
  CHECK(mesh.hole_count == 1);
  CHECK(mesh.max_edge_length() <= 2.0 * 0.05 + 1e-15);
  CHECK_NOTHROW(check_mesh(mesh));
}

TEST_CASE("meshed area converges to |Y1| at second order") {
  const double exact = 1.0 - M_PI * 0.0625;
  double prev_err = 0.0;
  int level = 0;
  for (double h : {0.08, 0.04, 0.02}) {
    const TriMesh mesh = build_unit_cell_mesh(holed(0.25), h);
    const double err = std::abs(mesh.total_area() - exact);
    if (level > 0) CHECK(err < prev_err / 2.5);  // O(h^2) would give 4
    prev_err = err;
    ++level;
  }
}

TEST_CASE("periodic pairs connect opposite sides by a unit translation") {
  const TriMesh mesh = build_unit_cell_mesh(holed(0.25), 0.1);
  CHECK(!mesh.periodic_pairs.empty());
  for (const auto& p : mesh.periodic_pairs) {
    const Vec2 m = mesh.vertices[p.master];
    const Vec2 s = mesh.vertices[p.slave];
    const Vec2 shift = p.axis == 0 ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0};
    CHECK(std::abs(m.x + shift.x - s.x) <= 1e-12);
    CHECK(std::abs(m.y + shift.y - s.y) <= 1e-12);
  }
}

TEST_CASE("infeasible meshing requests are refused") {
  CHECK_THROWS_AS(build_unit_cell_mesh(holed(0.25), 0.2), MeshError);
  UnitCellGeometry off = holed(0.3);
  off.hole_center = {0.72, 0.5};
  CHECK_THROWS_AS(off.validate(), GeometryError);
  CHECK_THROWS_AS(build_unit_cell_mesh(holed(0.6), 0.05), GeometryError);
  CHECK_THROWS_AS(build_unit_cell_mesh(holed(0.0), 0.0), MeshError);
  CHECK_THROWS_AS(build_unit_cell_mesh(holed(0.0), 0.7), MeshError);
}

TEST_CASE("tiling at eps 1 only re-tags the outer boundary") {
  const TriMesh cell = build_unit_cell_mesh(holed(0.25), 0.1);
  const TriMesh tiled = tile_perforated_mesh(cell, 1.0);
  CHECK(tiled.vertex_count() == cell.vertex_count());
  CHECK(tiled.triangle_count() == cell.triangle_count());
  CHECK(tiled.hole_count == 1);
  CHECK(tiled.epsilon == 1.0);
  CHECK(tiled.provenance.size() == tiled.triangles.size());
  int exterior = 0, hole = 0;
  for (const auto& e : tiled.boundary_edges) {
    if (e.tag == EdgeTag::EXTERIOR) ++exterior;
    if (e.tag == EdgeTag::HOLE) ++hole;
    CHECK(e.tag != EdgeTag::OUTER_CELL);
  }
  CHECK(exterior > 0);
  int cell_hole = 0;
  for (const auto& e : cell.boundary_edges) {
    if (e.tag == EdgeTag::HOLE) ++cell_hole;
  }
  CHECK(hole == cell_hole);
  CHECK_NOTHROW(check_mesh(tiled));
}

TEST_CASE("tiling glues shared interfaces and keeps the analytic totals") {
  const TriMesh cell = build_unit_cell_mesh(holed(0.25), 0.1);
  const TriMesh tiled = tile_perforated_mesh(cell, 0.5);
  CHECK(tiled.triangle_count() == 4 * cell.triangle_count());
  CHECK(tiled.hole_count == 4);
  // interfaces shared: strictly fewer than 4 disjoint copies
  CHECK(tiled.vertex_count() < 4 * cell.vertex_count());
  CHECK(tiled.total_area() ==
        doctest::Approx(cell.total_area()).epsilon(1e-12));
  CHECK(tiled.boundary_length(EdgeTag::HOLE) ==
        doctest::Approx(2.0 * cell.boundary_length(EdgeTag::HOLE))
            .epsilon(1e-12));  // n^2 copies scaled by eps: 4 * 0.5
  CHECK(tiled.max_edge_length() ==
        doctest::Approx(0.5 * cell.max_edge_length()).epsilon(1e-12));
  CHECK_NOTHROW(check_mesh(tiled));

  // every EXTERIOR edge lies on the unit-square boundary
  for (const auto& e : tiled.boundary_edges) {
    if (e.tag != EdgeTag::EXTERIOR) continue;
    for (int v : {e.a, e.b}) {
      const Vec2 p = tiled.vertices[v];
      const bool on_side =
          p.x == 0.0 || p.x == 1.0 || p.y == 0.0 || p.y == 1.0;
      CHECK(on_side);
    }
  }
}

TEST_CASE("tiling rejects a non-integer period") {
  const TriMesh cell = build_unit_cell_mesh(holed(0.0), 0.25);
  CHECK_THROWS_AS(tile_perforated_mesh(cell, 0.3), ConfigError);
}

TEST_CASE("provenance reproduces fine points through the cell mesh") {
  const TriMesh cell = build_unit_cell_mesh(holed(0.25), 0.1);
  const TriMesh tiled = tile_perforated_mesh(cell, 0.25);
  const PointLocator cell_locator(cell);
  for (int t = 0; t < tiled.triangle_count(); t += 7) {
    const Vec2 c = tiled.centroid(t);
    const auto& prov = tiled.provenance[t];
    const WrapResult w = wrap_to_cell(c, 0.25);
    CHECK(w.cell.ix == prov.cell_x);
    CHECK(w.cell.iy == prov.cell_y);
    const LocateResult loc = cell_locator.locate(w.y);
    CHECK(loc.triangle == prov.cell_triangle);
  }
}

TEST_CASE("locate answers vertex, centroid and hole queries") {
  const TriMesh mesh = build_unit_cell_mesh(holed(0.25), 0.1);
  const PointLocator locator(mesh);

  const Vec2 v0 = mesh.vertices[mesh.triangles[0][0]];
  const LocateResult at_vertex = locator.locate(v0);
  double best = 0.0;
  for (double b : at_vertex.bary) best = std::max(best, b);
  CHECK(best == doctest::Approx(1.0).epsilon(1e-9));

  for (int k : {0, 5, 11}) {
    const LocateResult at_centroid = locator.locate(mesh.centroid(k));
    CHECK(at_centroid.triangle == k);
    for (double b : at_centroid.bary) {
      CHECK(b == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    }
  }

  CHECK_THROWS_AS(locator.locate({0.5, 0.5}), NotFoundError);
  CHECK_THROWS_AS(locator.locate({1.5, 0.5}), NotFoundError);

  // barycentric postcondition on random material points
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  int found = 0;
  while (found < 100) {
    const Vec2 p{U(rng), U(rng)};
    if (norm(p - Vec2{0.5, 0.5}) < 0.27) continue;
    const LocateResult loc = locator.locate(p);
    double sum = 0.0;
    for (double b : loc.bary) {
      CHECK(b >= -1e-12);
      sum += b;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    // reconstruct the point from the barycentric coordinates
    const auto& tri = mesh.triangles[loc.triangle];
    Vec2 r{0.0, 0.0};
    for (int i = 0; i < 3; ++i) r = r + loc.bary[i] * mesh.vertices[tri[i]];
    CHECK(norm(r - p) <= 1e-12);
    ++found;
  }
}

TEST_CASE("mesh dump round-trips") {
  const TriMesh mesh = build_unit_cell_mesh(holed(0.25), 0.1);
  const auto path = std::filesystem::temp_directory_path() / "homog_dump_test.txt";
  write_mesh_dump(mesh, path);
  const TriMesh back = read_mesh_dump(path);
  std::filesystem::remove(path);
  REQUIRE(back.vertex_count() == mesh.vertex_count());
  REQUIRE(back.triangle_count() == mesh.triangle_count());
  REQUIRE(back.boundary_edges.size() == mesh.boundary_edges.size());
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    CHECK(back.vertices[v].x == mesh.vertices[v].x);
    CHECK(back.vertices[v].y == mesh.vertices[v].y);
  }
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    CHECK(back.triangles[t] == mesh.triangles[t]);
  }
  for (size_t e = 0; e < mesh.boundary_edges.size(); ++e) {
    CHECK(back.boundary_edges[e].a == mesh.boundary_edges[e].a);
    CHECK(back.boundary_edges[e].b == mesh.boundary_edges[e].b);
    CHECK(back.boundary_edges[e].tag == mesh.boundary_edges[e].tag);
  }
}

TEST_CASE("check_mesh flags broken meshes") {
  TriMesh mesh = build_unit_cell_mesh(holed(0.0), 0.25);
  std::swap(mesh.triangles[0][0], mesh.triangles[0][1]);  // negative area
  CHECK_THROWS_AS(check_mesh(mesh), MeshError);

  TriMesh mesh2 = build_unit_cell_mesh(holed(0.0), 0.25);
  mesh2.boundary_edges.pop_back();  // untagged boundary edge
  CHECK_THROWS_AS(check_mesh(mesh2), MeshError);

  TriMesh mesh3 = build_unit_cell_mesh(holed(0.25), 0.1);
  mesh3.hole_count = 2;  // Euler relation now inconsistent
  CHECK_THROWS_AS(check_mesh(mesh3), MeshError);
}
