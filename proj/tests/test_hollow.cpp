#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "test_util.hpp"
#include "truss/hollow.hpp"
#include "truss/oracle.hpp"
#include "truss/stiffness.hpp"

using namespace truss;

namespace {

OrientedBox cube_box(double side) {
  OrientedBox box;
  box.center = Vec3(side / 2, side / 2, side / 2);
  box.axes = {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
  box.half_lengths = {side / 2, side / 2, side / 2};
  return box;
}

std::vector<int> all_tets(const TrussMesh &mesh) {
  std::vector<int> tets(mesh.num_tets());
  std::iota(tets.begin(), tets.end(), 0);
  return tets;
}

}  // namespace

TEST_CASE("r_division") {
  SUBCASE("8-side box with r=64 gives 8 cells of side 4") {
    const RDivision div = r_division(cube_box(8.0), 64.0);
    CHECK(div.num_cells() == 8);
    for (int axis = 0; axis < 3; ++axis) {
      CHECK(div.cells_per_axis[axis] == 2);
      CHECK(div.cuts[axis].size() == 1);
    }
  }
  SUBCASE("8-side box with r=8 gives 4 cells per axis") {
    const RDivision div = r_division(cube_box(8.0), 8.0);
    CHECK(div.num_cells() == 64);
    for (int axis = 0; axis < 3; ++axis) CHECK(div.cells_per_axis[axis] == 4);
  }
  SUBCASE("spacing stays within [0.5, 2] r^(1/3)") {
    for (double side : {8.0, 11.0, 15.0})
      for (double r : {8.0, 27.0, 64.0, 125.0}) {
        if (std::cbrt(r) > side) continue;
        const RDivision div = r_division(cube_box(side), r);
        for (int axis = 0; axis < 3; ++axis) {
          const double spacing = side / div.cells_per_axis[axis];
          CHECK(spacing >= 0.5 * std::cbrt(r));
          CHECK(spacing <= 2.0 * std::cbrt(r));
        }
      }
  }
  SUBCASE("r too large for a thin box is rejected") {
    OrientedBox box;
    box.center = Vec3::Zero();
    box.axes = {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
    box.half_lengths = {2.0, 0.5, 0.5};
    CHECK_THROWS_AS(r_division(box, 8.0), std::invalid_argument);
  }
  SUBCASE("r below 8 is rejected") {
    CHECK_THROWS_AS(r_division(cube_box(8.0), 4.0), std::invalid_argument);
  }
}

TEST_CASE("boundary tets") {
  SUBCASE("single tet is its own boundary") {
    const TrussMesh mesh({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}},
                         {{0, 1, 2, 3}});
    CHECK(boundary_tets(mesh, {0}) == std::vector<int>{0});
  }
  SUBCASE("matches a brute-force count of unshared faces") {
    const TrussMesh mesh = generate_grid_truss(2, 2, 2);
    std::map<std::array<int, 3>, int> face_count;
    for (const auto &t : mesh.tets()) {
      const auto v = t.verts();
      for (int skip = 0; skip < 4; ++skip) {
        std::array<int, 3> f;
        int k = 0;
        for (int i = 0; i < 4; ++i)
          if (i != skip) f[k++] = v[i];
        std::sort(f.begin(), f.end());
        ++face_count[f];
      }
    }
    std::set<int> expect;
    for (int t = 0; t < mesh.num_tets(); ++t) {
      const auto v = mesh.tets()[t].verts();
      for (int skip = 0; skip < 4; ++skip) {
        std::array<int, 3> f;
        int k = 0;
        for (int i = 0; i < 4; ++i)
          if (i != skip) f[k++] = v[i];
        std::sort(f.begin(), f.end());
        if (face_count[f] == 1) expect.insert(t);
      }
    }
    const auto b = boundary_tets(mesh, all_tets(mesh));
    CHECK(std::set<int>(b.begin(), b.end()) == expect);
  }
  SUBCASE("4x4x4 grid: strictly fewer than all tets") {
    const TrussMesh mesh = generate_grid_truss(4, 4, 4);
    const auto b = boundary_tets(mesh, all_tets(mesh));
    CHECK(b.size() < static_cast<size_t>(mesh.num_tets()));
    CHECK(!b.empty());
  }
}

TEST_CASE("stiffen") {
  const TrussMesh mesh = generate_grid_truss(2, 2, 1);
  SUBCASE("stiffly connected input is a fixpoint") {
    const auto out = stiffen(mesh, all_tets(mesh), all_tets(mesh));
    CHECK(out.size() == static_cast<size_t>(mesh.num_tets()));
  }
  SUBCASE("patches an edge-glued subset and stays a superset") {
    // Tets of two diagonally opposite cubes share only an edge: locally
    // non-stiff at the shared vertices until linking tets are added.
    std::vector<int> subset;
    for (int t = 0; t < mesh.num_tets(); ++t) {
      const Vec3 c = mesh.tet_centroid(t);
      const bool cube00 = c.x() < 1 && c.y() < 1;
      const bool cube11 = c.x() > 1 && c.y() > 1;
      if (cube00 || cube11) subset.push_back(t);
    }
    const auto out = stiffen(mesh, all_tets(mesh), subset);
    CHECK(out.size() > subset.size());
    for (int t : subset) CHECK(std::count(out.begin(), out.end(), t) == 1);

    // The patched sub-truss must be stiffly connected per component; here it
    // is a single component.
    std::set<int> vset;
    for (int t : out)
      for (int v : mesh.tets()[t].verts()) vset.insert(v);
    std::vector<int> vmap(mesh.num_vertices(), -1);
    int local = 0;
    std::vector<Vec3> pts;
    for (int v : vset) {
      vmap[v] = local++;
      pts.push_back(mesh.points()[v]);
    }
    std::vector<Tetrahedron> tets;
    for (int t : out) {
      const auto &src = mesh.tets()[t];
      tets.push_back({vmap[src.a], vmap[src.b], vmap[src.c], vmap[src.d]});
    }
    CHECK(is_stiffly_connected(TrussMesh(pts, tets)));
  }
}

TEST_CASE("hollow partition and structure") {
  SUBCASE("shallow mesh: single cell, hollowing still partitions") {
    const TrussMesh mesh = generate_grid_truss(2, 2, 2);
    const Hollowing h = hollow(mesh, 8.0);
    size_t interior_tets = 0;
    for (const auto &ic : h.interior_chunks) interior_tets += ic.tets.size();
    CHECK(h.tets.size() + interior_tets ==
          static_cast<size_t>(mesh.num_tets()));
  }
  SUBCASE("r too deep for a thin mesh is rejected") {
    CHECK_THROWS(hollow(generate_grid_truss(4, 4, 1), 27.0));
  }

  const TrussMesh mesh = generate_grid_truss(6, 6, 6);
  const Hollowing h = hollow(mesh, 27.0);

  SUBCASE("tets partition into hollowing and interior chunks") {
    std::vector<int> count(mesh.num_tets(), 0);
    for (int t : h.tets) ++count[t];
    for (const auto &ic : h.interior_chunks)
      for (int t : ic.tets) ++count[t];
    for (int t = 0; t < mesh.num_tets(); ++t) CHECK(count[t] == 1);
  }
  SUBCASE("interior vertices disjoint from U and from each other") {
    std::set<int> u(h.boundary_vertices.begin(), h.boundary_vertices.end());
    std::set<int> seen;
    for (const auto &ic : h.interior_chunks) {
      for (int v : ic.interior_vertices) {
        CHECK(u.count(v) == 0);
        CHECK(seen.insert(v).second);
      }
      for (int v : ic.contact_vertices) CHECK(u.count(v) == 1);
    }
    CHECK(!seen.empty());
  }
  SUBCASE("hollowing sub-truss is stiffly connected per component") {
    const auto metrics = verify_hollowing(mesh, all_tets(mesh), h);
    CHECK(metrics.point_count == static_cast<int>(h.boundary_vertices.size()));
    CHECK(metrics.hollow_tets == static_cast<int>(h.tets.size()));
  }
}

TEST_CASE("hollowing spectral guarantees on a 6x6x6 grid") {
  const TrussMesh mesh = generate_grid_truss(6, 6, 6);
  const Hollowing h = hollow(mesh, 27.0);
  const auto metrics = verify_hollowing(mesh, all_tets(mesh), h, 3, true);
  REQUIRE(metrics.min_generalized_eig.has_value());
  REQUIRE(metrics.kappa.has_value());
  CHECK(*metrics.min_generalized_eig >= 1.0 - 1e-8);
  CHECK(*metrics.kappa >= 1.0);
  CHECK(std::isfinite(*metrics.kappa));

  SUBCASE("probe planes cross fewer hollow tets than mesh tets") {
    for (size_t i = 0; i < metrics.plane_crossings.size(); ++i)
      CHECK(metrics.plane_crossings[i] <= metrics.plane_crossings_mesh[i]);
  }
}

TEST_CASE("hollow truss null space matches the Schur complement") {
  const TrussMesh mesh = generate_grid_truss(4, 4, 4);
  const Hollowing h = hollow(mesh, 16.0);
  REQUIRE(!h.interior_chunks.empty());
  const int nu = static_cast<int>(h.boundary_vertices.size());
  std::vector<int> vmap(mesh.num_vertices(), -1);
  for (int i = 0; i < nu; ++i) vmap[h.boundary_vertices[i]] = i;
  const Eigen::MatrixXd ah =
      assemble_subtruss(mesh, h.tets, vmap, nu).dense();
  CHECK(oracle::numerical_rank(ah) == 3 * nu - 6);

  const Eigen::MatrixXd a = assemble(mesh).dense();
  std::vector<int> keep;
  for (int v : h.boundary_vertices)
    for (int c = 0; c < 3; ++c) keep.push_back(3 * v + c);
  const Eigen::MatrixXd sc = oracle::dense_schur(a, keep);
  CHECK(oracle::numerical_rank(sc) == 3 * nu - 6);

  SUBCASE("Sc - A_H is positive semidefinite") {
    const auto eig = oracle::dense_eig(sc - ah);
    CHECK(eig.values(0) >= -1e-8 * sc.norm());
  }
}
