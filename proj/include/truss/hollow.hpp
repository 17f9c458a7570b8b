// hollow.hpp: (B,r)-hollowing of a convex edge-simple chunk: r-division
// planes, boundary tets, greedy stiffening, interior chunk extraction.
#pragma once

#include <optional>
#include <vector>

#include "truss/mesh.hpp"

namespace truss {

// Cut positions along each box axis, spacing ~ r^(1/3).
struct RDivision {
  OrientedBox box;
  double spacing_target = 0.0;               // r^(1/3)
  std::array<std::vector<double>, 3> cuts;   // interior plane offsets
  std::array<int, 3> cells_per_axis{1, 1, 1};

  // Cell id of a point (projected onto box axes).
  int cell_of(const Vec3 &p) const;
  int num_cells() const {
    return cells_per_axis[0] * cells_per_axis[1] * cells_per_axis[2];
  }
};

RDivision r_division(const OrientedBox &box, double r);

struct InteriorChunk {
  std::vector<int> tets;
  std::vector<int> interior_vertices;  // disjoint from U
  std::vector<int> contact_vertices;   // subset of U
  int cell = -1;
};

struct Hollowing {
  std::vector<int> tets;                // the hollowing H
  std::vector<int> boundary_vertices;   // U: every vertex touched by H
  std::vector<InteriorChunk> interior_chunks;
  double r = 0.0;
  OrientedBox box;
  int stiffening_tets_added = 0;
};

// Tets owning at least one triangle face not shared with another tet of the
// chunk.
std::vector<int> boundary_tets(const TrussMesh &mesh,
                               const std::vector<int> &chunk_tets);

// Grow `subset` until every vertex-connected component of the induced
// sub-truss is stiffly connected. Greedy BFS patches along rigidity-graph
// shortest paths.
std::vector<int> stiffen(const TrussMesh &mesh,
                         const std::vector<int> &chunk_tets,
                         const std::vector<int> &subset);

Hollowing hollow(const TrussMesh &mesh, const std::vector<int> &chunk_tets,
                 const OrientedBox &box, double r);

// Convenience overload for a single-chunk mesh.
Hollowing hollow(const TrussMesh &mesh, double r);

struct HollowMetrics {
  int point_count = 0;    // |U|
  int hollow_tets = 0;
  int max_chunk_vertices = 0;
  int max_chunk_contacts = 0;
  int num_interior_chunks = 0;
  std::vector<int> plane_crossings;        // per probe plane, tets of H hit
  std::vector<int> plane_crossings_mesh;   // same planes against the chunk
  std::optional<double> kappa;             // oracle pencil, small chunks only
  std::optional<double> min_generalized_eig;
};

// Measures hollowing size/crossing/condition metrics. When with_oracle is
// set (and the chunk is desk-scale) the generalized condition number of
// (Sc[A_chunk]_U, A_H) is computed densely.
HollowMetrics verify_hollowing(const TrussMesh &mesh,
                               const std::vector<int> &chunk_tets,
                               const Hollowing &h, int probe_planes = 0,
                               bool with_oracle = false);

}  // namespace truss
