// mesh.hpp: 3-D truss meshes: construction, validation, generators,
// bounding boxes and stiff connectivity.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "truss/geometry.hpp"

namespace truss {

struct Tetrahedron {
  int a, b, c, d;
  std::array<int, 4> verts() const { return {a, b, c, d}; }
};

// Unordered vertex pair, stored with i < j.
struct Edge {
  int i, j;
  Edge(int u, int v) : i(std::min(u, v)), j(std::max(u, v)) {}
  bool operator<(const Edge &o) const {
    return i != o.i ? i < o.i : j < o.j;
  }
  bool operator==(const Edge &o) const { return i == o.i && j == o.j; }
};

// Weighted tetrahedral truss. Immutable after construction; the edge set and
// adjacency are derived from the tet list on construction.
class TrussMesh {
 public:
  TrussMesh(std::vector<Vec3> points, std::vector<Tetrahedron> tets,
            double default_gamma = 1.0);

  int num_vertices() const { return static_cast<int>(points_.size()); }
  int num_tets() const { return static_cast<int>(tets_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }

  const std::vector<Vec3> &points() const { return points_; }
  const std::vector<Tetrahedron> &tets() const { return tets_; }
  // Sorted; index into this vector is the canonical edge id.
  const std::vector<Edge> &edges() const { return edges_; }
  const std::vector<double> &gamma() const { return gamma_; }

  void set_gamma(const Edge &e, double value);
  double gamma_of(const Edge &e) const;
  int edge_id(const Edge &e) const;  // -1 when absent

  std::array<Vec3, 4> tet_points(int t) const;
  Vec3 tet_centroid(int t) const;
  double edge_length(const Edge &e) const;

  // Maximum pairwise vertex distance.
  double diameter() const;

  // Tet indices incident to each vertex.
  const std::vector<std::vector<int>> &vertex_tets() const {
    return vertex_tets_;
  }
  // Vertex adjacency over the edge set.
  const std::vector<std::vector<int>> &vertex_adjacency() const {
    return vertex_adj_;
  }

  // Optional partition of tets into k convex pieces.
  const std::vector<std::vector<int>> &chunks() const { return chunks_; }
  void set_chunks(std::vector<std::vector<int>> chunks);

 private:
  std::vector<Vec3> points_;
  std::vector<Tetrahedron> tets_;
  std::vector<Edge> edges_;
  std::vector<double> gamma_;
  std::map<Edge, int> edge_index_;
  std::vector<std::vector<int>> vertex_tets_;
  std::vector<std::vector<int>> vertex_adj_;
  std::vector<std::vector<int>> chunks_;
};

// The 6 vertex pairs of every tet, deduplicated and sorted.
std::vector<Edge> edges_from_tets(const std::vector<Tetrahedron> &tets,
                                  int num_vertices);

struct ValidationLimits {
  double ar_max = 8.0;
  double len_min = 0.5;
  double len_max = 2.0;
  double g_min = 0.5;
  double g_max = 2.0;
  double geom_eps = kGeomEps;
};

struct ValidationReport {
  bool simplicial_complex = true;
  bool aspect_ratios_ok = true;
  bool edge_lengths_ok = true;
  bool gamma_ok = true;
  std::vector<std::string> violations;
  bool ok() const {
    return simplicial_complex && aspect_ratios_ok && edge_lengths_ok &&
           gamma_ok;
  }
};

ValidationReport validate_edge_simple(const TrussMesh &mesh,
                                      const ValidationLimits &limits = {});

// Tet-level graph: nodes are tets, edges join tets sharing a triangle face.
struct RigidityGraph {
  std::vector<std::vector<int>> adj;  // one list per tet
};

RigidityGraph rigidity_graph(const TrussMesh &mesh);

// Rigidity graph connected globally and, for every vertex, locally on the
// tets containing it.
bool is_stiffly_connected(const TrussMesh &mesh);

struct OrientedBox {
  Vec3 center = Vec3::Zero();
  std::array<Vec3, 3> axes;      // orthonormal, matched to half_lengths
  std::array<double, 3> half_lengths;  // sorted descending

  double aspect_ratio() const { return half_lengths[0] / half_lengths[2]; }
  bool contains(const Vec3 &p, double eps = 1e-9) const;
};

// PCA-aligned bounding box of a point cloud.
OrientedBox bounding_box(const std::vector<Vec3> &points);
OrientedBox bounding_box(const TrussMesh &mesh,
                         const std::vector<int> &tet_subset);
OrientedBox bounding_box(const TrussMesh &mesh);

// nx x ny x nz box of unit cubes, each split into 5 tets with alternating
// parity so adjacent cubes share faces exactly.
TrussMesh generate_grid_truss(int nx, int ny, int nz, double gamma = 1.0);

struct ChunkSpec {
  int nx, ny, nz;
  Eigen::Vector3i offset = Eigen::Vector3i::Zero();  // integer placement
};

// Union of grid-truss chunks glued on exactly coincident vertices. The
// resulting mesh records the chunk partition.
TrussMesh generate_union(const std::vector<ChunkSpec> &specs,
                         double gamma = 1.0);

}  // namespace truss
