// dissect.hpp: elimination orderings: layered-graph nested dissection,
// direction picking and top-level plane separators for truss unions,
// recursive geometric separators, and symbolic fill-in/flop accounting.
#pragma once

#include <cstdint>
#include <vector>

#include "truss/hollow.hpp"
#include "truss/mesh.hpp"

namespace truss {

enum class NodeKind { kLeaf, kTopSeparator, kInternalSeparator };

struct SeparatorNode {
  NodeKind kind = NodeKind::kLeaf;
  int level = 0;
  std::vector<int> indices;  // vertices, in elimination order
};

struct EliminationOrdering {
  std::vector<int> order;  // vertices in elimination sequence
  std::vector<SeparatorNode> nodes;
  int glue_vertex_count = 0;
};

// Layered graph: disjoint vertex layers with edges only inside a layer or
// between adjacent layers.
struct LayeredGraph {
  std::vector<std::vector<int>> layers;
};

// Middle-layer-last recursive numbering. Returns vertices in elimination
// order (middle layers late).
std::vector<int> layered_graph_nd(const LayeredGraph &g);

// Unit vector d with 1/(10k) <= |d . d_i| <= 1 - 1/(10k) for every i, found
// by rejection sampling of uniform sphere directions. Throws
// std::runtime_error when the attempt budget (64 * ceil(log2(k+2)) draws)
// is exhausted.
Vec3 pick_direction(const std::vector<Vec3> &directions, uint64_t seed);

// Count-quantile plane cuts orthogonal to d: l planes, l+1 near-equal parts.
struct SeparatorPlanes {
  Vec3 direction;
  std::vector<double> offsets;       // ascending, size l
  std::vector<int> part_of_tet;      // 0..l per tet id passed in
};

SeparatorPlanes separator_planes(const TrussMesh &mesh,
                                 const std::vector<int> &tets, const Vec3 &d,
                                 int l);

// A sub-truss handed down the recursion: vertex subset plus the tets fully
// contained in it.
struct SubTruss {
  std::vector<int> verts;
  std::vector<int> tets;
};

struct SeparatorSplit {
  std::vector<int> separator;
  std::vector<int> part_a;
  std::vector<int> part_b;
};

// PCA-axis median-plane bisection choosing among the 3 axes the plane with
// fewest crossing tets; separator covers every edge crossing the cut.
SeparatorSplit geometric_separator(const TrussMesh &mesh, const SubTruss &sub);

struct NDConfig {
  int leaf_cutoff = 48;
  uint64_t seed = 0;
};

// Plain recursive geometric nested dissection over the whole mesh.
EliminationOrdering nested_dissection(const TrussMesh &mesh,
                                      const NDConfig &config = {});

// Algorithm for truss unions: a common direction, l top-level plane
// separators ordered last by layered ND, recursive geometric ND inside each
// slab. `boxes` holds one bounding box per chunk of the mesh (the whole mesh
// if it has no chunk partition). Vertices shared by several chunks are
// assigned to the nearest top separator layer.
EliminationOrdering convex_truss_union_nd(const TrussMesh &mesh,
                                          const std::vector<OrientedBox> &boxes,
                                          int l, const NDConfig &config = {});

// Symbolic block factorization on the vertex graph under `order`: per-column
// patterns (higher-numbered neighbors after fill), elimination-tree parents,
// and deterministic fill/flop counters. Shared by the fill simulator and the
// numeric factorization so their counters agree exactly.
struct SymbolicFactor {
  std::vector<int> order;              // copy of the elimination sequence
  std::vector<int> position;           // inverse permutation
  // patterns[j] lists permuted column j's below-diagonal rows (permuted
  // indices, ascending).
  std::vector<std::vector<int>> patterns;
  std::vector<int> parent;             // elimination tree, -1 at roots
  int64_t fill_blocks = 0;             // pattern blocks absent from the graph
  int64_t factor_blocks = 0;           // total below-diagonal pattern blocks
  int64_t fill_entries() const { return 9 * fill_blocks; }
  int64_t flops = 0;                   // 27 multiply-adds per 3x3 block op
};

SymbolicFactor symbolic_factor(const std::vector<std::vector<int>> &adjacency,
                               const std::vector<int> &order);

struct FillFlopResult {
  int64_t fill_blocks = 0;
  int64_t fill_entries = 0;
  int64_t flops = 0;
};

FillFlopResult fillin_flop_simulate(
    const std::vector<std::vector<int>> &adjacency,
    const std::vector<int> &order);

}  // namespace truss
