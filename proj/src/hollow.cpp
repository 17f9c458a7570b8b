#include "truss/hollow.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <set>
#include <stdexcept>

#include "truss/oracle.hpp"
#include "truss/stiffness.hpp"

namespace truss {

int RDivision::cell_of(const Vec3 &p) const {
  int id = 0;
  for (int axis = 0; axis < 3; ++axis) {
    const double coord = (p - box.center).dot(box.axes[axis]);
    const auto &c = cuts[axis];
    int idx = static_cast<int>(std::upper_bound(c.begin(), c.end(), coord) -
                               c.begin());
    id = id * cells_per_axis[axis] + idx;
  }
  return id;
}

RDivision r_division(const OrientedBox &box, double r) {
  if (r < 8.0) throw std::invalid_argument("r must be at least 8");
  const double h = std::cbrt(r);
  if (2.0 * box.half_lengths[2] < h)
    throw std::invalid_argument("r too large for box (shortest side < r^{1/3})");

  RDivision div;
  div.box = box;
  div.spacing_target = h;
  for (int axis = 0; axis < 3; ++axis) {
    const double side = 2.0 * box.half_lengths[axis];
    const int cells = std::max(1, static_cast<int>(std::ceil(side / h)));
    div.cells_per_axis[axis] = cells;
    const double spacing = side / cells;
    for (int k = 1; k < cells; ++k)
      div.cuts[axis].push_back(-box.half_lengths[axis] + spacing * k);
  }
  return div;
}

namespace {

// Does the tet straddle (or touch within eps) any r-division plane?
bool tet_hits_plane(const std::array<Vec3, 4> &pts, const RDivision &div,
                    double eps) {
  for (int axis = 0; axis < 3; ++axis) {
    double lo = 0.0, hi = 0.0;
    for (int i = 0; i < 4; ++i) {
      const double c = (pts[i] - div.box.center).dot(div.box.axes[axis]);
      if (i == 0) {
        lo = hi = c;
      } else {
        lo = std::min(lo, c);
        hi = std::max(hi, c);
      }
    }
    for (double cut : div.cuts[axis])
      if (lo <= cut + eps && hi >= cut - eps) return true;
  }
  return false;
}

// Rigidity adjacency restricted to a tet subset (face sharing).
std::vector<std::vector<int>> subset_rigidity(const TrussMesh &mesh,
                                              const std::vector<int> &tets) {
  std::map<std::array<int, 3>, std::vector<int>> face_tets;
  for (int t : tets) {
    auto v = mesh.tets()[t].verts();
    std::sort(v.begin(), v.end());
    static const int faces[4][3] = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
    for (const auto &f : faces)
      face_tets[{v[f[0]], v[f[1]], v[f[2]]}].push_back(t);
  }
  std::vector<std::vector<int>> adj(mesh.num_tets());
  for (const auto &[face, owners] : face_tets)
    for (size_t i = 0; i < owners.size(); ++i)
      for (size_t j = i + 1; j < owners.size(); ++j) {
        adj[owners[i]].push_back(owners[j]);
        adj[owners[j]].push_back(owners[i]);
      }
  return adj;
}

}  // namespace

std::vector<int> boundary_tets(const TrussMesh &mesh,
                               const std::vector<int> &chunk_tets) {
  std::map<std::array<int, 3>, int> face_count;
  for (int t : chunk_tets) {
    auto v = mesh.tets()[t].verts();
    std::sort(v.begin(), v.end());
    static const int faces[4][3] = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
    for (const auto &f : faces) ++face_count[{v[f[0]], v[f[1]], v[f[2]]}];
  }
  std::vector<int> result;
  for (int t : chunk_tets) {
    auto v = mesh.tets()[t].verts();
    std::sort(v.begin(), v.end());
    static const int faces[4][3] = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
    for (const auto &f : faces)
      if (face_count[{v[f[0]], v[f[1]], v[f[2]]}] == 1) {
        result.push_back(t);
        break;
      }
  }
  return result;
}

std::vector<int> stiffen(const TrussMesh &mesh,
                         const std::vector<int> &chunk_tets,
                         const std::vector<int> &subset) {
  if (subset.empty()) throw std::invalid_argument("empty subset");
  // Full-chunk rigidity adjacency; paths are searched inside the chunk only.
  const auto adj = subset_rigidity(mesh, chunk_tets);
  std::vector<char> in_chunk(mesh.num_tets(), 0);
  for (int t : chunk_tets) in_chunk[t] = 1;
  std::vector<char> in_h(mesh.num_tets(), 0);
  for (int t : subset) {
    if (!in_chunk[t]) throw std::invalid_argument("subset tet outside chunk");
    in_h[t] = 1;
  }

  // Per-vertex local fix: if the H-tets around a vertex fall into several
  // rigidity components, connect them through chunk tets containing that
  // vertex. Iterate to a fixpoint; every added tet only shrinks the number
  // of (vertex, component) deficiencies.
  bool changed = true;
  while (changed) {
    changed = false;
    for (int v = 0; v < mesh.num_vertices(); ++v) {
      std::vector<int> local_h;
      std::vector<int> local_all;
      for (int t : mesh.vertex_tets()[v]) {
        if (!in_chunk[t]) continue;
        local_all.push_back(t);
        if (in_h[t]) local_h.push_back(t);
      }
      if (local_h.size() < 2) continue;

      // Components of local_h under rigidity adjacency restricted to
      // H-tets containing v.
      std::set<int> local_h_set(local_h.begin(), local_h.end());
      std::map<int, int> comp;
      int ncomp = 0;
      for (int start : local_h) {
        if (comp.count(start)) continue;
        std::queue<int> q;
        q.push(start);
        comp[start] = ncomp;
        while (!q.empty()) {
          const int u = q.front();
          q.pop();
          for (int w : adj[u])
            if (local_h_set.count(w) && !comp.count(w)) {
              comp[w] = ncomp;
              q.push(w);
            }
        }
        ++ncomp;
      }
      if (ncomp <= 1) continue;

      // BFS from component 0 through non-H chunk tets containing v until a
      // different component is reached; add the connecting path to H.
      std::set<int> local_all_set(local_all.begin(), local_all.end());
      std::map<int, int> parent;
      std::queue<int> q;
      for (int t : local_h)
        if (comp[t] == 0) {
          q.push(t);
          parent[t] = -1;
        }
      int found = -1;
      while (!q.empty() && found < 0) {
        const int u = q.front();
        q.pop();
        for (int w : adj[u]) {
          if (!local_all_set.count(w) || parent.count(w)) continue;
          parent[w] = u;
          if (local_h_set.count(w) && comp[w] != 0) {
            found = w;
            break;
          }
          q.push(w);
        }
      }
      if (found < 0) continue;  // locally disconnected in the full chunk too
      for (int u = parent[found]; u >= 0 && !in_h[u]; u = parent[u]) {
        in_h[u] = 1;
        changed = true;
      }
    }
  }

  std::vector<int> result;
  for (int t : chunk_tets)
    if (in_h[t]) result.push_back(t);
  return result;
}

namespace {

// Move each cut to the midpoint of the gap between the nearest distinct
// vertex projections, so planes never coincide with mesh vertex layers
// (which would sweep tets on both sides into the hollowing).
void snap_cuts(RDivision &div, const TrussMesh &mesh,
               const std::vector<int> &chunk_tets) {
  std::set<int> verts;
  for (int t : chunk_tets)
    for (int v : mesh.tets()[t].verts()) verts.insert(v);
  for (int axis = 0; axis < 3; ++axis) {
    std::vector<double> proj;
    proj.reserve(verts.size());
    for (int v : verts)
      proj.push_back((mesh.points()[v] - div.box.center).dot(div.box.axes[axis]));
    std::sort(proj.begin(), proj.end());
    std::vector<double> uniq;
    for (double p : proj)
      if (uniq.empty() || p - uniq.back() > 1e-9) uniq.push_back(p);
    if (uniq.size() < 2) continue;
    for (double &cut : div.cuts[axis]) {
      auto it = std::upper_bound(uniq.begin(), uniq.end(), cut + 1e-9);
      if (it == uniq.begin() || it == uniq.end()) continue;
      cut = 0.5 * (*(it - 1) + *it);
    }
  }
}

}  // namespace

Hollowing hollow(const TrussMesh &mesh, const std::vector<int> &chunk_tets,
                 const OrientedBox &box, double r) {
  Hollowing h;
  h.r = r;
  h.box = box;
  RDivision div = r_division(box, r);
  snap_cuts(div, mesh, chunk_tets);

  std::vector<char> in_h(mesh.num_tets(), 0);
  for (int t : chunk_tets)
    if (tet_hits_plane(mesh.tet_points(t), div, kGeomEps)) in_h[t] = 1;
  for (int t : boundary_tets(mesh, chunk_tets)) in_h[t] = 1;

  std::vector<int> base;
  for (int t : chunk_tets)
    if (in_h[t]) base.push_back(t);
  const int before = static_cast<int>(base.size());
  h.tets = stiffen(mesh, chunk_tets, base);
  h.stiffening_tets_added = static_cast<int>(h.tets.size()) - before;
  for (int t : h.tets) in_h[t] = 1;

  std::set<int> u_set;
  for (int t : h.tets)
    for (int v : mesh.tets()[t].verts()) u_set.insert(v);
  h.boundary_vertices.assign(u_set.begin(), u_set.end());

  // Interior chunks: remaining tets grouped per r-division cell, then by
  // vertex-sharing connectivity within the cell.
  std::vector<int> remaining;
  for (int t : chunk_tets)
    if (!in_h[t]) remaining.push_back(t);

  std::map<int, std::vector<int>> by_cell;
  for (int t : remaining) by_cell[div.cell_of(mesh.tet_centroid(t))].push_back(t);

  std::vector<char> seen(mesh.num_tets(), 0);
  for (const auto &[cell, tets] : by_cell) {
    std::set<int> cell_set(tets.begin(), tets.end());
    // vertex -> cell tets containing it
    std::map<int, std::vector<int>> vert_tets;
    for (int t : tets)
      for (int v : mesh.tets()[t].verts()) vert_tets[v].push_back(t);
    for (int start : tets) {
      if (seen[start]) continue;
      InteriorChunk chunk;
      chunk.cell = cell;
      std::queue<int> q;
      q.push(start);
      seen[start] = 1;
      while (!q.empty()) {
        const int t = q.front();
        q.pop();
        chunk.tets.push_back(t);
        for (int v : mesh.tets()[t].verts())
          for (int w : vert_tets[v])
            if (!seen[w]) {
              seen[w] = 1;
              q.push(w);
            }
      }
      std::set<int> interior, contact;
      for (int t : chunk.tets)
        for (int v : mesh.tets()[t].verts()) {
          if (u_set.count(v))
            contact.insert(v);
          else
            interior.insert(v);
        }
      chunk.interior_vertices.assign(interior.begin(), interior.end());
      chunk.contact_vertices.assign(contact.begin(), contact.end());
      std::sort(chunk.tets.begin(), chunk.tets.end());
      h.interior_chunks.push_back(std::move(chunk));
    }
  }
  return h;
}

Hollowing hollow(const TrussMesh &mesh, double r) {
  std::vector<int> all(mesh.num_tets());
  for (int t = 0; t < mesh.num_tets(); ++t) all[t] = t;
  return hollow(mesh, all, bounding_box(mesh), r);
}

namespace {

int count_plane_crossings(const TrussMesh &mesh, const std::vector<int> &tets,
                          const Vec3 &normal, double offset) {
  int count = 0;
  for (int t : tets) {
    const auto p = mesh.tet_points(t);
    double lo = p[0].dot(normal), hi = lo;
    for (int i = 1; i < 4; ++i) {
      const double c = p[i].dot(normal);
      lo = std::min(lo, c);
      hi = std::max(hi, c);
    }
    if (lo <= offset && hi >= offset) ++count;
  }
  return count;
}

}  // namespace

HollowMetrics verify_hollowing(const TrussMesh &mesh,
                               const std::vector<int> &chunk_tets,
                               const Hollowing &h, int probe_planes,
                               bool with_oracle) {
  HollowMetrics m;
  m.point_count = static_cast<int>(h.boundary_vertices.size());
  m.hollow_tets = static_cast<int>(h.tets.size());
  m.num_interior_chunks = static_cast<int>(h.interior_chunks.size());
  for (const auto &c : h.interior_chunks) {
    m.max_chunk_vertices = std::max(
        m.max_chunk_vertices, static_cast<int>(c.interior_vertices.size()));
    m.max_chunk_contacts = std::max(
        m.max_chunk_contacts, static_cast<int>(c.contact_vertices.size()));
  }

  // Probe planes through the box center, normals tilted away from the long
  // axis by evenly spaced angles.
  for (int p = 0; p < probe_planes; ++p) {
    const double theta =
        (p + 1) * (M_PI / 2.0) / (probe_planes + 1);  // in (0, pi/2)
    const Vec3 normal = (std::cos(theta) * h.box.axes[0] +
                         std::sin(theta) * h.box.axes[1])
                            .normalized();
    const double offset = h.box.center.dot(normal);
    m.plane_crossings.push_back(
        count_plane_crossings(mesh, h.tets, normal, offset));
    m.plane_crossings_mesh.push_back(
        count_plane_crossings(mesh, chunk_tets, normal, offset));
  }

  if (with_oracle) {
    // Local vertex numbering over the chunk; U first is unnecessary since
    // dense_schur takes explicit keep indices.
    std::set<int> chunk_verts;
    for (int t : chunk_tets)
      for (int v : mesh.tets()[t].verts()) chunk_verts.insert(v);
    std::vector<int> local_of(mesh.num_vertices(), -1);
    int local_n = 0;
    for (int v : chunk_verts) local_of[v] = local_n++;

    const StiffnessMatrix a_chunk =
        assemble_subtruss(mesh, chunk_tets, local_of, local_n);
    std::vector<int> keep;
    for (int v : h.boundary_vertices)
      for (int c = 0; c < 3; ++c) keep.push_back(3 * local_of[v] + c);

    const Eigen::MatrixXd sc = oracle::dense_schur(a_chunk.dense(), keep);

    // A_H on the same U index order.
    std::vector<int> u_local(mesh.num_vertices(), -1);
    int u_n = 0;
    for (int v : h.boundary_vertices) u_local[v] = u_n++;
    const StiffnessMatrix a_h =
        assemble_subtruss(mesh, h.tets, u_local, u_n);

    const auto pencil = oracle::generalized_condition(sc, a_h.dense());
    m.kappa = pencil.kappa();
    m.min_generalized_eig = pencil.lambda_min;
  }
  return m;
}

}  // namespace truss
