#include "truss/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace truss {

std::vector<Edge> edges_from_tets(const std::vector<Tetrahedron> &tets,
                                  int num_vertices) {
  if (tets.empty()) throw std::invalid_argument("empty tet list");
  std::set<Edge> uniq;
  for (const auto &t : tets) {
    const auto v = t.verts();
    for (int x : v)
      if (x < 0 || x >= num_vertices)
        throw std::out_of_range("tet vertex index out of range");
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) {
        if (v[i] == v[j]) throw std::invalid_argument("repeated tet vertex");
        uniq.insert(Edge(v[i], v[j]));
      }
  }
  return {uniq.begin(), uniq.end()};
}

TrussMesh::TrussMesh(std::vector<Vec3> points, std::vector<Tetrahedron> tets,
                     double default_gamma)
    : points_(std::move(points)), tets_(std::move(tets)) {
  edges_ = edges_from_tets(tets_, num_vertices());
  gamma_.assign(edges_.size(), default_gamma);
  for (int e = 0; e < num_edges(); ++e) edge_index_[edges_[e]] = e;

  vertex_tets_.resize(points_.size());
  for (int t = 0; t < num_tets(); ++t)
    for (int v : tets_[t].verts()) vertex_tets_[v].push_back(t);

  vertex_adj_.resize(points_.size());
  for (const auto &e : edges_) {
    vertex_adj_[e.i].push_back(e.j);
    vertex_adj_[e.j].push_back(e.i);
  }
}

void TrussMesh::set_gamma(const Edge &e, double value) {
  const int id = edge_id(e);
  if (id < 0) throw std::invalid_argument("edge not in mesh");
  gamma_[id] = value;
}

double TrussMesh::gamma_of(const Edge &e) const {
  const int id = edge_id(e);
  if (id < 0) throw std::invalid_argument("edge not in mesh");
  return gamma_[id];
}

int TrussMesh::edge_id(const Edge &e) const {
  auto it = edge_index_.find(e);
  return it == edge_index_.end() ? -1 : it->second;
}

std::array<Vec3, 4> TrussMesh::tet_points(int t) const {
  const auto &tet = tets_[t];
  return {points_[tet.a], points_[tet.b], points_[tet.c], points_[tet.d]};
}

Vec3 TrussMesh::tet_centroid(int t) const {
  const auto p = tet_points(t);
  return 0.25 * (p[0] + p[1] + p[2] + p[3]);
}

double TrussMesh::edge_length(const Edge &e) const {
  return (points_[e.i] - points_[e.j]).norm();
}

double TrussMesh::diameter() const {
  // Exact over the bounding-box corner candidates would undercount; for
  // desk-scale meshes the quadratic scan is fine below ~2k vertices, above
  // that use the PCA box diagonal as a tight proxy.
  const int n = num_vertices();
  if (n <= 2000) {
    double d = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        d = std::max(d, (points_[i] - points_[j]).norm());
    return d;
  }
  const OrientedBox box = bounding_box(points_);
  const Vec3 h(box.half_lengths[0], box.half_lengths[1], box.half_lengths[2]);
  return 2.0 * h.norm();
}

void TrussMesh::set_chunks(std::vector<std::vector<int>> chunks) {
  std::vector<char> seen(num_tets(), 0);
  for (const auto &c : chunks)
    for (int t : c) {
      if (t < 0 || t >= num_tets() || seen[t])
        throw std::invalid_argument("chunks is not a partition of tets");
      seen[t] = 1;
    }
  for (char s : seen)
    if (!s) throw std::invalid_argument("chunks is not a partition of tets");
  chunks_ = std::move(chunks);
}

namespace {

int shared_vertex_count(const Tetrahedron &t1, const Tetrahedron &t2) {
  int count = 0;
  for (int u : t1.verts())
    for (int v : t2.verts())
      if (u == v) ++count;
  return count;
}

// Uniform spatial grid over tet centroids; cell size tracks the largest tet
// so all geometrically-near pairs land in neighboring cells.
struct TetGrid {
  double cell;
  Vec3 origin;
  std::unordered_map<int64_t, std::vector<int>> cells;

  static int64_t key(int x, int y, int z) {
    return (static_cast<int64_t>(x) << 42) ^ (static_cast<int64_t>(y) << 21) ^
           static_cast<int64_t>(z);
  }

  explicit TetGrid(const TrussMesh &mesh) {
    double max_diam = 0.0;
    Vec3 lo = mesh.points()[0];
    for (const auto &p : mesh.points()) lo = lo.cwiseMin(p);
    origin = lo;
    for (int t = 0; t < mesh.num_tets(); ++t) {
      const auto p = mesh.tet_points(t);
      for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
          max_diam = std::max(max_diam, (p[i] - p[j]).norm());
    }
    cell = std::max(max_diam, 1e-6);
    for (int t = 0; t < mesh.num_tets(); ++t) {
      const Vec3 c = (mesh.tet_centroid(t) - origin) / cell;
      cells[key(static_cast<int>(c.x()), static_cast<int>(c.y()),
                static_cast<int>(c.z()))]
          .push_back(t);
    }
  }

  template <typename Fn>
  void for_near_pairs(const TrussMesh &mesh, Fn &&fn) const {
    for (int t = 0; t < mesh.num_tets(); ++t) {
      const Vec3 c = (mesh.tet_centroid(t) - origin) / cell;
      const int cx = static_cast<int>(c.x()), cy = static_cast<int>(c.y()),
                cz = static_cast<int>(c.z());
      for (int dx = -1; dx <= 1; ++dx)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dz = -1; dz <= 1; ++dz) {
            auto it = cells.find(key(cx + dx, cy + dy, cz + dz));
            if (it == cells.end()) continue;
            for (int other : it->second)
              if (other > t) fn(t, other);
          }
    }
  }
};

}  // namespace

ValidationReport validate_edge_simple(const TrussMesh &mesh,
                                      const ValidationLimits &limits) {
  ValidationReport report;
  auto flag = [&](bool &field, const std::string &msg) {
    field = false;
    report.violations.push_back(msg);
  };

  for (int i = 0; i < mesh.num_vertices(); ++i)
    for (int j : mesh.vertex_adjacency()[i]) {
      if (j > i &&
          (mesh.points()[i] - mesh.points()[j]).norm() < limits.geom_eps) {
        flag(report.simplicial_complex,
             "coincident vertices " + std::to_string(i) + "," +
                 std::to_string(j));
      }
    }

  for (int t = 0; t < mesh.num_tets(); ++t) {
    const auto p = mesh.tet_points(t);
    try {
      const double ar = tet_aspect_ratio(p[0], p[1], p[2], p[3]);
      if (ar > limits.ar_max)
        flag(report.aspect_ratios_ok,
             "tet " + std::to_string(t) + " aspect ratio " +
                 std::to_string(ar));
    } catch (const std::invalid_argument &) {
      flag(report.aspect_ratios_ok, "tet " + std::to_string(t) + " degenerate");
    }
  }

  for (int e = 0; e < mesh.num_edges(); ++e) {
    const double len = mesh.edge_length(mesh.edges()[e]);
    if (len < limits.len_min || len > limits.len_max)
      flag(report.edge_lengths_ok,
           "edge " + std::to_string(e) + " length " + std::to_string(len));
    const double g = mesh.gamma()[e];
    if (g < limits.g_min || g > limits.g_max)
      flag(report.gamma_ok,
           "edge " + std::to_string(e) + " gamma " + std::to_string(g));
  }

  // Simplicial-complex property: combinatorial shared-vertex classes plus a
  // geometric non-penetration check on geometrically close pairs.
  const TetGrid grid(mesh);
  grid.for_near_pairs(mesh, [&](int t1, int t2) {
    const int shared = shared_vertex_count(mesh.tets()[t1], mesh.tets()[t2]);
    if (shared == 4) {
      flag(report.simplicial_complex,
           "duplicate tets " + std::to_string(t1) + "," + std::to_string(t2));
      return;
    }
    if (tets_interpenetrate(mesh.tet_points(t1), mesh.tet_points(t2),
                            limits.geom_eps)) {
      flag(report.simplicial_complex,
           "tets " + std::to_string(t1) + "," + std::to_string(t2) +
               " interpenetrate");
    }
  });

  return report;
}

RigidityGraph rigidity_graph(const TrussMesh &mesh) {
  RigidityGraph g;
  g.adj.resize(mesh.num_tets());
  std::map<std::array<int, 3>, std::vector<int>> face_tets;
  for (int t = 0; t < mesh.num_tets(); ++t) {
    auto v = mesh.tets()[t].verts();
    std::sort(v.begin(), v.end());
    static const int faces[4][3] = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
    for (const auto &f : faces)
      face_tets[{v[f[0]], v[f[1]], v[f[2]]}].push_back(t);
  }
  for (const auto &[face, tets] : face_tets) {
    for (size_t i = 0; i < tets.size(); ++i)
      for (size_t j = i + 1; j < tets.size(); ++j) {
        g.adj[tets[i]].push_back(tets[j]);
        g.adj[tets[j]].push_back(tets[i]);
      }
  }
  return g;
}

namespace {

// Connectivity of `nodes` under adjacency `adj` restricted to `in_set`.
bool connected_subset(const std::vector<int> &nodes,
                      const std::vector<std::vector<int>> &adj,
                      const std::vector<char> &in_set) {
  if (nodes.empty()) return true;
  std::vector<char> visited(in_set.size(), 0);
  std::queue<int> q;
  q.push(nodes[0]);
  visited[nodes[0]] = 1;
  int reached = 0;
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    ++reached;
    for (int v : adj[u])
      if (in_set[v] && !visited[v]) {
        visited[v] = 1;
        q.push(v);
      }
  }
  return reached == static_cast<int>(nodes.size());
}

}  // namespace

bool is_stiffly_connected(const TrussMesh &mesh) {
  const RigidityGraph g = rigidity_graph(mesh);
  std::vector<char> all(mesh.num_tets(), 1);
  std::vector<int> all_tets(mesh.num_tets());
  for (int t = 0; t < mesh.num_tets(); ++t) all_tets[t] = t;
  if (!connected_subset(all_tets, g.adj, all)) return false;

  for (int v = 0; v < mesh.num_vertices(); ++v) {
    const auto &local = mesh.vertex_tets()[v];
    if (local.empty()) return false;  // isolated vertex
    std::vector<char> in_set(mesh.num_tets(), 0);
    for (int t : local) in_set[t] = 1;
    if (!connected_subset(local, g.adj, in_set)) return false;
  }
  return true;
}

bool OrientedBox::contains(const Vec3 &p, double eps) const {
  const Vec3 d = p - center;
  for (int i = 0; i < 3; ++i)
    if (std::abs(d.dot(axes[i])) > half_lengths[i] + eps) return false;
  return true;
}

namespace {

OrientedBox box_from_axes(const std::vector<Vec3> &points, const Vec3 &mean,
                          const std::array<Vec3, 3> &axes) {
  std::array<double, 3> lo{}, hi{};
  for (int i = 0; i < 3; ++i) {
    lo[i] = hi[i] = (points[0] - mean).dot(axes[i]);
  }
  for (const auto &p : points) {
    for (int i = 0; i < 3; ++i) {
      const double v = (p - mean).dot(axes[i]);
      lo[i] = std::min(lo[i], v);
      hi[i] = std::max(hi[i], v);
    }
  }

  OrientedBox box;
  std::array<int, 3> order{0, 1, 2};
  std::array<double, 3> half{};
  for (int i = 0; i < 3; ++i) half[i] = 0.5 * (hi[i] - lo[i]);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return half[a] > half[b]; });
  box.center = mean;
  for (int i = 0; i < 3; ++i) {
    const int k = order[i];
    box.axes[i] = axes[k];
    box.half_lengths[i] = std::max(half[k], kVolEps);
    box.center += axes[k] * 0.5 * (hi[k] + lo[k]);
  }
  return box;
}

}  // namespace

OrientedBox bounding_box(const std::vector<Vec3> &points) {
  if (points.size() < 4) throw std::invalid_argument("need at least 4 points");
  Vec3 mean = Vec3::Zero();
  for (const auto &p : points) mean += p;
  mean /= static_cast<double>(points.size());

  Mat3 cov = Mat3::Zero();
  for (const auto &p : points) {
    const Vec3 d = p - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("PCA eigensolve failed");

  std::array<Vec3, 3> pca_axes;
  for (int i = 0; i < 3; ++i) pca_axes[i] = eig.eigenvectors().col(i);
  const std::array<Vec3, 3> canon{Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};

  // For near-isotropic clouds the PCA axes are arbitrary rotations; keep
  // whichever frame yields the tighter box, preferring the canonical one.
  const OrientedBox pca_box = box_from_axes(points, mean, pca_axes);
  const OrientedBox canon_box = box_from_axes(points, mean, canon);
  auto volume = [](const OrientedBox &b) {
    return b.half_lengths[0] * b.half_lengths[1] * b.half_lengths[2];
  };
  const OrientedBox box =
      volume(pca_box) < (1.0 - 1e-9) * volume(canon_box) ? pca_box : canon_box;

  const double degenerate = kVolEps * std::max(box.half_lengths[0], 1.0);
  if (box.half_lengths[2] <= degenerate)
    throw std::invalid_argument("degenerate (flat) point set");
  return box;
}

OrientedBox bounding_box(const TrussMesh &mesh,
                         const std::vector<int> &tet_subset) {
  std::set<int> verts;
  for (int t : tet_subset)
    for (int v : mesh.tets()[t].verts()) verts.insert(v);
  std::vector<Vec3> pts;
  pts.reserve(verts.size());
  for (int v : verts) pts.push_back(mesh.points()[v]);
  return bounding_box(pts);
}

OrientedBox bounding_box(const TrussMesh &mesh) {
  return bounding_box(mesh.points());
}

namespace {

// 5-tet decomposition of the unit cube; corner bit order (x, y, z). Parity 0
// cuts off corners 100, 010, 001, 111; parity 1 mirrors so adjacent cubes
// share face diagonals.
const int kCubeTets[2][5][4] = {
    {{4, 0, 6, 5}, {2, 0, 6, 3}, {1, 0, 5, 3}, {7, 6, 5, 3}, {0, 6, 5, 3}},
    {{0, 4, 2, 1}, {6, 4, 2, 7}, {5, 4, 1, 7}, {3, 2, 1, 7}, {4, 2, 1, 7}},
};

}  // namespace

namespace {

// Parity is taken on global lattice coordinates so glued chunks carry
// matching face diagonals.
void make_grid(int nx, int ny, int nz, int parity_base,
               std::vector<Vec3> &points, std::vector<Tetrahedron> &tets) {
  if (nx < 1 || ny < 1 || nz < 1)
    throw std::invalid_argument("grid dimensions must be >= 1");
  auto vid = [&](int x, int y, int z) {
    return (x * (ny + 1) + y) * (nz + 1) + z;
  };
  points.clear();
  points.reserve((nx + 1) * (ny + 1) * (nz + 1));
  for (int x = 0; x <= nx; ++x)
    for (int y = 0; y <= ny; ++y)
      for (int z = 0; z <= nz; ++z) points.emplace_back(x, y, z);

  tets.clear();
  tets.reserve(5 * nx * ny * nz);
  for (int x = 0; x < nx; ++x)
    for (int y = 0; y < ny; ++y)
      for (int z = 0; z < nz; ++z) {
        int corner[8];
        for (int b = 0; b < 8; ++b)
          corner[b] = vid(x + ((b >> 2) & 1), y + ((b >> 1) & 1), z + (b & 1));
        const int parity = (x + y + z + parity_base) & 1;
        for (const auto &t : kCubeTets[parity])
          tets.push_back(
              {corner[t[0]], corner[t[1]], corner[t[2]], corner[t[3]]});
      }
}

}  // namespace

TrussMesh generate_grid_truss(int nx, int ny, int nz, double gamma) {
  std::vector<Vec3> points;
  std::vector<Tetrahedron> tets;
  make_grid(nx, ny, nz, 0, points, tets);
  return TrussMesh(std::move(points), std::move(tets), gamma);
}

TrussMesh generate_union(const std::vector<ChunkSpec> &specs, double gamma) {
  if (specs.empty()) throw std::invalid_argument("no chunks");
  std::map<std::array<int, 3>, int> vert_of;
  std::vector<Vec3> points;
  std::vector<Tetrahedron> tets;
  std::vector<std::vector<int>> chunks;

  for (const auto &spec : specs) {
    const int parity_base =
        (spec.offset.x() + spec.offset.y() + spec.offset.z()) & 1;
    std::vector<Vec3> part_points;
    std::vector<Tetrahedron> part_tets;
    make_grid(spec.nx, spec.ny, spec.nz, parity_base, part_points, part_tets);
    std::vector<int> remap(part_points.size());
    for (int v = 0; v < static_cast<int>(part_points.size()); ++v) {
      const Vec3 &p = part_points[v];
      const std::array<int, 3> key{
          static_cast<int>(std::llround(p.x())) + spec.offset.x(),
          static_cast<int>(std::llround(p.y())) + spec.offset.y(),
          static_cast<int>(std::llround(p.z())) + spec.offset.z()};
      if ((p - Vec3(std::llround(p.x()), std::llround(p.y()),
                    std::llround(p.z())))
              .norm() > kGeomEps)
        throw std::invalid_argument("incompatible chunk placement");
      auto [it, inserted] =
          vert_of.try_emplace(key, static_cast<int>(points.size()));
      if (inserted)
        points.emplace_back(key[0], key[1], key[2]);
      remap[v] = it->second;
    }
    std::vector<int> chunk_tets;
    for (const auto &t : part_tets) {
      chunk_tets.push_back(static_cast<int>(tets.size()));
      tets.push_back({remap[t.a], remap[t.b], remap[t.c], remap[t.d]});
    }
    chunks.push_back(std::move(chunk_tets));
  }

  TrussMesh mesh(std::move(points), std::move(tets), gamma);
  mesh.set_chunks(std::move(chunks));
  return mesh;
}

}  // namespace truss
