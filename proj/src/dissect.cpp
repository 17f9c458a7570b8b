#include "truss/dissect.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

namespace truss {

namespace {

void layered_recurse(const LayeredGraph &g, int lo, int hi,
                     std::vector<int> &out) {
  if (lo > hi) return;
  if (lo == hi) {
    std::vector<int> layer = g.layers[lo];
    std::sort(layer.begin(), layer.end());
    out.insert(out.end(), layer.begin(), layer.end());
    return;
  }
  const int mid = lo + (hi - lo) / 2;
  layered_recurse(g, lo, mid - 1, out);
  layered_recurse(g, mid + 1, hi, out);
  std::vector<int> layer = g.layers[mid];
  std::sort(layer.begin(), layer.end());
  out.insert(out.end(), layer.begin(), layer.end());
}

}  // namespace

std::vector<int> layered_graph_nd(const LayeredGraph &g) {
  std::vector<int> out;
  if (g.layers.empty()) return out;
  layered_recurse(g, 0, static_cast<int>(g.layers.size()) - 1, out);
  return out;
}

Vec3 pick_direction(const std::vector<Vec3> &directions, uint64_t seed) {
  if (directions.empty()) throw std::invalid_argument("no directions");
  const int k = static_cast<int>(directions.size());
  const double lo = 1.0 / (10.0 * k);
  const double hi = 1.0 - lo;
  const int attempts =
      64 * static_cast<int>(std::ceil(std::log2(static_cast<double>(k) + 2.0)));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int a = 0; a < attempts; ++a) {
    Vec3 d(gauss(rng), gauss(rng), gauss(rng));
    const double norm = d.norm();
    if (norm < 1e-12) continue;
    d /= norm;
    bool ok = true;
    for (const auto &di : directions) {
      const double dot = std::abs(d.dot(di));
      if (dot < lo || dot > hi) {
        ok = false;
        break;
      }
    }
    if (ok) return d;
  }
  throw std::runtime_error("direction sampling attempts exhausted (retryable)");
}

SeparatorPlanes separator_planes(const TrussMesh &mesh,
                                 const std::vector<int> &tets, const Vec3 &d,
                                 int l) {
  if (l < 1) throw std::invalid_argument("l must be >= 1");
  SeparatorPlanes sp;
  sp.direction = d;
  const int m = static_cast<int>(tets.size());
  std::vector<double> coord(m);
  for (int i = 0; i < m; ++i) coord[i] = mesh.tet_centroid(tets[i]).dot(d);
  std::vector<int> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    return coord[a] != coord[b] ? coord[a] < coord[b] : tets[a] < tets[b];
  });

  sp.part_of_tet.assign(m, 0);
  const int parts = l + 1;
  for (int j = 1; j <= l; ++j) {
    // Count-quantile cut between ranks.
    const int64_t cut_rank = static_cast<int64_t>(j) * m / parts;
    const double below = coord[idx[std::max<int64_t>(cut_rank - 1, 0)]];
    const double above = coord[idx[std::min<int64_t>(cut_rank, m - 1)]];
    sp.offsets.push_back(0.5 * (below + above));
  }
  for (int rank = 0; rank < m; ++rank) {
    const int part = std::min<int64_t>(
        static_cast<int64_t>(rank) * parts / std::max(m, 1), l);
    sp.part_of_tet[idx[rank]] = static_cast<int>(part);
  }
  return sp;
}

namespace {

struct AxisSplit {
  SeparatorSplit split;
  int crossing = 0;
  bool balanced = false;
};

AxisSplit try_plane(const TrussMesh &mesh, const SubTruss &sub,
                    const std::vector<char> &in_sub, const Vec3 &axis,
                    double offset) {
  // The plane is placed exactly on the chosen quantile coordinate, so on
  // lattice-like geometry it passes through a vertex layer: those on-plane
  // vertices alone separate the sides. Strictly crossing tets (rare there,
  // common for irregular geometry) contribute all their vertices.
  constexpr double kPlaneEps = 1e-9;
  AxisSplit result;
  std::vector<signed char> side(mesh.num_vertices(), 0);
  for (int v : sub.verts) {
    const double c = mesh.points()[v].dot(axis) - offset;
    side[v] = c > kPlaneEps ? 1 : c < -kPlaneEps ? -1 : 0;
  }

  std::set<int> sep;
  for (int v : sub.verts)
    if (side[v] == 0) sep.insert(v);
  for (int t : sub.tets) {
    const auto verts = mesh.tets()[t].verts();
    bool has_lo = false, has_hi = false;
    for (int v : verts) {
      if (side[v] > 0) has_hi = true;
      if (side[v] < 0) has_lo = true;
    }
    if (has_lo && has_hi) {
      ++result.crossing;
      for (int v : verts) sep.insert(v);
    }
  }
  // Cover edges crossing the cut that no sub tet accounts for.
  for (int u : sub.verts)
    for (int w : mesh.vertex_adjacency()[u]) {
      if (w < u || !in_sub[w]) continue;
      if (side[u] * side[w] < 0 && (!sep.count(u) || !sep.count(w))) {
        sep.insert(u);
        sep.insert(w);
      }
    }

  for (int v : sub.verts) {
    if (sep.count(v)) continue;
    (side[v] > 0 ? result.split.part_b : result.split.part_a).push_back(v);
  }
  result.split.separator.assign(sep.begin(), sep.end());
  const size_t n = sub.verts.size();
  result.balanced =
      result.split.part_a.size() <= (3 * n) / 4 &&
      result.split.part_b.size() <= (3 * n) / 4 &&
      result.split.separator.size() < n;
  return result;
}

double quantile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const size_t i = std::min(values.size() - 1,
                            static_cast<size_t>(q * values.size()));
  return values[i];
}

}  // namespace

SeparatorSplit geometric_separator(const TrussMesh &mesh,
                                   const SubTruss &sub) {
  if (sub.verts.empty()) throw std::invalid_argument("empty submesh");
  std::vector<char> in_sub(mesh.num_vertices(), 0);
  for (int v : sub.verts) in_sub[v] = 1;

  std::vector<Vec3> pts;
  pts.reserve(sub.verts.size());
  for (int v : sub.verts) pts.push_back(mesh.points()[v]);

  std::array<Vec3, 3> axes{Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
  if (pts.size() >= 4) {
    try {
      axes = bounding_box(pts).axes;
    } catch (const std::invalid_argument &) {
      // flat point set, keep coordinate axes
    }
  }

  static const double kQuantiles[] = {0.5, 0.4, 0.6, 0.35, 0.65};
  const AxisSplit *best = nullptr;
  std::vector<AxisSplit> candidates;
  candidates.reserve(15);
  for (double q : kQuantiles) {
    for (const auto &axis : axes) {
      std::vector<double> coords;
      coords.reserve(sub.verts.size());
      for (int v : sub.verts) coords.push_back(mesh.points()[v].dot(axis));
      candidates.push_back(
          try_plane(mesh, sub, in_sub, axis, quantile(coords, q)));
      const AxisSplit &c = candidates.back();
      if (c.balanced &&
          (!best || c.crossing < best->crossing ||
           (c.crossing == best->crossing &&
            c.split.separator.size() < best->split.separator.size())))
        best = &candidates.back();
    }
    if (best) break;  // only widen the quantile sweep when the median fails
  }
  if (best) return best->split;

  // Degenerate geometry: vertex-count bisection along the longest axis.
  std::vector<int> sorted = sub.verts;
  std::sort(sorted.begin(), sorted.end(), [&](int a, int b) {
    const double ca = mesh.points()[a].dot(axes[0]);
    const double cb = mesh.points()[b].dot(axes[0]);
    return ca != cb ? ca < cb : a < b;
  });
  SeparatorSplit split;
  const size_t half = sorted.size() / 2;
  std::set<int> lower(sorted.begin(), sorted.begin() + half);
  std::set<int> sep;
  for (size_t i = half; i < sorted.size(); ++i) {
    const int v = sorted[i];
    for (int w : mesh.vertex_adjacency()[v])
      if (lower.count(w)) {
        sep.insert(v);
        break;
      }
  }
  split.part_a.assign(sorted.begin(), sorted.begin() + half);
  for (size_t i = half; i < sorted.size(); ++i)
    if (!sep.count(sorted[i])) split.part_b.push_back(sorted[i]);
  split.separator.assign(sep.begin(), sep.end());
  return split;
}

namespace {

SubTruss restrict_subtruss(const TrussMesh &mesh, const SubTruss &sub,
                           const std::vector<int> &verts) {
  SubTruss out;
  out.verts = verts;
  std::vector<char> keep(mesh.num_vertices(), 0);
  for (int v : verts) keep[v] = 1;
  for (int t : sub.tets) {
    const auto tv = mesh.tets()[t].verts();
    if (keep[tv[0]] && keep[tv[1]] && keep[tv[2]] && keep[tv[3]])
      out.tets.push_back(t);
  }
  return out;
}

void nd_recurse(const TrussMesh &mesh, const SubTruss &sub, int level,
                const NDConfig &config, EliminationOrdering &out) {
  if (sub.verts.empty()) return;
  if (static_cast<int>(sub.verts.size()) <= config.leaf_cutoff ||
      sub.tets.empty()) {
    SeparatorNode node;
    node.kind = NodeKind::kLeaf;
    node.level = level;
    node.indices = sub.verts;
    std::sort(node.indices.begin(), node.indices.end());
    out.order.insert(out.order.end(), node.indices.begin(), node.indices.end());
    out.nodes.push_back(std::move(node));
    return;
  }

  SeparatorSplit split = geometric_separator(mesh, sub);
  if (split.separator.size() == sub.verts.size() || split.part_a.empty() ||
      split.part_b.empty()) {
    // No progress possible; emit as a leaf.
    SeparatorNode node;
    node.kind = NodeKind::kLeaf;
    node.level = level;
    node.indices = sub.verts;
    std::sort(node.indices.begin(), node.indices.end());
    out.order.insert(out.order.end(), node.indices.begin(), node.indices.end());
    out.nodes.push_back(std::move(node));
    return;
  }

  nd_recurse(mesh, restrict_subtruss(mesh, sub, split.part_a), level + 1,
             config, out);
  nd_recurse(mesh, restrict_subtruss(mesh, sub, split.part_b), level + 1,
             config, out);

  SeparatorNode node;
  node.kind = NodeKind::kInternalSeparator;
  node.level = level;
  node.indices = split.separator;
  std::sort(node.indices.begin(), node.indices.end());
  out.order.insert(out.order.end(), node.indices.begin(), node.indices.end());
  out.nodes.push_back(std::move(node));
}

}  // namespace

EliminationOrdering nested_dissection(const TrussMesh &mesh,
                                      const NDConfig &config) {
  SubTruss whole;
  whole.verts.resize(mesh.num_vertices());
  std::iota(whole.verts.begin(), whole.verts.end(), 0);
  whole.tets.resize(mesh.num_tets());
  std::iota(whole.tets.begin(), whole.tets.end(), 0);
  EliminationOrdering out;
  nd_recurse(mesh, whole, 0, config, out);
  return out;
}

EliminationOrdering convex_truss_union_nd(const TrussMesh &mesh,
                                          const std::vector<OrientedBox> &boxes,
                                          int l, const NDConfig &config) {
  if (l <= 0) return nested_dissection(mesh, config);

  std::vector<std::vector<int>> chunks = mesh.chunks();
  if (chunks.empty()) {
    chunks.emplace_back(mesh.num_tets());
    std::iota(chunks[0].begin(), chunks[0].end(), 0);
  }
  if (boxes.size() != chunks.size())
    throw std::invalid_argument("one bounding box per chunk required");

  std::vector<Vec3> longest;
  longest.reserve(boxes.size());
  for (const auto &b : boxes) longest.push_back(b.axes[0]);
  const Vec3 d = pick_direction(longest, config.seed);

  std::vector<int> all_tets(mesh.num_tets());
  std::iota(all_tets.begin(), all_tets.end(), 0);
  const SeparatorPlanes planes = separator_planes(mesh, all_tets, d, l);

  // Top separator layers: vertices of tets straddling each plane, each
  // vertex kept in its first layer; stray crossing edges are pulled in too.
  EliminationOrdering out;
  std::vector<int> layer_of(mesh.num_vertices(), -1);
  LayeredGraph top;
  top.layers.resize(l);
  std::vector<double> vcoord(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v)
    vcoord[v] = mesh.points()[v].dot(d);

  auto assign = [&](int v, int j) {
    if (layer_of[v] < 0) {
      layer_of[v] = j;
      top.layers[j].push_back(v);
    }
  };
  for (int t = 0; t < mesh.num_tets(); ++t) {
    const auto verts = mesh.tets()[t].verts();
    double lo = vcoord[verts[0]], hi = lo;
    for (int v : verts) {
      lo = std::min(lo, vcoord[v]);
      hi = std::max(hi, vcoord[v]);
    }
    for (int j = 0; j < l; ++j)
      if (lo <= planes.offsets[j] && hi >= planes.offsets[j])
        for (int v : verts) assign(v, j);
  }
  for (const auto &e : mesh.edges()) {
    const double lo = std::min(vcoord[e.i], vcoord[e.j]);
    const double hi = std::max(vcoord[e.i], vcoord[e.j]);
    for (int j = 0; j < l; ++j)
      if (lo < planes.offsets[j] && hi > planes.offsets[j] &&
          (layer_of[e.i] < 0 || layer_of[e.j] < 0)) {
        assign(e.i, j);
        assign(e.j, j);
      }
  }

  // Glue vertices (shared between chunks) join the nearest top layer.
  if (chunks.size() > 1) {
    std::vector<int> chunk_count(mesh.num_vertices(), 0);
    for (const auto &chunk : chunks) {
      std::set<int> verts;
      for (int t : chunk)
        for (int v : mesh.tets()[t].verts()) verts.insert(v);
      for (int v : verts) ++chunk_count[v];
    }
    for (int v = 0; v < mesh.num_vertices(); ++v) {
      if (chunk_count[v] < 2) continue;
      if (layer_of[v] < 0) {
        int best = 0;
        for (int j = 1; j < l; ++j)
          if (std::abs(vcoord[v] - planes.offsets[j]) <
              std::abs(vcoord[v] - planes.offsets[best]))
            best = j;
        assign(v, best);
        ++out.glue_vertex_count;
      }
    }
  }

  // Slab parts: remaining vertices keyed by plane interval, ND inside each.
  std::vector<std::vector<int>> part_verts(l + 1);
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    if (layer_of[v] >= 0) continue;
    const int part = static_cast<int>(
        std::upper_bound(planes.offsets.begin(), planes.offsets.end(),
                         vcoord[v]) -
        planes.offsets.begin());
    part_verts[part].push_back(v);
  }

  std::vector<char> in_top(mesh.num_vertices(), 0);
  for (int v = 0; v < mesh.num_vertices(); ++v) in_top[v] = layer_of[v] >= 0;
  for (int p = 0; p <= l; ++p) {
    SubTruss sub;
    sub.verts = part_verts[p];
    std::vector<char> in_part(mesh.num_vertices(), 0);
    for (int v : sub.verts) in_part[v] = 1;
    for (int t = 0; t < mesh.num_tets(); ++t) {
      const auto tv = mesh.tets()[t].verts();
      if (in_part[tv[0]] && in_part[tv[1]] && in_part[tv[2]] && in_part[tv[3]])
        sub.tets.push_back(t);
    }
    nd_recurse(mesh, sub, 1, config, out);
  }

  // Top separators last, middle layers latest.
  LayeredGraph nonempty;
  for (auto &layer : top.layers)
    if (!layer.empty()) nonempty.layers.push_back(std::move(layer));
  const std::vector<int> top_order = layered_graph_nd(nonempty);
  // Each layer comes out contiguously; slice the flat order back into
  // per-layer tree nodes.
  {
    size_t pos = 0;
    while (pos < top_order.size()) {
      const int layer = layer_of[top_order[pos]];
      SeparatorNode node;
      node.kind = NodeKind::kTopSeparator;
      node.level = 0;
      while (pos < top_order.size() && layer_of[top_order[pos]] == layer)
        node.indices.push_back(top_order[pos++]);
      out.nodes.push_back(std::move(node));
    }
  }
  out.order.insert(out.order.end(), top_order.begin(), top_order.end());
  return out;
}

SymbolicFactor symbolic_factor(const std::vector<std::vector<int>> &adjacency,
                               const std::vector<int> &order) {
  const int n = static_cast<int>(adjacency.size());
  if (static_cast<int>(order.size()) != n)
    throw std::invalid_argument("ordering size mismatch");
  SymbolicFactor sym;
  sym.order = order;
  sym.position.assign(n, -1);
  for (int j = 0; j < n; ++j) {
    const int v = order[j];
    if (v < 0 || v >= n || sym.position[v] >= 0)
      throw std::invalid_argument("ordering is not a bijection");
    sym.position[v] = j;
  }

  sym.patterns.assign(n, {});
  sym.parent.assign(n, -1);
  std::vector<std::vector<int>> children(n);
  std::vector<char> mark(n, 0);
  int64_t graph_blocks = 0;

  for (int j = 0; j < n; ++j) {
    std::vector<int> rows;
    for (int u : adjacency[order[j]]) {
      const int pu = sym.position[u];
      if (pu > j && !mark[pu]) {
        mark[pu] = 1;
        rows.push_back(pu);
      }
    }
    graph_blocks += static_cast<int64_t>(rows.size());
    for (int c : children[j]) {
      for (int r : sym.patterns[c]) {
        if (r > j && !mark[r]) {
          mark[r] = 1;
          rows.push_back(r);
        }
      }
    }
    std::sort(rows.begin(), rows.end());
    for (int r : rows) mark[r] = 0;
    if (!rows.empty()) {
      sym.parent[j] = rows.front();
      children[rows.front()].push_back(j);
    }
    const int64_t eta = static_cast<int64_t>(rows.size());
    sym.factor_blocks += eta;
    sym.flops += 27 * (1 + eta + eta * (eta + 1) / 2);
    sym.patterns[j] = std::move(rows);
  }
  sym.fill_blocks = sym.factor_blocks - graph_blocks;
  return sym;
}

FillFlopResult fillin_flop_simulate(
    const std::vector<std::vector<int>> &adjacency,
    const std::vector<int> &order) {
  const SymbolicFactor sym = symbolic_factor(adjacency, order);
  return {sym.fill_blocks, sym.fill_entries(), sym.flops};
}

}  // namespace truss
