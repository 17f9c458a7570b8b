#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "test_util.hpp"
#include "truss/dissect.hpp"
#include "truss/stiffness.hpp"

using namespace truss;

namespace {

std::vector<std::vector<int>> vertex_adjacency(const TrussMesh &mesh) {
  std::vector<std::vector<int>> adj(mesh.num_vertices());
  for (const Edge &e : mesh.edges()) {
    adj[e.i].push_back(e.j);
    adj[e.j].push_back(e.i);
  }
  return adj;
}

// s vertices per layer (a path), plus rung edges to the matching vertex of
// the next layer.
std::pair<LayeredGraph, std::vector<std::vector<int>>> ladder(int s, int l) {
  LayeredGraph g;
  std::vector<std::vector<int>> adj(s * l);
  auto link = [&adj](int u, int v) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  };
  for (int layer = 0; layer < l; ++layer) {
    std::vector<int> ids(s);
    for (int i = 0; i < s; ++i) {
      ids[i] = layer * s + i;
      if (i > 0) link(ids[i - 1], ids[i]);
      if (layer > 0) link(ids[i] - s, ids[i]);
    }
    g.layers.push_back(ids);
  }
  return {g, adj};
}

bool is_permutation_of_all(const std::vector<int> &order, int n) {
  if (static_cast<int>(order.size()) != n) return false;
  std::vector<char> seen(n, 0);
  for (int v : order) {
    if (v < 0 || v >= n || seen[v]) return false;
    seen[v] = 1;
  }
  return true;
}

}  // namespace

TEST_CASE("fill simulation on known graphs") {
  SUBCASE("path in natural order has no fill") {
    std::vector<std::vector<int>> adj = {{1}, {0, 2}, {1, 3}, {2}};
    std::vector<int> order = {0, 1, 2, 3};
    const auto res = fillin_flop_simulate(adj, order);
    CHECK(res.fill_blocks == 0);
    CHECK(res.fill_entries == 0);
  }
  SUBCASE("complete graph has no fill in any order") {
    std::vector<std::vector<int>> adj = {{1, 2, 3}, {0, 2, 3}, {0, 1, 3},
                                         {0, 1, 2}};
    const auto res = fillin_flop_simulate(adj, {2, 0, 3, 1});
    CHECK(res.fill_blocks == 0);
  }
  SUBCASE("eliminating a star center first fills the leaf clique") {
    const int m = 6;
    std::vector<std::vector<int>> adj(m + 1);
    for (int i = 1; i <= m; ++i) {
      adj[0].push_back(i);
      adj[i].push_back(0);
    }
    std::vector<int> order(m + 1);
    std::iota(order.begin(), order.end(), 0);
    const auto res = fillin_flop_simulate(adj, order);
    CHECK(res.fill_blocks == m * (m - 1) / 2);
    CHECK(res.fill_entries == 9 * res.fill_blocks);
  }
  SUBCASE("symbolic and simulated counters agree") {
    const TrussMesh mesh = generate_grid_truss(3, 3, 3);
    const auto adj = vertex_adjacency(mesh);
    std::vector<int> order(mesh.num_vertices());
    std::iota(order.begin(), order.end(), 0);
    const auto sym = symbolic_factor(adj, order);
    const auto sim = fillin_flop_simulate(adj, order);
    CHECK(sym.fill_blocks == sim.fill_blocks);
    CHECK(sym.flops == sim.flops);
  }
}

TEST_CASE("layered graph nested dissection") {
  SUBCASE("orders every vertex exactly once") {
    const auto [g, adj] = ladder(5, 9);
    const auto order = layered_graph_nd(g);
    CHECK(is_permutation_of_all(order, 45));
  }
  SUBCASE("middle layer of three comes last") {
    const auto [g, adj] = ladder(4, 3);
    const auto order = layered_graph_nd(g);
    std::set<int> tail(order.end() - 4, order.end());
    for (int i = 0; i < 4; ++i) CHECK(tail.count(4 + i) == 1);
  }
  SUBCASE("fill stays under 4 s^2 l blocks") {
    for (int s : {4, 8, 16, 32})
      for (int l : {4, 8, 16, 32}) {
        const auto [g, adj] = ladder(s, l);
        const auto order = layered_graph_nd(g);
        const auto res = fillin_flop_simulate(adj, order);
        CHECK(res.fill_blocks <= 4LL * s * s * l);
      }
  }
}

TEST_CASE("direction picking") {
  auto in_bounds = [](const Vec3 &d, const std::vector<Vec3> &dirs) {
    const double lo = 1.0 / (10.0 * dirs.size());
    for (const Vec3 &di : dirs) {
      const double dot = std::abs(d.dot(di.normalized()));
      if (dot < lo || dot > 1.0 - lo) return false;
    }
    return true;
  };
  SUBCASE("single axis") {
    const std::vector<Vec3> dirs = {Vec3(1, 0, 0)};
    const Vec3 d = pick_direction(dirs, 41);
    CHECK(d.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(in_bounds(d, dirs));
  }
  SUBCASE("orthogonal pair") {
    const std::vector<Vec3> dirs = {Vec3(1, 0, 0), Vec3(0, 1, 0)};
    CHECK(in_bounds(pick_direction(dirs, 43), dirs));
  }
  SUBCASE("1000 seeds against 20 random directions") {
    std::mt19937_64 rng(47);
    std::normal_distribution<double> g;
    std::vector<Vec3> dirs;
    for (int i = 0; i < 20; ++i)
      dirs.push_back(Vec3(g(rng), g(rng), g(rng)).normalized());
    for (uint64_t seed = 0; seed < 1000; ++seed)
      CHECK(in_bounds(pick_direction(dirs, seed), dirs));
  }
}

TEST_CASE("separator planes split tets near-evenly") {
  const TrussMesh mesh = generate_grid_truss(8, 8, 8);
  std::vector<int> tets(mesh.num_tets());
  std::iota(tets.begin(), tets.end(), 0);
  for (int l : {1, 3}) {
    const auto planes = separator_planes(mesh, tets, Vec3(1, 0, 0), l);
    REQUIRE(static_cast<int>(planes.offsets.size()) == l);
    CHECK(std::is_sorted(planes.offsets.begin(), planes.offsets.end()));
    std::vector<int> count(l + 1, 0);
    for (int t = 0; t < mesh.num_tets(); ++t) {
      const int part = planes.part_of_tet[t];
      REQUIRE(part >= 0);
      REQUIRE(part <= l);
      ++count[part];
    }
    const double target = static_cast<double>(mesh.num_tets()) / (l + 1);
    for (int part = 0; part <= l; ++part)
      CHECK(count[part] <= static_cast<int>(std::ceil(1.10 * target)));
  }
}

TEST_CASE("geometric separator") {
  SUBCASE("two glued cubes separate at the shared face") {
    const TrussMesh mesh = generate_grid_truss(2, 1, 1);
    SubTruss sub;
    sub.verts.resize(mesh.num_vertices());
    std::iota(sub.verts.begin(), sub.verts.end(), 0);
    sub.tets.resize(mesh.num_tets());
    std::iota(sub.tets.begin(), sub.tets.end(), 0);
    const auto split = geometric_separator(mesh, sub);
    std::set<int> sep(split.separator.begin(), split.separator.end());
    std::set<int> expect;
    for (int v = 0; v < mesh.num_vertices(); ++v)
      if (std::abs(mesh.points()[v].x() - 1.0) < 1e-12) expect.insert(v);
    CHECK(sep == expect);
    CHECK(split.part_a.size() == split.part_b.size());
  }

  const TrussMesh mesh = generate_grid_truss(5, 5, 5);
  SubTruss sub;
  sub.verts.resize(mesh.num_vertices());
  std::iota(sub.verts.begin(), sub.verts.end(), 0);
  sub.tets.resize(mesh.num_tets());
  std::iota(sub.tets.begin(), sub.tets.end(), 0);
  const auto split = geometric_separator(mesh, sub);

  SUBCASE("separator + parts partition the vertex set") {
    std::vector<int> count(mesh.num_vertices(), 0);
    for (int v : split.separator) ++count[v];
    for (int v : split.part_a) ++count[v];
    for (int v : split.part_b) ++count[v];
    for (int v = 0; v < mesh.num_vertices(); ++v) CHECK(count[v] == 1);
  }
  SUBCASE("no mesh edge joins the two parts") {
    std::vector<int> side(mesh.num_vertices(), 0);
    for (int v : split.part_a) side[v] = 1;
    for (int v : split.part_b) side[v] = 2;
    for (const Edge &e : mesh.edges())
      CHECK(side[e.i] * side[e.j] != 2);  // 1*2 = 2 means a crossing edge
  }
  SUBCASE("balance: each part at most 3/4 of the vertices") {
    const size_t cap = 3 * mesh.num_vertices() / 4;
    CHECK(split.part_a.size() <= cap);
    CHECK(split.part_b.size() <= cap);
  }
}

TEST_CASE("separator size scales like n^(2/3)") {
  std::vector<double> ratios;
  for (int nx : {4, 6, 8}) {
    const TrussMesh mesh = generate_grid_truss(nx, nx, nx);
    SubTruss sub;
    sub.verts.resize(mesh.num_vertices());
    std::iota(sub.verts.begin(), sub.verts.end(), 0);
    sub.tets.resize(mesh.num_tets());
    std::iota(sub.tets.begin(), sub.tets.end(), 0);
    const auto split = geometric_separator(mesh, sub);
    ratios.push_back(split.separator.size() /
                     std::pow(static_cast<double>(mesh.num_vertices()), 2.0 / 3.0));
  }
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  CHECK(*hi / *lo <= 3.0);
}

TEST_CASE("nested dissection ordering") {
  const TrussMesh mesh = testutil::jittered_grid(4, 4, 4, 51);
  const auto nd = nested_dissection(mesh);
  SUBCASE("bijection on the vertex set") {
    CHECK(is_permutation_of_all(nd.order, mesh.num_vertices()));
  }
  SUBCASE("node indices partition the vertex set") {
    std::vector<int> count(mesh.num_vertices(), 0);
    for (const auto &node : nd.nodes)
      for (int v : node.indices) ++count[v];
    for (int v = 0; v < mesh.num_vertices(); ++v) CHECK(count[v] == 1);
  }
  SUBCASE("beats the natural order on fill") {
    const auto adj = vertex_adjacency(mesh);
    std::vector<int> natural(mesh.num_vertices());
    std::iota(natural.begin(), natural.end(), 0);
    CHECK(fillin_flop_simulate(adj, nd.order).fill_blocks <
          fillin_flop_simulate(adj, natural).fill_blocks);
  }
}

TEST_CASE("truss union ordering") {
  SUBCASE("single chunk with no top planes reduces to plain dissection") {
    const TrussMesh mesh = generate_grid_truss(3, 3, 3);
    const std::vector<OrientedBox> boxes = {bounding_box(mesh)};
    const auto combined = convex_truss_union_nd(mesh, boxes, 0);
    const auto plain = nested_dissection(mesh);
    const auto adj = vertex_adjacency(mesh);
    CHECK(fillin_flop_simulate(adj, combined.order).fill_blocks ==
          fillin_flop_simulate(adj, plain.order).fill_blocks);
  }
  SUBCASE("two-chunk union: valid ordering with bounded fill") {
    const TrussMesh mesh =
        generate_union({{4, 4, 4, Eigen::Vector3i(0, 0, 0)},
                        {4, 4, 4, Eigen::Vector3i(4, 0, 0)}});
    std::vector<OrientedBox> boxes;
    for (const auto &chunk : mesh.chunks()) {
      std::set<int> vs;
      for (int t : chunk)
        for (int v : mesh.tets()[t].verts()) vs.insert(v);
      std::vector<Vec3> pts;
      for (int v : vs) pts.push_back(mesh.points()[v]);
      boxes.push_back(bounding_box(pts));
    }
    const auto nd = convex_truss_union_nd(mesh, boxes, 2, {.seed = 3});
    CHECK(is_permutation_of_all(nd.order, mesh.num_vertices()));
    CHECK(nd.glue_vertex_count > 0);

    int max_sep = 0;
    for (const auto &node : nd.nodes)
      if (node.kind != NodeKind::kLeaf)
        max_sep = std::max(max_sep, static_cast<int>(node.indices.size()));
    const double n = mesh.num_vertices();
    const double bound =
        4.0 * (std::pow(n, 4.0 / 3.0) / std::cbrt(2.0) +
               static_cast<double>(max_sep) * max_sep * 2.0);
    const auto adj = vertex_adjacency(mesh);
    CHECK(fillin_flop_simulate(adj, nd.order).fill_blocks <=
          static_cast<int64_t>(bound));
  }
}
