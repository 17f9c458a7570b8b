#include "truss/elim.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace truss {

std::vector<std::vector<int>> block_adjacency(const BlockMatrix &a) {
  std::vector<std::vector<int>> adj(a.num_vertices());
  for (const auto &e : a.edges()) {
    adj[e.i].push_back(e.j);
    adj[e.j].push_back(e.i);
  }
  return adj;
}

namespace {

// Lower-triangular Cholesky of a 3x3 block with scalar pivot zeroing.
// Returns the count of zeroed pivots; offsets of zeroed scalar pivots are
// appended as 3*j + c.
int chol3(const Mat3 &d_in, double piv_tol, double neg_tol, Mat3 &l,
          int block_index, std::vector<int> *zeroed) {
  int dropped = 0;
  l.setZero();
  Mat3 d = 0.5 * (d_in + d_in.transpose());
  for (int c = 0; c < 3; ++c) {
    double p = d(c, c);
    for (int m = 0; m < c; ++m) p -= l(c, m) * l(c, m);
    if (p < -neg_tol)
      throw std::runtime_error("negative pivot: matrix is not PSD");
    if (p <= piv_tol) {
      l(c, c) = 0.0;
      if (zeroed) zeroed->push_back(3 * block_index + c);
      ++dropped;
      continue;
    }
    l(c, c) = std::sqrt(p);
    for (int r = c + 1; r < 3; ++r) {
      double v = d(r, c);
      for (int m = 0; m < c; ++m) v -= l(r, m) * l(c, m);
      l(r, c) = v / l(c, c);
    }
  }
  return dropped;
}

// X with X L^T = W, i.e. each row of X solves x L^T = w by forward
// substitution over the columns of L; zero pivots produce zero columns.
Mat3 solve_right_lt(const Mat3 &w, const Mat3 &l) {
  Mat3 x = Mat3::Zero();
  for (int row = 0; row < 3; ++row) {
    for (int c = 0; c < 3; ++c) {
      if (l(c, c) == 0.0) continue;
      double v = w(row, c);
      for (int m = 0; m < c; ++m) v -= x(row, m) * l(c, m);
      x(row, c) = v / l(c, c);
    }
  }
  return x;
}

// y = L^{-1} b for one 3-block, zero pivots drop the component.
Eigen::Vector3d fwd3(const Mat3 &l, const Eigen::Vector3d &b) {
  Eigen::Vector3d y = Eigen::Vector3d::Zero();
  for (int c = 0; c < 3; ++c) {
    if (l(c, c) == 0.0) continue;
    double v = b(c);
    for (int m = 0; m < c; ++m) v -= l(c, m) * y(m);
    y(c) = v / l(c, c);
  }
  return y;
}

// x = L^{-T} y for one 3-block.
Eigen::Vector3d bwd3(const Mat3 &l, const Eigen::Vector3d &y) {
  Eigen::Vector3d x = Eigen::Vector3d::Zero();
  for (int c = 2; c >= 0; --c) {
    if (l(c, c) == 0.0) continue;
    double v = y(c);
    for (int m = c + 1; m < 3; ++m) v -= l(m, c) * x(m);
    x(c) = v / l(c, c);
  }
  return x;
}

// Block (bi, bj) of A in the original numbering, bi >= bj not required.
Mat3 block_of(const BlockMatrix &a, int bi, int bj,
              const std::map<Edge, std::pair<int, bool>> &edge_ids) {
  if (bi == bj) return a.diag(bi);
  auto it = edge_ids.find(Edge(bi, bj));
  if (it == edge_ids.end()) return Mat3::Zero();
  const Mat3 &stored = a.offdiag(it->second.first);
  // stored block is (e.i, e.j) with e.i < e.j
  const bool wants_ij = bi < bj;
  return wants_ij ? stored : Mat3(stored.transpose());
}

std::map<Edge, std::pair<int, bool>> index_edges(const BlockMatrix &a) {
  std::map<Edge, std::pair<int, bool>> ids;
  for (int e = 0; e < static_cast<int>(a.edges().size()); ++e)
    ids[a.edges()[e]] = {e, true};
  return ids;
}

double max_diagonal(const BlockMatrix &a) {
  double m = 0.0;
  for (int i = 0; i < a.num_vertices(); ++i)
    m = std::max(m, a.diag(i).diagonal().maxCoeff());
  return m;
}

// Left-looking block factorization of columns [0, ncols) of the permuted
// matrix. Row lists (k < j with j in pattern[k]) are prebuilt. When
// stop_at_tiny_pivot is set, a zeroed pivot throws instead.
struct Workspace {
  std::vector<Mat3> w;
  std::vector<char> touched;
};

void factor_columns(const BlockMatrix &a, SparseFactor &f, int ncols,
                    double piv_tol, double neg_tol, bool strict_pd) {
  const int n = f.n;
  const auto edge_ids = index_edges(a);

  // rows_of[j]: columns k < j carrying a block in row j.
  std::vector<std::vector<int>> rows_of(n);
  for (int k = 0; k < ncols; ++k)
    for (int r : f.sym.patterns[k]) rows_of[r].push_back(k);

  f.diag.assign(ncols, Mat3::Zero());
  f.below.assign(ncols, {});
  std::vector<Mat3> w(n, Mat3::Zero());

  // Position of a row inside each column's pattern, for O(1) lookup of
  // L(j, k).
  std::vector<std::map<int, int>> row_pos(ncols);
  for (int k = 0; k < ncols; ++k)
    for (size_t idx = 0; idx < f.sym.patterns[k].size(); ++idx)
      row_pos[k][f.sym.patterns[k][idx]] = static_cast<int>(idx);

  for (int j = 0; j < ncols; ++j) {
    const auto &pattern = f.sym.patterns[j];
    // Gather original entries.
    w[j] = block_of(a, f.sym.order[j], f.sym.order[j], edge_ids);
    for (int r : pattern)
      w[r] = block_of(a, f.sym.order[r], f.sym.order[j], edge_ids);

    // Apply updates from earlier columns with a block in row j.
    for (int k : rows_of[j]) {
      const Mat3 &l_jk = f.below[k][row_pos[k].at(j)];
      const auto &pk = f.sym.patterns[k];
      const auto &bk = f.below[k];
      for (size_t idx = 0; idx < pk.size(); ++idx) {
        const int r = pk[idx];
        if (r < j) continue;
        w[r] -= bk[idx] * l_jk.transpose();
      }
    }

    const int dropped =
        chol3(w[j], piv_tol, neg_tol, f.diag[j], j,
              strict_pd ? nullptr : &f.zeroed_pivots);
    if (strict_pd && dropped > 0)
      throw std::runtime_error("singular interior block in partial elimination");

    f.below[j].resize(pattern.size());
    for (size_t idx = 0; idx < pattern.size(); ++idx)
      f.below[j][idx] = solve_right_lt(w[pattern[idx]], f.diag[j]);

    const int64_t eta = static_cast<int64_t>(pattern.size());
    f.flops += 27 * (1 + eta + eta * (eta + 1) / 2);
  }
}

}  // namespace

SparseFactor factor(const BlockMatrix &a, const std::vector<int> &ordering,
                    double piv_eps) {
  SparseFactor f;
  f.n = a.num_vertices();
  f.sym = symbolic_factor(block_adjacency(a), ordering);
  const double maxd = std::max(max_diagonal(a), 1e-300);
  // Roundoff drives rank-deficient pivots slightly negative; only a clearly
  // negative pivot signals a non-PSD input.
  factor_columns(a, f, f.n, piv_eps * maxd, std::sqrt(piv_eps) * maxd,
                 /*strict_pd=*/false);
  f.fill_blocks = f.sym.fill_blocks;
  return f;
}

Eigen::VectorXd solve_factor(const SparseFactor &f, const Eigen::VectorXd &b) {
  const int n = f.n;
  if (b.size() != 3 * n) throw std::invalid_argument("dimension mismatch");
  // Permute.
  Eigen::VectorXd y(3 * n);
  for (int j = 0; j < n; ++j) y.segment<3>(3 * j) = b.segment<3>(3 * f.sym.order[j]);

  // Forward: L z = y.
  for (int j = 0; j < n; ++j) {
    const Eigen::Vector3d zj = fwd3(f.diag[j], y.segment<3>(3 * j));
    y.segment<3>(3 * j) = zj;
    const auto &pattern = f.sym.patterns[j];
    for (size_t idx = 0; idx < pattern.size(); ++idx)
      y.segment<3>(3 * pattern[idx]) -= f.below[j][idx] * zj;
  }
  // Backward: L^T x = z.
  for (int j = n - 1; j >= 0; --j) {
    Eigen::Vector3d rhs = y.segment<3>(3 * j);
    const auto &pattern = f.sym.patterns[j];
    for (size_t idx = 0; idx < pattern.size(); ++idx)
      rhs -= f.below[j][idx].transpose() *
             Eigen::Vector3d(y.segment<3>(3 * pattern[idx]));
    y.segment<3>(3 * j) = bwd3(f.diag[j], rhs);
  }

  Eigen::VectorXd x(3 * n);
  for (int j = 0; j < n; ++j) x.segment<3>(3 * f.sym.order[j]) = y.segment<3>(3 * j);
  return x;
}

PartialElimination eliminate_subset(const BlockMatrix &a,
                                    const std::vector<int> &interior_order,
                                    double piv_eps) {
  const int n = a.num_vertices();
  const int ns = static_cast<int>(interior_order.size());
  std::vector<char> in_s(n, 0);
  for (int v : interior_order) {
    if (v < 0 || v >= n || in_s[v])
      throw std::invalid_argument("interior set is not a vertex subset");
    in_s[v] = 1;
  }

  PartialElimination pe;
  pe.num_interior = ns;
  pe.interior_vertices = interior_order;
  for (int v = 0; v < n; ++v)
    if (!in_s[v]) pe.boundary_vertices.push_back(v);

  std::vector<int> order = interior_order;
  order.insert(order.end(), pe.boundary_vertices.begin(),
               pe.boundary_vertices.end());

  pe.interior.n = n;
  pe.interior.sym = symbolic_factor(block_adjacency(a), order);
  const double maxd = std::max(max_diagonal(a), 1e-300);
  factor_columns(a, pe.interior, ns, piv_eps * maxd, std::sqrt(piv_eps) * maxd,
                 /*strict_pd=*/true);
  pe.flops = pe.interior.flops;

  if (ns == 0) {
    // Sc = A restricted (trivially all of A); local index = boundary rank.
    std::vector<Edge> edges = a.edges();
    pe.sc = BlockMatrix(n, edges);
    for (int i = 0; i < n; ++i) pe.sc.diag(i) = a.diag(i);
    for (size_t e = 0; e < edges.size(); ++e)
      pe.sc.offdiag(static_cast<int>(e)) = a.offdiag(static_cast<int>(e));
    return pe;
  }

  // Accumulate the Schur complement: for each boundary column, original
  // entries minus the updates from interior columns.
  const auto edge_ids = index_edges(a);
  const auto &sym = pe.interior.sym;
  const int nt = n - ns;
  std::vector<int> local_of(n, -1);
  for (int t = 0; t < nt; ++t) local_of[pe.boundary_vertices[t]] = t;

  // rows_of for boundary rows over interior columns.
  std::vector<std::vector<int>> rows_of(n);
  for (int k = 0; k < ns; ++k)
    for (int r : sym.patterns[k]) rows_of[r].push_back(k);
  std::vector<std::map<int, int>> row_pos(ns);
  for (int k = 0; k < ns; ++k)
    for (size_t idx = 0; idx < sym.patterns[k].size(); ++idx)
      row_pos[k][sym.patterns[k][idx]] = static_cast<int>(idx);

  std::map<Edge, Mat3> sc_off;
  std::vector<Mat3> sc_diag(nt, Mat3::Zero());

  const auto adj = block_adjacency(a);
  std::vector<Mat3> w(n, Mat3::Zero());
  std::vector<int> touched;
  std::vector<char> is_touched(n, 0);
  for (int jp = ns; jp < n; ++jp) {
    const int gj = sym.order[jp];
    const int lj = local_of[gj];
    touched.clear();
    auto touch = [&](int rp) {
      if (!is_touched[rp]) {
        is_touched[rp] = 1;
        w[rp].setZero();
        touched.push_back(rp);
      }
    };
    touch(jp);
    w[jp] = a.diag(gj);
    for (int gu : adj[gj]) {
      const int rp = sym.position[gu];
      if (rp >= jp) {
        touch(rp);
        w[rp] = block_of(a, sym.order[rp], gj, edge_ids);
      }
    }
    for (int k : rows_of[jp]) {
      const Mat3 &l_jk = pe.interior.below[k][row_pos[k].at(jp)];
      const auto &pk = sym.patterns[k];
      for (size_t idx = 0; idx < pk.size(); ++idx) {
        const int rp = pk[idx];
        if (rp < jp) continue;
        touch(rp);
        w[rp] -= pe.interior.below[k][idx] * l_jk.transpose();
        pe.flops += 27;
      }
    }
    for (int rp : touched) {
      is_touched[rp] = 0;
      const int lr = local_of[sym.order[rp]];
      if (rp == jp) {
        sc_diag[lj] = 0.5 * (w[rp] + w[rp].transpose());
      } else {
        // stored block follows Edge(min, max) orientation in local indices
        if (lr > lj)
          sc_off[Edge(lj, lr)] = w[rp].transpose();  // w = (row rp, col jp)
        else
          sc_off[Edge(lr, lj)] = w[rp];
      }
    }
  }

  std::vector<Edge> sc_edges;
  sc_edges.reserve(sc_off.size());
  for (const auto &[e, blk] : sc_off) sc_edges.push_back(e);
  pe.sc = BlockMatrix(nt, sc_edges);
  for (int t = 0; t < nt; ++t) pe.sc.diag(t) = sc_diag[t];
  int eid = 0;
  for (const auto &[e, blk] : sc_off) pe.sc.offdiag(eid++) = blk;
  return pe;
}

Eigen::VectorXd PartialElimination::reduce_rhs(const Eigen::VectorXd &b) const {
  const int n = interior.n;
  if (b.size() != 3 * n) throw std::invalid_argument("dimension mismatch");
  const auto &sym = interior.sym;
  const int ns = num_interior;
  const int nt = n - ns;

  // y = L_S^{-1} b_S with boundary rows accumulating -L_TS y.
  Eigen::VectorXd work(3 * n);
  for (int j = 0; j < n; ++j)
    work.segment<3>(3 * j) = b.segment<3>(3 * sym.order[j]);
  for (int j = 0; j < ns; ++j) {
    const Eigen::Vector3d yj = fwd3(interior.diag[j], work.segment<3>(3 * j));
    work.segment<3>(3 * j) = yj;
    const auto &pattern = sym.patterns[j];
    for (size_t idx = 0; idx < pattern.size(); ++idx)
      work.segment<3>(3 * pattern[idx]) -= interior.below[j][idx] * yj;
  }
  Eigen::VectorXd g(3 * nt);
  for (int t = 0; t < nt; ++t) g.segment<3>(3 * t) = work.segment<3>(3 * (ns + t));
  return g;
}

Eigen::VectorXd PartialElimination::expand_solution(
    const Eigen::VectorXd &x_t, const Eigen::VectorXd &b) const {
  const int n = interior.n;
  const auto &sym = interior.sym;
  const int ns = num_interior;
  const int nt = n - ns;
  if (x_t.size() != 3 * nt || b.size() != 3 * n)
    throw std::invalid_argument("dimension mismatch");

  // Repeat the forward pass to recover y = L_S^{-1} b_S.
  Eigen::VectorXd work(3 * n);
  for (int j = 0; j < n; ++j)
    work.segment<3>(3 * j) = b.segment<3>(3 * sym.order[j]);
  for (int j = 0; j < ns; ++j) {
    const Eigen::Vector3d yj = fwd3(interior.diag[j], work.segment<3>(3 * j));
    work.segment<3>(3 * j) = yj;
    const auto &pattern = sym.patterns[j];
    for (size_t idx = 0; idx < pattern.size(); ++idx)
      work.segment<3>(3 * pattern[idx]) -= interior.below[j][idx] * yj;
  }
  for (int t = 0; t < nt; ++t) work.segment<3>(3 * (ns + t)) = x_t.segment<3>(3 * t);

  // Backward: x_S = L_S^{-T} (y - L_TS^T x_T).
  for (int j = ns - 1; j >= 0; --j) {
    Eigen::Vector3d rhs = work.segment<3>(3 * j);
    const auto &pattern = sym.patterns[j];
    for (size_t idx = 0; idx < pattern.size(); ++idx)
      rhs -= interior.below[j][idx].transpose() *
             Eigen::Vector3d(work.segment<3>(3 * pattern[idx]));
    work.segment<3>(3 * j) = bwd3(interior.diag[j], rhs);
  }

  Eigen::VectorXd x(3 * n);
  for (int j = 0; j < n; ++j)
    x.segment<3>(3 * sym.order[j]) = work.segment<3>(3 * j);
  return x;
}

}  // namespace truss
