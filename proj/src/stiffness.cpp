#include "truss/stiffness.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>
#include <stdexcept>

namespace truss {

Eigen::VectorXd StiffnessMatrix::apply(const Eigen::VectorXd &x) const {
  if (x.size() != dim()) throw std::invalid_argument("dimension mismatch");
  Eigen::VectorXd y = Eigen::VectorXd::Zero(dim());
  for (int i = 0; i < n_; ++i)
    y.segment<3>(3 * i) = diag_[i] * x.segment<3>(3 * i);
  for (size_t e = 0; e < edges_.size(); ++e) {
    const auto &[i, j] = edges_[e];
    y.segment<3>(3 * i) += offdiag_[e] * x.segment<3>(3 * j);
    y.segment<3>(3 * j) += offdiag_[e].transpose() * x.segment<3>(3 * i);
  }
  return y;
}

Eigen::MatrixXd StiffnessMatrix::dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim(), dim());
  for (int i = 0; i < n_; ++i) m.block<3, 3>(3 * i, 3 * i) = diag_[i];
  for (size_t e = 0; e < edges_.size(); ++e) {
    const auto &[i, j] = edges_[e];
    m.block<3, 3>(3 * i, 3 * j) = offdiag_[e];
    m.block<3, 3>(3 * j, 3 * i) = offdiag_[e].transpose();
  }
  return m;
}

double StiffnessMatrix::inf_norm() const {
  Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(dim());
  auto add = [&](int bi, int bj, const Mat3 &blk) {
    for (int r = 0; r < 3; ++r)
      row_sums(3 * bi + r) += blk.row(r).cwiseAbs().sum();
    (void)bj;
  };
  for (int i = 0; i < n_; ++i) add(i, i, diag_[i]);
  for (size_t e = 0; e < edges_.size(); ++e) {
    const auto &[i, j] = edges_[e];
    add(i, j, offdiag_[e]);
    add(j, i, offdiag_[e].transpose());
  }
  return row_sums.maxCoeff();
}

Eigen::VectorXd edge_vector(const TrussMesh &mesh, const Edge &e) {
  if (mesh.edge_id(e) < 0) throw std::invalid_argument("edge not in mesh");
  const Vec3 diff = mesh.points()[e.i] - mesh.points()[e.j];
  const double len = diff.norm();
  if (len < kGeomEps) throw std::invalid_argument("zero-length edge");
  Eigen::VectorXd b = Eigen::VectorXd::Zero(3 * mesh.num_vertices());
  b.segment<3>(3 * e.i) = diff / len;
  b.segment<3>(3 * e.j) = -diff / len;
  return b;
}

StiffnessMatrix assemble(const TrussMesh &mesh) {
  StiffnessMatrix A(mesh.num_vertices(), mesh.edges());
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const Edge &edge = mesh.edges()[e];
    const Vec3 diff = mesh.points()[edge.i] - mesh.points()[edge.j];
    const double len = diff.norm();
    if (len < kGeomEps) throw std::invalid_argument("coincident endpoints");
    const Vec3 u = diff / len;
    const Mat3 term = (mesh.gamma()[e] / len) * (u * u.transpose());
    A.diag(edge.i) += term;
    A.diag(edge.j) += term;
    A.offdiag(e) -= term;
  }
  return A;
}

StiffnessMatrix assemble_subtruss(const TrussMesh &mesh,
                                  const std::vector<int> &tet_subset,
                                  const std::vector<int> &vertex_map,
                                  int local_n) {
  std::set<Edge> sub_edges_global;
  for (int t : tet_subset) {
    const auto v = mesh.tets()[t].verts();
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j)
        sub_edges_global.insert(Edge(v[i], v[j]));
  }
  std::vector<Edge> local_edges;
  std::vector<const Edge *> global_of;
  for (const auto &e : sub_edges_global) {
    const int li = vertex_map[e.i], lj = vertex_map[e.j];
    if (li < 0 || lj < 0)
      throw std::invalid_argument("vertex_map misses a subtruss vertex");
    local_edges.emplace_back(li, lj);
    global_of.push_back(&e);
  }
  // Keep (local edge, global edge) association under the local sort order.
  std::vector<int> order(local_edges.size());
  for (size_t k = 0; k < order.size(); ++k) order[k] = static_cast<int>(k);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return local_edges[a] < local_edges[b];
  });
  std::vector<Edge> sorted_edges;
  sorted_edges.reserve(order.size());
  for (int k : order) sorted_edges.push_back(local_edges[k]);

  StiffnessMatrix A(local_n, sorted_edges);
  for (size_t pos = 0; pos < order.size(); ++pos) {
    const Edge &ge = *global_of[order[pos]];
    const Vec3 diff = mesh.points()[ge.i] - mesh.points()[ge.j];
    const double len = diff.norm();
    const Vec3 u = diff / len;
    // u u^T is symmetric, so block orientation is immaterial.
    Mat3 term = (mesh.gamma_of(ge) / len) * (u * u.transpose());
    const Edge &le = sorted_edges[pos];
    A.diag(le.i) += term;
    A.diag(le.j) += term;
    A.offdiag(static_cast<int>(pos)) -= term;
  }
  return A;
}

RigidBodyBasis rigid_body_basis(const std::vector<Vec3> &points, int center) {
  const int n = static_cast<int>(points.size());
  if (center < 0 || center >= n) throw std::invalid_argument("bad center");
  RigidBodyBasis basis;
  basis.raw.assign(6, Eigen::VectorXd::Zero(3 * n));
  for (int i = 0; i < n; ++i) {
    basis.raw[0](3 * i + 0) = 1.0;  // p^x
    basis.raw[1](3 * i + 1) = 1.0;  // p^y
    basis.raw[2](3 * i + 2) = 1.0;  // p^z
    const Vec3 d = points[i] - points[center];
    basis.raw[3].segment<3>(3 * i) = Vec3(-d.y(), d.x(), 0.0);   // perp xy
    basis.raw[4].segment<3>(3 * i) = Vec3(-d.z(), 0.0, d.x());   // perp xz
    basis.raw[5].segment<3>(3 * i) = Vec3(0.0, -d.z(), d.y());   // perp yz
  }
  // Modified Gram-Schmidt; near-zero vectors (degenerate geometry) dropped.
  for (const auto &v : basis.raw) {
    Eigen::VectorXd w = v;
    for (const auto &q : basis.orthonormal) w -= q.dot(w) * q;
    for (const auto &q : basis.orthonormal) w -= q.dot(w) * q;  // second pass
    const double norm = w.norm();
    if (norm > 1e-12 * std::sqrt(static_cast<double>(n)))
      basis.orthonormal.push_back(w / norm);
  }
  return basis;
}

RigidBodyBasis rigid_body_basis(const TrussMesh &mesh, int center) {
  return rigid_body_basis(mesh.points(), center);
}

Mat3 rotation_operator(const Vec3 &v) {
  Mat3 q;
  q << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
      -v.y(), v.x(), 0.0;
  return q;
}

Eigen::VectorXd project_out_null(const Eigen::VectorXd &x,
                                 const RigidBodyBasis &basis) {
  Eigen::VectorXd y = x;
  for (const auto &q : basis.orthonormal) {
    if (q.size() != x.size()) throw std::invalid_argument("dimension mismatch");
    y -= q.dot(y) * q;
  }
  return y;
}

void write_matrix_market(std::ostream &os, const StiffnessMatrix &A) {
  os << "%%MatrixMarket matrix coordinate real symmetric\n";
  // Count structurally stored entries of the lower triangle.
  const int n = A.num_vertices();
  int64_t nnz = 0;
  for (int i = 0; i < n; ++i) nnz += 6;  // lower triangle of each diag block
  nnz += static_cast<int64_t>(A.edges().size()) * 9;
  os << A.dim() << " " << A.dim() << " " << nnz << "\n";
  os.precision(17);
  for (int i = 0; i < n; ++i)
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c <= r; ++c)
        os << 3 * i + r + 1 << " " << 3 * i + c + 1 << " " << A.diag(i)(r, c)
           << "\n";
  for (size_t e = 0; e < A.edges().size(); ++e) {
    const auto &[i, j] = A.edges()[e];
    // (j, i) lower-triangle blocks; stored block is (i, j).
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        os << 3 * j + r + 1 << " " << 3 * i + c + 1 << " "
           << A.offdiag(static_cast<int>(e)).transpose()(r, c) << "\n";
  }
}

}  // namespace truss
