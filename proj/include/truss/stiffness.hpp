// stiffness.hpp: assembly of the 3n x 3n truss stiffness matrix in 3x3-block
// form, the rigid-body null-space basis, and the rotation operator.
#pragma once

#include <iosfwd>
#include <vector>

#include "truss/mesh.hpp"

namespace truss {

// Sparse symmetric 3n x 3n operator. Block (i,j) is nonzero only when edge
// (i,j) exists or i == j; off-diagonal blocks are stored once per edge
// (i < j) as the (i,j) block.
class StiffnessMatrix {
 public:
  StiffnessMatrix(int n, std::vector<Edge> edges)
      : n_(n),
        edges_(std::move(edges)),
        diag_(n, Mat3::Zero()),
        offdiag_(edges_.size(), Mat3::Zero()) {}

  int num_vertices() const { return n_; }
  int dim() const { return 3 * n_; }
  const std::vector<Edge> &edges() const { return edges_; }

  Mat3 &diag(int i) { return diag_[i]; }
  const Mat3 &diag(int i) const { return diag_[i]; }
  Mat3 &offdiag(int e) { return offdiag_[e]; }
  const Mat3 &offdiag(int e) const { return offdiag_[e]; }

  Eigen::VectorXd apply(const Eigen::VectorXd &x) const;
  Eigen::MatrixXd dense() const;

  // Row sum of absolute values; cheap stand-in for a matrix norm.
  double inf_norm() const;

 private:
  int n_;
  std::vector<Edge> edges_;
  std::vector<Mat3> diag_;
  std::vector<Mat3> offdiag_;
};

// Edge vector b^(e): the unit direction at block i, its negation at block j.
Eigen::VectorXd edge_vector(const TrussMesh &mesh, const Edge &e);

// A = sum over edges of (gamma/len) b b^T, summed in edge-sorted order so
// assembly is bit-reproducible.
StiffnessMatrix assemble(const TrussMesh &mesh);

// Same assembly restricted to a tet subset; vertex_map gives the local index
// of each global vertex (size = global n, -1 for absent). The output is
// indexed by local vertices.
StiffnessMatrix assemble_subtruss(const TrussMesh &mesh,
                                  const std::vector<int> &tet_subset,
                                  const std::vector<int> &vertex_map,
                                  int local_n);

struct RigidBodyBasis {
  // Translations p^x, p^y, p^z then rotations p^perp-xy, p^perp-xz,
  // p^perp-yz about the center vertex.
  std::vector<Eigen::VectorXd> raw;
  std::vector<Eigen::VectorXd> orthonormal;
};

RigidBodyBasis rigid_body_basis(const std::vector<Vec3> &points,
                                int center = 0);
RigidBodyBasis rigid_body_basis(const TrussMesh &mesh, int center = 0);

// Cross-product matrix Q_v with Q_v p = v x p.
Mat3 rotation_operator(const Vec3 &v);

// x minus its component in span(basis.orthonormal); idempotent.
Eigen::VectorXd project_out_null(const Eigen::VectorXd &x,
                                 const RigidBodyBasis &basis);

// Matrix Market coordinate real symmetric export, 1-based, lower triangle.
void write_matrix_market(std::ostream &os, const StiffnessMatrix &A);

}  // namespace truss
