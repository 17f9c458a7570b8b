// elim.hpp: sparse symmetric elimination in 3x3 vertex blocks: Cholesky
// factorization under a given ordering, partial elimination producing Schur
// complements onto boundary sets, triangular solves.
#pragma once

#include <cstdint>
#include <vector>

#include "truss/dissect.hpp"
#include "truss/stiffness.hpp"

namespace truss {

// Sc and other reduced operators share the stiffness matrix's block-sparse
// symmetric layout.
using BlockMatrix = StiffnessMatrix;

constexpr double kPivEps = 1e-10;  // relative to the largest diagonal entry

struct SparseFactor {
  SymbolicFactor sym;
  int n = 0;  // block columns
  std::vector<Mat3> diag;                 // L_jj per permuted column
  std::vector<std::vector<Mat3>> below;   // aligned with sym.patterns[j]
  std::vector<int> zeroed_pivots;         // permuted scalar indices
  int64_t fill_blocks = 0;
  int64_t flops = 0;
};

// Numeric factorization P A P^T = L L^T following the symbolic pattern.
// Pivots below piv_eps * max(diag(A)) are zeroed and logged; pivots below
// the negated tolerance throw (input not PSD).
SparseFactor factor(const BlockMatrix &a, const std::vector<int> &ordering,
                    double piv_eps = kPivEps);

// x with A x = b on range(A); zeroed-pivot components are dropped.
Eigen::VectorXd solve_factor(const SparseFactor &f, const Eigen::VectorXd &b);

struct PartialElimination {
  SparseFactor interior;              // columns 0..num_interior-1 populated
  int num_interior = 0;               // |S| in block columns
  std::vector<int> interior_vertices;   // elimination order over S
  std::vector<int> boundary_vertices;   // T, ascending; local index = rank
  BlockMatrix sc;                     // Schur complement, local T indexing
  int64_t flops = 0;

  PartialElimination() : sc(0, {}) {}

  // g = b_T - A_TS A_SS^{-1} b_S, in local T indexing.
  Eigen::VectorXd reduce_rhs(const Eigen::VectorXd &b) const;
  // Full-length solution from boundary values: back-substitutes the
  // interior unknowns.
  Eigen::VectorXd expand_solution(const Eigen::VectorXd &x_t,
                                  const Eigen::VectorXd &b) const;
};

// Eliminate the vertex set S (given in elimination order) from A; the
// interior block must be strictly positive definite, a tiny pivot throws.
PartialElimination eliminate_subset(const BlockMatrix &a,
                                    const std::vector<int> &interior_order,
                                    double piv_eps = kPivEps);

// Vertex adjacency lists of a block matrix's off-diagonal structure.
std::vector<std::vector<int>> block_adjacency(const BlockMatrix &a);

}  // namespace truss
