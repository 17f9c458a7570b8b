// oracle.hpp: dense brute-force reference implementations used by tests and
// optional runtime cross-checks. Deliberately independent of the sparse
// elimination code paths.
#pragma once

#include <Eigen/Dense>
#include <vector>

namespace truss::oracle {

struct EigResult {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // columns
};

EigResult dense_eig(const Eigen::MatrixXd &m);

// Numerical rank with eigenvalues below threshold * |lambda|_max treated as
// zero.
int numerical_rank(const Eigen::MatrixXd &m, double threshold = 1e-8);

// Smallest eigenvalue above threshold * |lambda|_max.
double min_nonzero_eigenvalue(const Eigen::MatrixXd &m,
                              double threshold = 1e-8);

// Schur complement of m onto the index set T (complement eliminated), using
// the pseudo-inverse when the eliminated block is singular.
Eigen::MatrixXd dense_schur(const Eigen::MatrixXd &m,
                            const std::vector<int> &keep);

// Minimum-norm least-squares solution via eigendecomposition.
Eigen::VectorXd pinv_solve(const Eigen::MatrixXd &m, const Eigen::VectorXd &b,
                           double threshold = 1e-10);

struct PencilResult {
  double lambda_min = 0.0;  // over the common range
  double lambda_max = 0.0;
  double kappa() const { return lambda_max / lambda_min; }
};

// Generalized eigenvalue extremes of the pencil (A, B) restricted to
// range(B). Throws when the null spaces disagree beyond null_tol.
PencilResult generalized_condition(const Eigen::MatrixXd &a,
                                   const Eigen::MatrixXd &b,
                                   double rank_threshold = 1e-8,
                                   double null_tol = 1e-6);

}  // namespace truss::oracle
