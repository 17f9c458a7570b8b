#include "truss/oracle.hpp"

#include <stdexcept>

namespace truss::oracle {

EigResult dense_eig(const Eigen::MatrixXd &m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("non-square matrix");
  // Symmetrize so tiny asymmetries from accumulation do not leak in.
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("eigensolver did not converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

int numerical_rank(const Eigen::MatrixXd &m, double threshold) {
  const EigResult eig = dense_eig(m);
  const double scale = eig.values.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0;
  int rank = 0;
  for (int i = 0; i < eig.values.size(); ++i)
    if (std::abs(eig.values(i)) > threshold * scale) ++rank;
  return rank;
}

double min_nonzero_eigenvalue(const Eigen::MatrixXd &m, double threshold) {
  const EigResult eig = dense_eig(m);
  const double scale = eig.values.cwiseAbs().maxCoeff();
  for (int i = 0; i < eig.values.size(); ++i)
    if (std::abs(eig.values(i)) > threshold * scale) return eig.values(i);
  throw std::runtime_error("matrix is numerically zero");
}

Eigen::MatrixXd dense_schur(const Eigen::MatrixXd &m,
                            const std::vector<int> &keep) {
  const int n = static_cast<int>(m.rows());
  std::vector<char> kept(n, 0);
  for (int i : keep) {
    if (i < 0 || i >= n) throw std::invalid_argument("keep index out of range");
    if (kept[i]) throw std::invalid_argument("duplicate keep index");
    kept[i] = 1;
  }
  std::vector<int> elim;
  for (int i = 0; i < n; ++i)
    if (!kept[i]) elim.push_back(i);
  if (elim.empty()) return m;

  const int t = static_cast<int>(keep.size());
  const int s = static_cast<int>(elim.size());
  Eigen::MatrixXd a_ss(s, s), a_st(s, t), a_tt(t, t);
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j) a_ss(i, j) = m(elim[i], elim[j]);
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < t; ++j) a_st(i, j) = m(elim[i], keep[j]);
  for (int i = 0; i < t; ++i)
    for (int j = 0; j < t; ++j) a_tt(i, j) = m(keep[i], keep[j]);

  // Pseudo-inverse of the eliminated block.
  const EigResult eig = dense_eig(a_ss);
  const double scale = std::max(eig.values.cwiseAbs().maxCoeff(), 1e-300);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(s);
  for (int i = 0; i < s; ++i)
    if (std::abs(eig.values(i)) > 1e-12 * scale) inv(i) = 1.0 / eig.values(i);
  const Eigen::MatrixXd a_ss_pinv =
      eig.vectors * inv.asDiagonal() * eig.vectors.transpose();
  Eigen::MatrixXd sc = a_tt - a_st.transpose() * a_ss_pinv * a_st;
  return 0.5 * (sc + sc.transpose());
}

Eigen::VectorXd pinv_solve(const Eigen::MatrixXd &m, const Eigen::VectorXd &b,
                           double threshold) {
  if (m.rows() != b.size()) throw std::invalid_argument("dimension mismatch");
  const EigResult eig = dense_eig(m);
  const double scale = std::max(eig.values.cwiseAbs().maxCoeff(), 1e-300);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size());
  const Eigen::VectorXd proj = eig.vectors.transpose() * b;
  for (int i = 0; i < eig.values.size(); ++i)
    if (std::abs(eig.values(i)) > threshold * scale)
      x += (proj(i) / eig.values(i)) * eig.vectors.col(i);
  return x;
}

PencilResult generalized_condition(const Eigen::MatrixXd &a,
                                   const Eigen::MatrixXd &b,
                                   double rank_threshold, double null_tol) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("dimension mismatch");
  const EigResult eig_b = dense_eig(b);
  const double scale_b = eig_b.values.cwiseAbs().maxCoeff();
  const double scale_a = a.cwiseAbs().maxCoeff();

  std::vector<int> range_idx, null_idx;
  for (int i = 0; i < eig_b.values.size(); ++i) {
    if (std::abs(eig_b.values(i)) > rank_threshold * scale_b)
      range_idx.push_back(i);
    else
      null_idx.push_back(i);
  }
  if (range_idx.empty()) throw std::invalid_argument("zero preconditioner");

  // Null-space agreement: A must annihilate the null vectors of B.
  for (int i : null_idx) {
    const double res = (a * eig_b.vectors.col(i)).norm();
    if (res > null_tol * std::max(scale_a, 1.0))
      throw std::invalid_argument("null-space mismatch between pencil members");
  }

  const int r = static_cast<int>(range_idx.size());
  Eigen::MatrixXd v(a.rows(), r);
  Eigen::VectorXd d(r);
  for (int i = 0; i < r; ++i) {
    v.col(i) = eig_b.vectors.col(range_idx[i]);
    d(i) = 1.0 / std::sqrt(eig_b.values(range_idx[i]));
  }
  const Eigen::MatrixXd pencil =
      d.asDiagonal() * (v.transpose() * a * v) * d.asDiagonal();
  const EigResult eig_p = dense_eig(pencil);
  PencilResult result;
  result.lambda_min = eig_p.values(0);
  result.lambda_max = eig_p.values(eig_p.values.size() - 1);
  return result;
}

}  // namespace truss::oracle
