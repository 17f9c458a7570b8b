// solve.hpp: end-to-end solver: parameter selection, deflated PCG, and the
// hollowing + partial elimination + nested dissection pipeline.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "truss/elim.hpp"
#include "truss/stiffness.hpp"

namespace truss {

struct SolverConfig {
  double eps = 1e-8;     // relative residual target
  double c_alpha = 0.0;  // aspect-ratio exponent threshold, 0 = auto
  double c_r = 0.0;      // hollowing exponent, 0 = auto
  int l = 0;             // top-level separator count, 0 = auto
  uint64_t seed = 0;
  int max_iters = 5000;
  bool oracle_checks = false;
};

struct PcgReport {
  int iterations = 0;
  std::vector<double> residual_history;  // 2-norms of the running residual
  double final_relative_residual = 0.0;  // against the projected rhs
  double kappa_estimate = 0.0;           // from the Lanczos tridiagonal
  bool converged = false;
};

using LinearOperator = std::function<Eigen::VectorXd(const Eigen::VectorXd &)>;

// Deflated preconditioned conjugate gradient. b is projected off
// span(null_basis) before iterating and iterates are re-projected each step;
// the true residual is recomputed every 10 iterations. Throws on breakdown
// (p'Ap <= 0 beyond tolerance); hitting max_iters returns converged = false.
std::pair<Eigen::VectorXd, PcgReport> pcg(const LinearOperator &apply_a,
                                          const LinearOperator &solve_b,
                                          const Eigen::VectorXd &b, double eps,
                                          const RigidBodyBasis &null_basis,
                                          int max_iters);

struct ResolvedParameters {
  bool small_aspect_regime = false;
  double c_alpha = 0.0;
  double c_r = 0.0;
  int l = 0;
  std::vector<double> chunk_aspect;  // bounding-box aspect ratio per chunk
  std::vector<int> hollow_chunks;    // chunks selected for hollowing
  std::vector<double> r;             // per chunk, 0 when kept whole
};

// Regime rules: all chunk boxes below the aspect threshold selects
// r_i = n_i^(1/2); otherwise c_alpha = c_r = 1/3 and l = ceil(n^(1/6)).
// Explicit config values win over the automatic rules.
ResolvedParameters choose_parameters(const TrussMesh &mesh,
                                     const std::vector<OrientedBox> &boxes,
                                     const SolverConfig &config);

struct SolveReport {
  SolverConfig config;
  ResolvedParameters params;
  int n = 0;                      // vertices
  int num_chunks = 0;
  int precond_vertices = 0;       // |T'|
  int interior_vertices = 0;
  int glue_vertices = 0;
  int64_t fill_in = 0;            // scalar fill entries of the factor
  int64_t schur_nnz = 0;          // scalar nonzeros of the Schur complement
  std::map<std::string, int64_t> flops;    // per phase
  std::map<std::string, double> wall_ms;   // per phase
  int iterations = 0;
  std::vector<double> residual_history;
  double final_relative_residual = 0.0;    // full system, vs projected f
  double kappa_estimate = 0.0;
  double kappa_oracle = 0.0;  // dense pencil (Sc, A_T'), oracle_checks only
  bool converged = false;

  std::string to_json() const;
};

std::pair<Eigen::VectorXd, SolveReport> truss_solver(const TrussMesh &mesh,
                                                     const Eigen::VectorXd &f,
                                                     const SolverConfig &config);

}  // namespace truss
