#include "truss/solve.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "truss/dissect.hpp"
#include "truss/hollow.hpp"
#include "truss/oracle.hpp"

namespace truss {

namespace {

constexpr double kSmallAspectThreshold = 8.0;
constexpr double kBreakdownTol = 1e-14;

double now_ms() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double, std::milli>(
             clock::now().time_since_epoch())
      .count();
}

double lanczos_kappa(const std::vector<double> &alphas,
                     const std::vector<double> &betas) {
  const int m = static_cast<int>(alphas.size());
  if (m == 0) return 0.0;
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    t(i, i) = 1.0 / alphas[i];
    if (i > 0) t(i, i) += betas[i - 1] / alphas[i - 1];
    if (i + 1 < m) {
      const double off = std::sqrt(std::max(betas[i], 0.0)) / alphas[i];
      t(i, i + 1) = off;
      t(i + 1, i) = off;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
  const auto &ev = es.eigenvalues();
  const double hi = ev(m - 1);
  double lo = hi;
  for (int i = 0; i < m; ++i)
    if (ev(i) > 1e-12 * hi) {
      lo = ev(i);
      break;
    }
  return lo > 0.0 ? hi / lo : 0.0;
}

}  // namespace

std::pair<Eigen::VectorXd, PcgReport> pcg(const LinearOperator &apply_a,
                                          const LinearOperator &solve_b,
                                          const Eigen::VectorXd &b, double eps,
                                          const RigidBodyBasis &null_basis,
                                          int max_iters) {
  PcgReport rep;
  const Eigen::VectorXd pb = project_out_null(b, null_basis);
  const double pb_norm = pb.norm();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size());
  if (pb_norm <= 1e-14 * b.norm()) {
    rep.converged = true;
    return {x, rep};
  }
  const double target = eps * pb_norm;

  Eigen::VectorXd r = pb;
  Eigen::VectorXd z = project_out_null(solve_b(r), null_basis);
  Eigen::VectorXd p = z;
  double rz = r.dot(z);
  std::vector<double> alphas, betas;
  rep.residual_history.push_back(r.norm());

  for (int it = 0; it < max_iters; ++it) {
    const Eigen::VectorXd ap = apply_a(p);
    const double pap = p.dot(ap);
    if (pap <= 0.0) {
      if (pap < -kBreakdownTol * p.squaredNorm())
        throw std::runtime_error("pcg breakdown: p'Ap < 0");
      // Search direction fell into the null space; residual should be done.
      break;
    }
    const double alpha = rz / pap;
    x += alpha * p;
    r -= alpha * ap;
    r = project_out_null(r, null_basis);
    rep.iterations = it + 1;
    alphas.push_back(alpha);

    if ((it + 1) % 10 == 0) r = project_out_null(pb - apply_a(x), null_basis);
    const double rnorm = r.norm();
    rep.residual_history.push_back(rnorm);
    if (rnorm <= target) {
      // Confirm on the recomputed residual before declaring victory.
      r = project_out_null(pb - apply_a(x), null_basis);
      rep.residual_history.back() = r.norm();
      if (r.norm() <= target) {
        rep.converged = true;
        break;
      }
    }
    z = project_out_null(solve_b(r), null_basis);
    const double rz_new = r.dot(z);
    const double beta = rz_new / rz;
    betas.push_back(beta);
    p = z + beta * p;
    rz = rz_new;
  }

  rep.final_relative_residual =
      project_out_null(pb - apply_a(x), null_basis).norm() / pb_norm;
  rep.kappa_estimate = lanczos_kappa(alphas, betas);
  return {x, rep};
}

ResolvedParameters choose_parameters(const TrussMesh &mesh,
                                     const std::vector<OrientedBox> &boxes,
                                     const SolverConfig &config) {
  const int k = static_cast<int>(boxes.size());
  ResolvedParameters out;
  out.chunk_aspect.resize(k);
  out.r.assign(k, 0.0);

  const auto &chunks = mesh.chunks();
  std::vector<std::vector<int>> chunk_tets;
  if (!chunks.empty()) {
    chunk_tets = chunks;
  } else {
    chunk_tets.emplace_back(mesh.num_tets());
    std::iota(chunk_tets.back().begin(), chunk_tets.back().end(), 0);
  }
  if (static_cast<int>(chunk_tets.size()) != k)
    throw std::invalid_argument("one box per chunk required");

  std::vector<int> chunk_n(k, 0);
  for (int i = 0; i < k; ++i) {
    std::vector<char> seen(mesh.num_vertices(), 0);
    for (int t : chunk_tets[i])
      for (int v : mesh.tets()[t].verts())
        if (!seen[v]) {
          seen[v] = 1;
          ++chunk_n[i];
        }
    out.chunk_aspect[i] = boxes[i].aspect_ratio();
  }

  out.small_aspect_regime = true;
  for (double a : out.chunk_aspect)
    if (a > kSmallAspectThreshold) out.small_aspect_regime = false;

  out.c_alpha = config.c_alpha > 0.0
                    ? config.c_alpha
                    : (out.small_aspect_regime ? 1.0 / 3.0 : 1.0 / 3.0);
  out.c_r = config.c_r > 0.0 ? config.c_r
                             : (out.small_aspect_regime ? 0.5 : 1.0 / 3.0);
  if (config.l > 0) {
    out.l = config.l;
  } else if (out.small_aspect_regime) {
    out.l = std::max(1, static_cast<int>(std::ceil(std::cbrt(double(k)))));
  } else {
    out.l = static_cast<int>(
        std::ceil(std::pow(double(mesh.num_vertices()), 1.0 / 6.0)));
  }

  for (int i = 0; i < k; ++i) {
    const double n_i = chunk_n[i];
    const bool low_aspect =
        out.small_aspect_regime
            ? out.chunk_aspect[i] <= kSmallAspectThreshold
            : out.chunk_aspect[i] <= std::pow(n_i, out.c_alpha);
    if (!low_aspect) continue;
    double r_i = std::pow(n_i, out.c_r);
    if (r_i < 8.0 || r_i > n_i) continue;  // hollowing infeasible, keep whole
    out.hollow_chunks.push_back(i);
    out.r[i] = r_i;
  }
  return out;
}

namespace {

// Nested-dissection order of a chunk's interior vertices: run geometric ND
// on the chunk sub-mesh, keep the interior vertices in that order.
std::vector<int> interior_order_of_chunk(const TrussMesh &mesh,
                                         const InteriorChunk &ic,
                                         uint64_t seed) {
  std::vector<int> verts;
  verts.insert(verts.end(), ic.interior_vertices.begin(),
               ic.interior_vertices.end());
  verts.insert(verts.end(), ic.contact_vertices.begin(),
               ic.contact_vertices.end());
  std::sort(verts.begin(), verts.end());
  std::vector<int> local(mesh.num_vertices(), -1);
  for (size_t i = 0; i < verts.size(); ++i) local[verts[i]] = int(i);

  std::vector<Vec3> pts(verts.size());
  for (size_t i = 0; i < verts.size(); ++i) pts[i] = mesh.points()[verts[i]];
  std::vector<Tetrahedron> tets;
  tets.reserve(ic.tets.size());
  for (int t : ic.tets) {
    Tetrahedron lt = mesh.tets()[t];
    lt.a = local[lt.a];
    lt.b = local[lt.b];
    lt.c = local[lt.c];
    lt.d = local[lt.d];
    tets.push_back(lt);
  }
  TrussMesh sub(std::move(pts), std::move(tets));
  NDConfig cfg;
  cfg.seed = seed;
  const EliminationOrdering ord = nested_dissection(sub, cfg);

  std::vector<char> is_interior(verts.size(), 0);
  for (int v : ic.interior_vertices) is_interior[local[v]] = 1;
  std::vector<int> out;
  out.reserve(ic.interior_vertices.size());
  for (int lv : ord.order)
    if (is_interior[lv]) out.push_back(verts[lv]);
  return out;
}

}  // namespace

std::pair<Eigen::VectorXd, SolveReport> truss_solver(const TrussMesh &mesh,
                                                     const Eigen::VectorXd &f,
                                                     const SolverConfig &config) {
  const int n = mesh.num_vertices();
  if (f.size() != 3 * n) throw std::invalid_argument("rhs dimension mismatch");

  SolveReport rep;
  rep.config = config;
  rep.n = n;

  std::vector<std::vector<int>> chunk_tets = mesh.chunks();
  if (chunk_tets.empty()) {
    chunk_tets.emplace_back(mesh.num_tets());
    std::iota(chunk_tets.back().begin(), chunk_tets.back().end(), 0);
  }
  const int k = static_cast<int>(chunk_tets.size());
  rep.num_chunks = k;

  double t0 = now_ms();
  std::vector<OrientedBox> boxes(k);
  for (int i = 0; i < k; ++i) boxes[i] = bounding_box(mesh, chunk_tets[i]);
  rep.params = choose_parameters(mesh, boxes, config);

  // Hollow the selected chunks; infeasible geometry keeps a chunk whole.
  std::vector<Hollowing> hollowings;
  std::vector<int> hollowed_chunks;
  for (int i : rep.params.hollow_chunks) {
    try {
      hollowings.push_back(hollow(mesh, chunk_tets[i], boxes[i],
                                  rep.params.r[i]));
      hollowed_chunks.push_back(i);
    } catch (const std::exception &) {
      rep.params.r[i] = 0.0;
    }
  }
  rep.wall_ms["hollow"] = now_ms() - t0;

  // Interior elimination order, chunk by chunk.
  t0 = now_ms();
  std::vector<int> interior_order;
  for (const Hollowing &h : hollowings)
    for (const InteriorChunk &ic : h.interior_chunks) {
      const auto sub = interior_order_of_chunk(mesh, ic, config.seed);
      interior_order.insert(interior_order.end(), sub.begin(), sub.end());
    }
  rep.interior_vertices = static_cast<int>(interior_order.size());

  const StiffnessMatrix a = assemble(mesh);
  const RigidBodyBasis full_null = rigid_body_basis(mesh);
  const Eigen::VectorXd pf = project_out_null(f, full_null);
  const double pf_norm = pf.norm();
  if (pf_norm <= 1e-14 * f.norm()) {
    rep.converged = true;
    rep.wall_ms["eliminate"] = now_ms() - t0;
    return {Eigen::VectorXd::Zero(3 * n), rep};
  }

  PartialElimination pe = eliminate_subset(a, interior_order);
  const int nt = n - rep.interior_vertices;
  rep.precond_vertices = nt;
  rep.flops["eliminate"] = pe.flops;
  rep.schur_nnz =
      9 * (int64_t(nt) + 2 * int64_t(pe.sc.edges().size()));
  rep.wall_ms["eliminate"] = now_ms() - t0;

  // Preconditioner truss: hollowings plus the chunks kept whole.
  t0 = now_ms();
  std::vector<char> tet_in_tp(mesh.num_tets(), 0);
  std::vector<char> chunk_hollowed(k, 0);
  for (size_t h = 0; h < hollowings.size(); ++h) {
    chunk_hollowed[hollowed_chunks[h]] = 1;
    for (int t : hollowings[h].tets) tet_in_tp[t] = 1;
  }
  for (int i = 0; i < k; ++i)
    if (!chunk_hollowed[i])
      for (int t : chunk_tets[i]) tet_in_tp[t] = 1;

  std::vector<int> vmap(n, -1);  // global vertex -> boundary rank
  for (int t = 0; t < nt; ++t) vmap[pe.boundary_vertices[t]] = t;

  // Sub-mesh of the preconditioner truss for the ordering; local vertex ids
  // coincide with boundary ranks because both are ascending global order.
  std::vector<Vec3> tp_points(nt);
  for (int t = 0; t < nt; ++t) tp_points[t] = mesh.points()[pe.boundary_vertices[t]];
  std::vector<Tetrahedron> tp_tets;
  std::vector<int> tp_tet_ids;
  std::vector<int> tp_chunk_of;
  for (int i = 0; i < k; ++i)
    for (int t : chunk_tets[i])
      if (tet_in_tp[t]) {
        Tetrahedron lt = mesh.tets()[t];
        lt.a = vmap[lt.a];
        lt.b = vmap[lt.b];
        lt.c = vmap[lt.c];
        lt.d = vmap[lt.d];
        tp_tets.push_back(lt);
        tp_tet_ids.push_back(t);
        tp_chunk_of.push_back(i);
      }
  TrussMesh tp_mesh(std::move(tp_points), std::move(tp_tets));
  std::vector<std::vector<int>> tp_chunks(k);
  for (size_t j = 0; j < tp_chunk_of.size(); ++j)
    tp_chunks[tp_chunk_of[j]].push_back(static_cast<int>(j));
  tp_chunks.erase(std::remove_if(tp_chunks.begin(), tp_chunks.end(),
                                 [](const auto &c) { return c.empty(); }),
                  tp_chunks.end());
  tp_mesh.set_chunks(tp_chunks);

  std::vector<OrientedBox> tp_boxes;
  for (const auto &c : tp_mesh.chunks()) tp_boxes.push_back(bounding_box(tp_mesh, c));

  NDConfig nd_cfg;
  nd_cfg.seed = config.seed;
  const EliminationOrdering ordering =
      convex_truss_union_nd(tp_mesh, tp_boxes, rep.params.l, nd_cfg);
  rep.glue_vertices = ordering.glue_vertex_count;
  rep.wall_ms["order"] = now_ms() - t0;

  // Factor the preconditioner stiffness A_T' under the ordering.
  t0 = now_ms();
  const StiffnessMatrix a_tp = assemble_subtruss(mesh, tp_tet_ids, vmap, nt);
  const SparseFactor fac = factor(a_tp, ordering.order);
  rep.fill_in = 9 * fac.fill_blocks;
  rep.flops["factor"] = fac.flops;
  rep.wall_ms["factor"] = now_ms() - t0;

  if (config.oracle_checks && nt <= 700) {
    const auto pencil = oracle::generalized_condition(pe.sc.dense(), a_tp.dense());
    rep.kappa_oracle = pencil.kappa();
  }

  // PCG on the Schur system, preconditioned by the factored A_T'.
  t0 = now_ms();
  std::vector<Vec3> t_points(nt);
  for (int t = 0; t < nt; ++t) t_points[t] = mesh.points()[pe.boundary_vertices[t]];
  const RigidBodyBasis t_null = rigid_body_basis(t_points);

  const Eigen::VectorXd g = pe.reduce_rhs(pf);
  const double g_norm = project_out_null(g, t_null).norm();
  Eigen::VectorXd x;
  if (g_norm <= 1e-14 * pf_norm) {
    x = pe.expand_solution(Eigen::VectorXd::Zero(3 * nt), pf);
    rep.converged = true;
  } else {
    // The full residual equals the Schur residual after exact
    // back-substitution, so target eps scaled to the full rhs.
    const double eps_pcg = 0.9 * config.eps * pf_norm / g_norm;
    auto apply_sc = [&pe](const Eigen::VectorXd &v) { return pe.sc.apply(v); };
    auto apply_prec = [&fac](const Eigen::VectorXd &v) {
      return solve_factor(fac, v);
    };
    auto [xt, prep] =
        pcg(apply_sc, apply_prec, g, eps_pcg, t_null, config.max_iters);
    rep.iterations = prep.iterations;
    rep.residual_history = prep.residual_history;
    rep.kappa_estimate = prep.kappa_estimate;
    rep.converged = prep.converged;
    x = pe.expand_solution(xt, pf);
    const int64_t per_iter =
        9 * (int64_t(nt) + 2 * int64_t(pe.sc.edges().size())) +
        9 * (int64_t(nt) + 2 * fac.sym.factor_blocks);
    rep.flops["pcg"] = per_iter * rep.iterations;
  }
  rep.final_relative_residual =
      project_out_null(pf - a.apply(x), full_null).norm() / pf_norm;
  if (rep.final_relative_residual > config.eps) rep.converged = false;
  rep.wall_ms["pcg"] = now_ms() - t0;
  return {x, rep};
}

std::string SolveReport::to_json() const {
  nlohmann::json j;
  j["n"] = n;
  j["num_chunks"] = num_chunks;
  j["precond_vertices"] = precond_vertices;
  j["interior_vertices"] = interior_vertices;
  j["glue_vertices"] = glue_vertices;
  j["fill_in"] = fill_in;
  j["schur_nnz"] = schur_nnz;
  j["iterations"] = iterations;
  j["residual_history"] = residual_history;
  j["final_relative_residual"] = final_relative_residual;
  j["kappa_estimate"] = kappa_estimate;
  j["kappa_oracle"] = kappa_oracle;
  j["converged"] = converged;
  j["flops"] = flops;
  j["wall_ms"] = wall_ms;
  j["config"] = {{"eps", config.eps},      {"c_alpha", config.c_alpha},
                 {"c_r", config.c_r},      {"l", config.l},
                 {"seed", config.seed},    {"max_iters", config.max_iters},
                 {"oracle_checks", config.oracle_checks}};
  j["params"] = {{"small_aspect_regime", params.small_aspect_regime},
                 {"c_alpha", params.c_alpha},
                 {"c_r", params.c_r},
                 {"l", params.l},
                 {"chunk_aspect", params.chunk_aspect},
                 {"hollow_chunks", params.hollow_chunks},
                 {"r", params.r}};
  return j.dump(2);
}

}  // namespace truss
