// truss: command-line front end. Subcommands: gen, check, solve, order,
// matrix, hollow-stats, bench. Exit codes: 0 success/converged, 1 input
// error, 2 solver non-convergence.
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>

#include "truss/dissect.hpp"
#include "truss/hollow.hpp"
#include "truss/mesh.hpp"
#include "truss/mesh_io.hpp"
#include "truss/oracle.hpp"
#include "truss/solve.hpp"
#include "truss/stiffness.hpp"

namespace {

using namespace truss;

struct GenChunk {
  int nx = 0, ny = 0, nz = 0;
  Eigen::Vector3i offset = Eigen::Vector3i::Zero();
  bool has_offset = false;
};

GenChunk parse_chunk_spec(const std::string &s) {
  // grid:NX,NY,NZ  or  grid:NX,NY,NZ@OX,OY,OZ
  GenChunk c;
  if (s.rfind("grid:", 0) != 0)
    throw CLI::ValidationError("chunk spec must start with 'grid:': " + s);
  std::string body = s.substr(5);
  std::string dims = body, off;
  const auto at = body.find('@');
  if (at != std::string::npos) {
    dims = body.substr(0, at);
    off = body.substr(at + 1);
    c.has_offset = true;
  }
  auto parse3 = [&s](const std::string &t, int *a, int *b, int *d) {
    char comma1, comma2;
    std::istringstream is(t);
    if (!(is >> *a >> comma1 >> *b >> comma2 >> *d) || comma1 != ',' ||
        comma2 != ',')
      throw CLI::ValidationError("bad triple in chunk spec: " + s);
  };
  parse3(dims, &c.nx, &c.ny, &c.nz);
  if (c.has_offset) {
    int ox, oy, oz;
    parse3(off, &ox, &oy, &oz);
    c.offset << ox, oy, oz;
  }
  return c;
}

void write_solution(const std::string &path, const Eigen::VectorXd &x,
                    const std::string &format) {
  if (format == "txt") {
    std::ofstream os(path);
    os.precision(17);
    for (Eigen::Index i = 0; i < x.size(); ++i) os << x(i) << "\n";
    return;
  }
  std::ofstream os(path, std::ios::binary);
  const uint64_t len = static_cast<uint64_t>(x.size());
  os.write(reinterpret_cast<const char *>(&len), 8);
  os.write(reinterpret_cast<const char *>(x.data()),
           static_cast<std::streamsize>(sizeof(double) * x.size()));
}

Eigen::VectorXd read_rhs(const std::string &path, const std::string &format,
                         int expect) {
  Eigen::VectorXd f;
  if (format == "txt") {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open rhs file: " + path);
    std::vector<double> vals;
    double v;
    while (is >> v) vals.push_back(v);
    f.resize(static_cast<Eigen::Index>(vals.size()));
    for (size_t i = 0; i < vals.size(); ++i) f(static_cast<Eigen::Index>(i)) = vals[i];
  } else {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open rhs file: " + path);
    uint64_t len = 0;
    is.read(reinterpret_cast<char *>(&len), 8);
    f.resize(static_cast<Eigen::Index>(len));
    is.read(reinterpret_cast<char *>(f.data()),
            static_cast<std::streamsize>(sizeof(double) * len));
    if (!is) throw std::runtime_error("truncated rhs file: " + path);
  }
  if (f.size() != expect)
    throw std::runtime_error("rhs dimension mismatch: field 'f' has " +
                             std::to_string(f.size()) + " values, expected " +
                             std::to_string(expect));
  return f;
}

Eigen::VectorXd random_rhs(int dim, uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> gauss;
  Eigen::VectorXd f(dim);
  for (int i = 0; i < dim; ++i) f(i) = gauss(rng);
  return f;
}

void write_ordering(std::ostream &os, const EliminationOrdering &ord) {
  for (const auto &node : ord.nodes) {
    const char *kind = node.kind == NodeKind::kLeaf ? "leaf" : "separator";
    os << "# level " << node.level << " " << kind << "\n";
    for (int v : node.indices) os << v << "\n";
  }
}

// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double> &xs,
                    const std::vector<double> &ys) {
  const size_t m = xs.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < m; ++i) {
    const double lx = std::log(xs[i]), ly = std::log(ys[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = m * sxx - sx * sx;
  return denom != 0.0 ? (m * sxy - sx * sy) / denom : 0.0;
}

int64_t full_nd_baseline_flops(const TrussMesh &mesh, uint64_t seed) {
  NDConfig cfg;
  cfg.seed = seed;
  const EliminationOrdering ord = nested_dissection(mesh, cfg);
  std::vector<std::vector<int>> adj = mesh.vertex_adjacency();
  return fillin_flop_simulate(adj, ord.order).flops;
}

struct BenchRow {
  int n = 0, k = 1;
  double r = 0;
  int l = 0;
  int64_t fill_in = 0, schur_nnz = 0, flops = 0, baseline_flops = 0;
  int iterations = 0;
  double kappa_est = 0;
  double hollow_ms = 0, eliminate_ms = 0, order_ms = 0, factor_ms = 0,
         pcg_ms = 0;
};

const char *kBenchHeader =
    "n,k,r,l,fill_in,schur_nnz,flops,baseline_flops,iterations,kappa_est,"
    "hollow_ms,eliminate_ms,order_ms,factor_ms,pcg_ms";

void emit_row(std::ostream &os, const BenchRow &row) {
  os << row.n << "," << row.k << "," << row.r << "," << row.l << ","
     << row.fill_in << "," << row.schur_nnz << "," << row.flops << ","
     << row.baseline_flops << "," << row.iterations << "," << row.kappa_est
     << "," << row.hollow_ms << "," << row.eliminate_ms << "," << row.order_ms
     << "," << row.factor_ms << "," << row.pcg_ms << "\n";
}

BenchRow run_instance(const TrussMesh &mesh, uint64_t seed, double r_override,
                      bool with_baseline) {
  SolverConfig cfg;
  cfg.seed = seed;
  if (r_override > 0)
    cfg.c_r = std::log(r_override) /
              std::log(double(std::max(mesh.num_vertices(), 2)));
  const Eigen::VectorXd f = random_rhs(3 * mesh.num_vertices(), seed);
  auto [x, rep] = truss_solver(mesh, f, cfg);
  (void)x;
  BenchRow row;
  row.n = mesh.num_vertices();
  row.k = rep.num_chunks;
  row.r = rep.params.r.empty() ? 0.0 : rep.params.r[0];
  row.l = rep.params.l;
  row.fill_in = rep.fill_in;
  row.schur_nnz = rep.schur_nnz;
  for (const auto &[phase, fl] : rep.flops) row.flops += fl;
  row.iterations = rep.iterations;
  row.kappa_est = rep.kappa_estimate;
  auto ms = [&rep](const char *key) {
    auto it = rep.wall_ms.find(key);
    return it == rep.wall_ms.end() ? 0.0 : it->second;
  };
  row.hollow_ms = ms("hollow");
  row.eliminate_ms = ms("eliminate");
  row.order_ms = ms("order");
  row.factor_ms = ms("factor");
  row.pcg_ms = ms("pcg");
  if (with_baseline) row.baseline_flops = full_nd_baseline_flops(mesh, seed);
  return row;
}

int cmd_bench(const std::string &suite, const std::string &out_csv,
              uint64_t seed) {
  std::vector<BenchRow> rows;
  if (suite == "scaling-n") {
    for (int nx : {9, 15, 21}) {
      const TrussMesh mesh = generate_grid_truss(nx, nx, nx);
      rows.push_back(run_instance(mesh, seed, 0.0, true));
    }
  } else if (suite == "scaling-k") {
    for (int k : {2, 4, 8}) {
      std::vector<ChunkSpec> specs;
      for (int i = 0; i < k; ++i)
        specs.push_back({6, 6, 6, Eigen::Vector3i(6 * i, 0, 0)});
      const TrussMesh mesh = generate_union(specs);
      rows.push_back(run_instance(mesh, seed, 0.0, true));
    }
  } else if (suite == "hollow-r") {
    const TrussMesh mesh = generate_grid_truss(11, 11, 11);
    for (double r : {27.0, 64.0, 125.0})
      rows.push_back(run_instance(mesh, seed, r, false));
  } else {
    throw CLI::ValidationError("unknown bench suite: " + suite);
  }

  std::ofstream os(out_csv);
  os.precision(12);
  os << kBenchHeader << "\n";
  for (const auto &row : rows) emit_row(os, row);

  // Fitted log-log exponent row: flops and baseline flops against the
  // scaling variable of the suite.
  std::vector<double> xs, ys, bs;
  for (const auto &row : rows) {
    xs.push_back(suite == "scaling-k" ? double(row.k)
                 : suite == "hollow-r" ? row.r
                                       : double(row.n));
    ys.push_back(double(row.flops));
    bs.push_back(double(std::max<int64_t>(row.baseline_flops, 1)));
  }
  os << "exponent,,,,,," << loglog_slope(xs, ys) << ","
     << (suite == "hollow-r" ? 0.0 : loglog_slope(xs, bs)) << ",,,,,,,\n";
  std::cout << "wrote " << out_csv << " (" << rows.size() << " rows, flop exponent "
            << loglog_slope(xs, ys) << ")\n";
  return 0;
}

int cmd_check(const std::string &mesh_path) {
  const TrussMesh mesh = read_mesh_file(mesh_path);
  const auto validation = validate_edge_simple(mesh);
  std::cout << "vertices: " << mesh.num_vertices() << "\n";
  std::cout << "tets: " << mesh.num_tets() << "\n";
  std::cout << "edges: " << mesh.num_edges() << "\n";
  std::cout << "edge_simple: " << (validation.ok() ? "true" : "false") << "\n";
  if (!validation.ok())
    for (const auto &msg : validation.violations)
      std::cout << "  violation: " << msg << "\n";
  std::cout << "stiffly_connected: "
            << (is_stiffly_connected(mesh) ? "true" : "false") << "\n";
  const double delta = mesh.diameter();
  std::cout << "diameter: " << delta << "\n";

  const int n = mesh.num_vertices();
  if (n <= 700) {
    const Eigen::MatrixXd a = assemble(mesh).dense();
    const int rank = oracle::numerical_rank(a, 1e-8);
    const double lmin = oracle::min_nonzero_eigenvalue(a, 1e-8);
    std::cout << "rank: " << rank << " (3n-6 = " << 3 * n - 6 << ")\n";
    std::cout << "lambda_min: " << lmin << "\n";
    std::cout << "lambda_min*n*diam^4: " << lmin * n * std::pow(delta, 4)
              << "\n";
  } else {
    std::cout << "spectral report skipped (n > 700)\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  if (const char *threads = std::getenv("TRUSS_THREADS"))
    Eigen::setNbThreads(std::max(1, std::atoi(threads)));

  CLI::App app{"truss stiffness solver"};
  app.require_subcommand(1);

  // gen
  auto *gen = app.add_subcommand("gen", "generate a mesh file");
  gen->require_subcommand(1);
  std::string out_path = "mesh.json";
  double gamma = 1.0;
  auto *gen_grid = gen->add_subcommand("grid", "nx x ny x nz cube grid");
  int gnx = 4, gny = 4, gnz = 4;
  gen_grid->add_option("nx", gnx)->required();
  gen_grid->add_option("ny", gny)->required();
  gen_grid->add_option("nz", gnz)->required();
  gen_grid->add_option("-o,--out", out_path);
  gen_grid->add_option("--gamma", gamma);
  auto *gen_union = gen->add_subcommand("union", "glued union of grid chunks");
  std::vector<std::string> chunk_specs;
  std::string glue_axis = "x";
  gen_union->add_option("chunks", chunk_specs, "grid:NX,NY,NZ[@OX,OY,OZ]")
      ->required();
  gen_union->add_option("--glue", glue_axis, "axis for auto offsets (x|y|z)");
  gen_union->add_option("-o,--out", out_path);
  gen_union->add_option("--gamma", gamma);

  // check
  auto *check = app.add_subcommand("check", "validate + spectral report");
  std::string mesh_path;
  check->add_option("mesh", mesh_path)->required();

  // solve
  auto *solve = app.add_subcommand("solve", "run the solver");
  std::string solve_mesh, rhs_path, sol_path = "solution.bin",
                          report_path = "report.json", format = "bin";
  bool use_random_rhs = false;
  SolverConfig scfg;
  solve->add_option("mesh", solve_mesh)->required();
  solve->add_option("--rhs", rhs_path, "rhs file (bin or txt per --format)");
  solve->add_flag("--random-rhs", use_random_rhs);
  solve->add_option("-o,--out", sol_path);
  solve->add_option("--report", report_path);
  solve->add_option("--eps", scfg.eps);
  solve->add_option("--cr", scfg.c_r);
  solve->add_option("--calpha", scfg.c_alpha);
  solve->add_option("--l", scfg.l);
  solve->add_option("--seed", scfg.seed);
  solve->add_option("--max-iters", scfg.max_iters);
  solve->add_option("--format", format)
      ->check(CLI::IsMember({"bin", "txt"}));
  solve->add_flag("--oracle", scfg.oracle_checks);

  // order
  auto *order = app.add_subcommand("order", "export an elimination ordering");
  std::string order_mesh, order_out = "ordering.txt";
  int order_l = 0;
  uint64_t order_seed = 0;
  order->add_option("mesh", order_mesh)->required();
  order->add_option("-o,--out", order_out);
  order->add_option("--l", order_l);
  order->add_option("--seed", order_seed);

  // matrix
  auto *matrix = app.add_subcommand("matrix", "export the stiffness matrix");
  std::string matrix_mesh, matrix_out = "stiffness.mtx";
  matrix->add_option("mesh", matrix_mesh)->required();
  matrix->add_option("-o,--out", matrix_out);

  // hollow-stats
  auto *hstats = app.add_subcommand("hollow-stats", "hollowing size metrics");
  std::string hs_mesh, hs_out = "hollow-stats.csv";
  double hs_r = 27.0;
  bool hs_oracle = false;
  hstats->add_option("mesh", hs_mesh)->required();
  hstats->add_option("--r", hs_r);
  hstats->add_option("-o,--out", hs_out);
  hstats->add_flag("--oracle", hs_oracle);

  // bench
  auto *bench = app.add_subcommand("bench", "run a benchmark suite");
  std::string suite, bench_out = "bench.csv";
  uint64_t bench_seed = 0;
  bench->add_option("suite", suite, "scaling-n | scaling-k | hollow-r")
      ->required();
  bench->add_option("out", bench_out);
  bench->add_option("--seed", bench_seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen_grid->parsed()) {
      write_mesh_file(out_path, generate_grid_truss(gnx, gny, gnz, gamma));
      std::cout << "wrote " << out_path << "\n";
      return 0;
    }
    if (gen_union->parsed()) {
      int axis = glue_axis == "x" ? 0 : glue_axis == "y" ? 1 : glue_axis == "z" ? 2 : -1;
      if (axis < 0) throw std::runtime_error("bad --glue axis: " + glue_axis);
      std::vector<ChunkSpec> specs;
      Eigen::Vector3i cursor = Eigen::Vector3i::Zero();
      for (const auto &raw : chunk_specs) {
        const GenChunk c = parse_chunk_spec(raw);
        ChunkSpec s{c.nx, c.ny, c.nz, c.has_offset ? c.offset : cursor};
        specs.push_back(s);
        if (!c.has_offset)
          cursor(axis) += axis == 0 ? c.nx : axis == 1 ? c.ny : c.nz;
        else
          cursor = c.offset;
      }
      write_mesh_file(out_path, generate_union(specs, gamma));
      std::cout << "wrote " << out_path << "\n";
      return 0;
    }
    if (check->parsed()) return cmd_check(mesh_path);
    if (solve->parsed()) {
      const TrussMesh mesh = read_mesh_file(solve_mesh);
      Eigen::VectorXd f;
      if (use_random_rhs)
        f = random_rhs(3 * mesh.num_vertices(), scfg.seed);
      else if (!rhs_path.empty())
        f = read_rhs(rhs_path, format, 3 * mesh.num_vertices());
      else
        throw std::runtime_error("missing rhs: pass --rhs or --random-rhs");
      auto [x, rep] = truss_solver(mesh, f, scfg);
      write_solution(sol_path, x, format);
      std::ofstream(report_path) << rep.to_json() << "\n";
      std::cout << "iterations: " << rep.iterations
                << ", relative residual: " << rep.final_relative_residual
                << "\n";
      if (scfg.oracle_checks && mesh.num_vertices() <= 700) {
        const Eigen::MatrixXd a = assemble(mesh).dense();
        const RigidBodyBasis basis = rigid_body_basis(mesh);
        const Eigen::VectorXd pf = project_out_null(f, basis);
        const Eigen::VectorXd x_ref = oracle::pinv_solve(a, pf);
        const Eigen::VectorXd d = x - x_ref;
        const double num = std::sqrt(std::max(0.0, d.dot(a * d)));
        const double den = std::sqrt(std::max(1e-300, x_ref.dot(a * x_ref)));
        std::cout << "oracle A-norm relative error: " << num / den << "\n";
      }
      return rep.converged ? 0 : 2;
    }
    if (order->parsed()) {
      const TrussMesh mesh = read_mesh_file(order_mesh);
      std::vector<std::vector<int>> chunks = mesh.chunks();
      if (chunks.empty()) {
        chunks.emplace_back(mesh.num_tets());
        std::iota(chunks.back().begin(), chunks.back().end(), 0);
      }
      std::vector<OrientedBox> boxes;
      for (const auto &c : chunks) boxes.push_back(bounding_box(mesh, c));
      NDConfig cfg;
      cfg.seed = order_seed;
      const auto ord = convex_truss_union_nd(mesh, boxes, order_l, cfg);
      std::ofstream os(order_out);
      write_ordering(os, ord);
      std::cout << "wrote " << order_out << "\n";
      return 0;
    }
    if (matrix->parsed()) {
      const TrussMesh mesh = read_mesh_file(matrix_mesh);
      std::ofstream os(matrix_out);
      write_matrix_market(os, assemble(mesh));
      std::cout << "wrote " << matrix_out << "\n";
      return 0;
    }
    if (hstats->parsed()) {
      const TrussMesh mesh = read_mesh_file(hs_mesh);
      const Hollowing h = hollow(mesh, hs_r);
      std::vector<int> all_tets(mesh.num_tets());
      std::iota(all_tets.begin(), all_tets.end(), 0);
      const bool oracle_ok = hs_oracle && mesh.num_vertices() <= 700;
      const auto metrics = verify_hollowing(mesh, all_tets, h, 0, oracle_ok);
      std::ofstream os(hs_out);
      os << "n,r,hollow_tets,hollow_points,max_chunk_vertices,"
            "max_chunk_contacts,kappa\n";
      os << mesh.num_vertices() << "," << hs_r << "," << metrics.hollow_tets
         << "," << metrics.point_count << "," << metrics.max_chunk_vertices
         << "," << metrics.max_chunk_contacts << ",";
      if (metrics.kappa) os << *metrics.kappa;
      os << "\n";
      std::cout << "wrote " << hs_out << "\n";
      return 0;
    }
    if (bench->parsed()) return cmd_bench(suite, bench_out, bench_seed);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
