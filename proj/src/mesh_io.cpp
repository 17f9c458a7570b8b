#include "truss/mesh_io.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace truss {

using nlohmann::json;

TrussMesh read_mesh_json(std::istream &is) {
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error &e) {
    throw std::invalid_argument(std::string("malformed JSON: ") + e.what());
  }

  if (!j.contains("vertices") || !j["vertices"].is_array())
    throw std::invalid_argument("missing or invalid field: vertices");
  if (!j.contains("tets") || !j["tets"].is_array())
    throw std::invalid_argument("missing or invalid field: tets");

  std::vector<Vec3> points;
  for (const auto &v : j["vertices"]) {
    if (!v.is_array() || v.size() != 3)
      throw std::invalid_argument("invalid entry in field: vertices");
    points.emplace_back(v[0].get<double>(), v[1].get<double>(),
                        v[2].get<double>());
  }
  std::vector<Tetrahedron> tets;
  for (const auto &t : j["tets"]) {
    if (!t.is_array() || t.size() != 4)
      throw std::invalid_argument("invalid entry in field: tets");
    tets.push_back({t[0].get<int>(), t[1].get<int>(), t[2].get<int>(),
                    t[3].get<int>()});
  }

  double default_gamma = 1.0;
  if (j.contains("gamma")) {
    if (!j["gamma"].is_object())
      throw std::invalid_argument("invalid field: gamma");
    default_gamma = j["gamma"].value("default", 1.0);
  }

  TrussMesh mesh(std::move(points), std::move(tets), default_gamma);

  if (j.contains("gamma") && j["gamma"].contains("edges")) {
    for (const auto &e : j["gamma"]["edges"]) {
      if (!e.is_array() || e.size() != 3)
        throw std::invalid_argument("invalid entry in field: gamma.edges");
      mesh.set_gamma(Edge(e[0].get<int>(), e[1].get<int>()),
                     e[2].get<double>());
    }
  }

  if (j.contains("chunks")) {
    if (!j["chunks"].is_array())
      throw std::invalid_argument("invalid field: chunks");
    std::vector<std::vector<int>> chunks;
    for (const auto &c : j["chunks"])
      chunks.push_back(c.get<std::vector<int>>());
    mesh.set_chunks(std::move(chunks));
  }
  return mesh;
}

TrussMesh read_mesh_file(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot open mesh file: " + path);
  return read_mesh_json(is);
}

void write_mesh_json(std::ostream &os, const TrussMesh &mesh) {
  json j;
  j["vertices"] = json::array();
  for (const auto &p : mesh.points())
    j["vertices"].push_back({p.x(), p.y(), p.z()});
  j["tets"] = json::array();
  for (const auto &t : mesh.tets()) j["tets"].push_back({t.a, t.b, t.c, t.d});

  // Emit the default plus only the deviating edges.
  double default_gamma = mesh.gamma().empty() ? 1.0 : mesh.gamma()[0];
  j["gamma"]["default"] = default_gamma;
  json edges = json::array();
  for (int e = 0; e < mesh.num_edges(); ++e)
    if (mesh.gamma()[e] != default_gamma)
      edges.push_back({mesh.edges()[e].i, mesh.edges()[e].j, mesh.gamma()[e]});
  if (!edges.empty()) j["gamma"]["edges"] = edges;

  if (!mesh.chunks().empty()) j["chunks"] = mesh.chunks();
  os << j.dump() << "\n";
}

void write_mesh_file(const std::string &path, const TrussMesh &mesh) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write mesh file: " + path);
  write_mesh_json(os, mesh);
}

}  // namespace truss
