#include <doctest.h>

#include <cstdio>
#include <sstream>

#include "test_util.hpp"
#include "truss/mesh.hpp"
#include "truss/mesh_io.hpp"

using namespace truss;

TEST_CASE("mesh json round trip") {
  TrussMesh mesh = generate_union({{2, 2, 2, Eigen::Vector3i(0, 0, 0)},
                                   {2, 2, 2, Eigen::Vector3i(2, 0, 0)}});
  mesh.set_gamma(mesh.edges()[3], 2.5);
  mesh.set_gamma(mesh.edges()[10], 0.125);

  std::ostringstream os;
  write_mesh_json(os, mesh);
  std::istringstream is(os.str());
  const TrussMesh back = read_mesh_json(is);

  REQUIRE(back.num_vertices() == mesh.num_vertices());
  REQUIRE(back.num_tets() == mesh.num_tets());
  REQUIRE(back.chunks().size() == mesh.chunks().size());
  for (int i = 0; i < mesh.num_vertices(); ++i)
    CHECK((back.points()[i] - mesh.points()[i]).norm() <= 1e-15);
  for (int t = 0; t < mesh.num_tets(); ++t) {
    CHECK(back.tets()[t].a == mesh.tets()[t].a);
    CHECK(back.tets()[t].d == mesh.tets()[t].d);
  }
  for (const Edge &e : mesh.edges())
    CHECK(back.gamma_of(e) == doctest::Approx(mesh.gamma_of(e)));
  for (size_t c = 0; c < mesh.chunks().size(); ++c)
    CHECK(back.chunks()[c] == mesh.chunks()[c]);

  SUBCASE("second write is byte-identical") {
    std::ostringstream os2;
    write_mesh_json(os2, back);
    CHECK(os2.str() == os.str());
  }
}

TEST_CASE("json errors name the offending field") {
  auto error_of = [](const std::string &text) {
    std::istringstream is(text);
    try {
      read_mesh_json(is);
    } catch (const std::exception &e) {
      return std::string(e.what());
    }
    return std::string();
  };
  SUBCASE("missing tets") {
    const std::string msg = error_of(R"({"vertices": [[0,0,0]]})");
    CHECK(msg.find("tets") != std::string::npos);
  }
  SUBCASE("vertices of the wrong shape") {
    const std::string msg =
        error_of(R"({"vertices": [[0,0]], "tets": [[0,1,2,3]]})");
    CHECK(msg.find("vertices") != std::string::npos);
  }
  SUBCASE("tet index out of range") {
    const std::string msg =
        error_of(R"({"vertices": [[0,0,0],[1,0,0],[0,1,0],[0,0,1]],
                     "tets": [[0,1,2,9]]})");
    CHECK(msg.find("tet") != std::string::npos);
  }
  SUBCASE("not json at all") {
    CHECK(!error_of("this is not json").empty());
  }
}

TEST_CASE("mesh file round trip") {
  const TrussMesh mesh = testutil::jittered_grid(2, 2, 1, 111);
  const std::string path = "io_roundtrip_test.json";
  write_mesh_file(path, mesh);
  const TrussMesh back = read_mesh_file(path);
  REQUIRE(back.num_vertices() == mesh.num_vertices());
  for (int i = 0; i < mesh.num_vertices(); ++i)
    CHECK((back.points()[i] - mesh.points()[i]).norm() <= 1e-15);
  std::remove(path.c_str());
  CHECK_THROWS(read_mesh_file("definitely_missing_file.json"));
}
