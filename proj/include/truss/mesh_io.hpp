// mesh_io.hpp: JSON mesh format.
//
// {"vertices": [[x,y,z],...], "tets": [[a,b,c,d],...],
//  "gamma": {"default": g, "edges": [[i,j,g],...]},
//  "chunks": [[t,...],...]}
//
// chunks is optional (omitted means k = 1); indices are 0-based.
#pragma once

#include <iosfwd>
#include <string>

#include "truss/mesh.hpp"

namespace truss {

TrussMesh read_mesh_json(std::istream &is);
TrussMesh read_mesh_file(const std::string &path);

void write_mesh_json(std::ostream &os, const TrussMesh &mesh);
void write_mesh_file(const std::string &path, const TrussMesh &mesh);

}  // namespace truss
