// geometry.hpp: low-level tetrahedron geometry used by mesh validation and
// the hollowing/dissection passes.
#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>

namespace truss {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

constexpr double kGeomEps = 1e-9;
constexpr double kVolEps = 1e-12;

// Signed volume of the tetrahedron (a,b,c,d); positive for a right-handed
// vertex order.
double signed_volume(const Vec3 &a, const Vec3 &b, const Vec3 &c,
                     const Vec3 &d);

struct Sphere {
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
};

// Smallest ball containing the four points. For well-shaped tets this is the
// circumball; for obtuse tets it may be supported by a face or an edge.
Sphere smallest_enclosing_ball(const std::array<Vec3, 4> &pts);

// Radius of the inscribed ball, 3V / (sum of face areas).
double inscribed_radius(const std::array<Vec3, 4> &pts);

// Circumscribed-to-inscribed ball radius ratio (>= 3, equality for the
// regular tetrahedron). Throws std::invalid_argument on a coplanar input.
double tet_aspect_ratio(const Vec3 &a, const Vec3 &b, const Vec3 &c,
                        const Vec3 &d);

// Secondary shape metric: volume / diameter^3.
double tet_volume_diameter_ratio(const Vec3 &a, const Vec3 &b, const Vec3 &c,
                                 const Vec3 &d);

// Separating-axis test for two tetrahedra. Returns true when the interiors
// overlap by more than eps along every candidate axis.
bool tets_interpenetrate(const std::array<Vec3, 4> &t1,
                         const std::array<Vec3, 4> &t2,
                         double eps = kGeomEps);

}  // namespace truss
