#include "truss/geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace truss {

double signed_volume(const Vec3 &a, const Vec3 &b, const Vec3 &c,
                     const Vec3 &d) {
  return (b - a).cross(c - a).dot(d - a) / 6.0;
}

namespace {

// Ball with the segment pq as diameter.
Sphere ball_from_2(const Vec3 &p, const Vec3 &q) {
  Sphere s;
  s.center = 0.5 * (p + q);
  s.radius = 0.5 * (p - q).norm();
  return s;
}

// Smallest ball through three points: circumcircle of the triangle, center
// in the triangle plane.
std::optional<Sphere> ball_from_3(const Vec3 &a, const Vec3 &b, const Vec3 &c) {
  const Vec3 ab = b - a, ac = c - a;
  const Vec3 n = ab.cross(ac);
  const double n2 = n.squaredNorm();
  if (n2 < kVolEps * kVolEps) return std::nullopt;  // collinear
  const Vec3 to_center =
      (ab.squaredNorm() * n.cross(ac) + ac.squaredNorm() * ab.cross(n)) /
      (2.0 * n2);
  Sphere s;
  s.center = a + to_center;
  s.radius = to_center.norm();
  return s;
}

// Circumsphere of four non-coplanar points.
std::optional<Sphere> ball_from_4(const std::array<Vec3, 4> &p) {
  Mat3 m;
  Vec3 rhs;
  for (int i = 0; i < 3; ++i) {
    m.row(i) = 2.0 * (p[i + 1] - p[0]).transpose();
    rhs(i) = p[i + 1].squaredNorm() - p[0].squaredNorm();
  }
  const double det = m.determinant();
  if (std::abs(det) < kVolEps) return std::nullopt;
  Sphere s;
  s.center = m.partialPivLu().solve(rhs);
  s.radius = (s.center - p[0]).norm();
  return s;
}

bool contains_all(const Sphere &s, const std::array<Vec3, 4> &pts,
                  double slack) {
  for (const auto &p : pts)
    if ((p - s.center).norm() > s.radius + slack) return false;
  return true;
}

}  // namespace

Sphere smallest_enclosing_ball(const std::array<Vec3, 4> &pts) {
  const double scale = [&] {
    double m = 0.0;
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) m = std::max(m, (pts[i] - pts[j]).norm());
    return m;
  }();
  const double slack = 1e-12 * std::max(scale, 1.0);

  std::vector<Sphere> candidates;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      candidates.push_back(ball_from_2(pts[i], pts[j]));
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      for (int k = j + 1; k < 4; ++k)
        if (auto s = ball_from_3(pts[i], pts[j], pts[k]))
          candidates.push_back(*s);
  if (auto s = ball_from_4(pts)) candidates.push_back(*s);

  const Sphere *best = nullptr;
  for (const auto &s : candidates) {
    if (!contains_all(s, pts, slack)) continue;
    if (!best || s.radius < best->radius) best = &s;
  }
  if (!best) throw std::invalid_argument("degenerate point set");
  return *best;
}

double inscribed_radius(const std::array<Vec3, 4> &p) {
  const double vol = std::abs(signed_volume(p[0], p[1], p[2], p[3]));
  double area = 0.0;
  static const int faces[4][3] = {{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}};
  for (const auto &f : faces) {
    area += 0.5 *
            (p[f[1]] - p[f[0]]).cross(p[f[2]] - p[f[0]]).norm();
  }
  if (area <= 0.0) throw std::invalid_argument("degenerate tetrahedron");
  return 3.0 * vol / area;
}

double tet_aspect_ratio(const Vec3 &a, const Vec3 &b, const Vec3 &c,
                        const Vec3 &d) {
  const std::array<Vec3, 4> pts{a, b, c, d};
  double scale = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      scale = std::max(scale, (pts[i] - pts[j]).norm());
  const double vol = std::abs(signed_volume(a, b, c, d));
  if (vol <= kVolEps * scale * scale * scale)
    throw std::invalid_argument("coplanar tetrahedron");
  return smallest_enclosing_ball(pts).radius / inscribed_radius(pts);
}

double tet_volume_diameter_ratio(const Vec3 &a, const Vec3 &b, const Vec3 &c,
                                 const Vec3 &d) {
  const std::array<Vec3, 4> pts{a, b, c, d};
  double diam = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      diam = std::max(diam, (pts[i] - pts[j]).norm());
  if (diam <= 0.0) throw std::invalid_argument("coincident points");
  return std::abs(signed_volume(a, b, c, d)) / (diam * diam * diam);
}

namespace {

// Interval of projections of a tet onto an axis.
std::pair<double, double> project(const std::array<Vec3, 4> &t,
                                  const Vec3 &axis) {
  double lo = t[0].dot(axis), hi = lo;
  for (int i = 1; i < 4; ++i) {
    const double v = t[i].dot(axis);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {lo, hi};
}

}  // namespace

bool tets_interpenetrate(const std::array<Vec3, 4> &t1,
                         const std::array<Vec3, 4> &t2, double eps) {
  std::vector<Vec3> axes;
  static const int faces[4][3] = {{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}};
  for (const auto &f : faces) {
    axes.push_back((t1[f[1]] - t1[f[0]]).cross(t1[f[2]] - t1[f[0]]));
    axes.push_back((t2[f[1]] - t2[f[0]]).cross(t2[f[2]] - t2[f[0]]));
  }
  static const int edges[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
  for (const auto &e1 : edges)
    for (const auto &e2 : edges)
      axes.push_back((t1[e1[1]] - t1[e1[0]]).cross(t2[e2[1]] - t2[e2[0]]));

  for (auto &axis : axes) {
    const double len = axis.norm();
    if (len < kVolEps) continue;
    axis /= len;
    const auto [lo1, hi1] = project(t1, axis);
    const auto [lo2, hi2] = project(t2, axis);
    const double overlap = std::min(hi1, hi2) - std::max(lo1, lo2);
    if (overlap <= eps) return false;  // separating (or merely touching) axis
  }
  return true;
}

}  // namespace truss
