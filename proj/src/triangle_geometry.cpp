#include "ius/triangle_geometry.hpp"

#include <algorithm>
#include <cmath>

namespace ius {

TrianglePoint closest_point_on_triangle(const Eigen::Vector3d& p, const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                                        const Eigen::Vector3d& c)
{
    const Eigen::Vector3d ab = b - a;
    const Eigen::Vector3d ac = c - a;
    const Eigen::Vector3d ap = p - a;
    const double d1 = ab.dot(ap);
    const double d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) {
        return {a, {1.0, 0.0, 0.0}};
    }
    const Eigen::Vector3d bp = p - b;
    const double d3 = ab.dot(bp);
    const double d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) {
        return {b, {0.0, 1.0, 0.0}};
    }
    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
        const double v = d1 / (d1 - d3);
        return {a + v * ab, {1.0 - v, v, 0.0}};
    }
    const Eigen::Vector3d cp = p - c;
    const double d5 = ab.dot(cp);
    const double d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) {
        return {c, {0.0, 0.0, 1.0}};
    }
    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
        const double w = d2 / (d2 - d6);
        return {a + w * ac, {1.0 - w, 0.0, w}};
    }
    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return {b + w * (c - b), {0.0, 1.0 - w, w}};
    }
    const double denom = 1.0 / (va + vb + vc);
    const double v = vb * denom;
    const double w = vc * denom;
    return {a + ab * v + ac * w, {1.0 - v - w, v, w}};
}

std::optional<RayHit> intersect_ray_triangle(const Eigen::Vector3d& origin, const Eigen::Vector3d& direction,
                                             const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                                             const Eigen::Vector3d& c, double t_min)
{
    const Eigen::Vector3d e1 = b - a;
    const Eigen::Vector3d e2 = c - a;
    const Eigen::Vector3d pvec = direction.cross(e2);
    const double det = e1.dot(pvec);
    if (std::abs(det) < 1e-300) {
        return std::nullopt;
    }
    const double inv = 1.0 / det;
    const Eigen::Vector3d tvec = origin - a;
    const double u = tvec.dot(pvec) * inv;
    if (u < 0.0 || u > 1.0) {
        return std::nullopt;
    }
    const Eigen::Vector3d qvec = tvec.cross(e1);
    const double v = direction.dot(qvec) * inv;
    if (v < 0.0 || u + v > 1.0) {
        return std::nullopt;
    }
    const double t = e2.dot(qvec) * inv;
    if (!(t > t_min)) {
        return std::nullopt;
    }
    return RayHit{t, {1.0 - u - v, u, v}};
}

Eigen::Vector3d barycentric_2d(const Eigen::Vector2d& p, const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                               const Eigen::Vector2d& c)
{
    const Eigen::Vector2d v0 = b - a;
    const Eigen::Vector2d v1 = c - a;
    const Eigen::Vector2d v2 = p - a;
    const double den = v0.x() * v1.y() - v1.x() * v0.y();
    const double v = (v2.x() * v1.y() - v1.x() * v2.y()) / den;
    const double w = (v0.x() * v2.y() - v2.x() * v0.y()) / den;
    return {1.0 - v - w, v, w};
}

namespace {

Eigen::Vector2d closest_on_segment(const Eigen::Vector2d& p, const Eigen::Vector2d& a, const Eigen::Vector2d& b)
{
    const Eigen::Vector2d ab = b - a;
    const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
    return a + t * ab;
}

}  // namespace

Eigen::Vector2d closest_point_on_triangle_2d(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                                             const Eigen::Vector2d& b, const Eigen::Vector2d& c)
{
    const Eigen::Vector3d bary = barycentric_2d(p, a, b, c);
    if (bary.minCoeff() >= 0.0) {
        return p;
    }
    Eigen::Vector2d best = closest_on_segment(p, a, b);
    for (const Eigen::Vector2d& cand : {closest_on_segment(p, b, c), closest_on_segment(p, c, a)}) {
        if ((cand - p).squaredNorm() < (best - p).squaredNorm()) {
            best = cand;
        }
    }
    return best;
}

}  // namespace ius
