#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <optional>

namespace ius {

struct TrianglePoint {
    Eigen::Vector3d point;
    Eigen::Vector3d barycentric;  // weights of a, b, c
};

// Closest point on triangle (a, b, c) to p, by Voronoi-region classification.
TrianglePoint closest_point_on_triangle(const Eigen::Vector3d& p, const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                                        const Eigen::Vector3d& c);

struct RayHit {
    double t;  // ray parameter: hit = origin + t * direction
    Eigen::Vector3d barycentric;
};

// Moller-Trumbore, double-sided. Returns hits with t > t_min only.
std::optional<RayHit> intersect_ray_triangle(const Eigen::Vector3d& origin, const Eigen::Vector3d& direction,
                                             const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                                             const Eigen::Vector3d& c, double t_min = 0.0);

// Barycentric coordinates of p in the 2-D triangle (a, b, c).
Eigen::Vector3d barycentric_2d(const Eigen::Vector2d& p, const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                               const Eigen::Vector2d& c);

Eigen::Vector2d closest_point_on_triangle_2d(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                                             const Eigen::Vector2d& b, const Eigen::Vector2d& c);

}  // namespace ius
