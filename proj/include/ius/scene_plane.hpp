#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace ius {

// Reference plane from localisation. `x_axis` fixes the in-plane axes: it is
// projected onto the plane and completed to a right-handed basis
// (e1, e2 = n x e1, n).
struct ScenePlane {
    Eigen::Vector3d centre = Eigen::Vector3d::Zero();
    Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
    Eigen::Vector3d x_axis = Eigen::Vector3d::UnitX();

    Eigen::Vector3d e1() const
    {
        Eigen::Vector3d u = x_axis - x_axis.dot(normal) * normal;
        if (u.norm() < 1e-9) {
            u = normal.unitOrthogonal();
        }
        return u.normalized();
    }

    Eigen::Vector3d e2() const { return normal.cross(e1()); }

    // Columns e1, e2.
    Eigen::Matrix<double, 3, 2> basis() const
    {
        Eigen::Matrix<double, 3, 2> b;
        b << e1(), e2();
        return b;
    }

    // In-plane coordinates of x relative to the centre.
    Eigen::Vector2d coordinates(const Eigen::Vector3d& x) const { return basis().transpose() * (x - centre); }

    double height(const Eigen::Vector3d& x) const { return normal.dot(x - centre); }

    Eigen::Vector3d point(const Eigen::Vector2d& s, double height = 0.0) const
    {
        return centre + basis() * s + height * normal;
    }
};

}  // namespace ius
