#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace ius {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Vector7d = Eigen::Matrix<double, 7, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;
using Matrix7d = Eigen::Matrix<double, 7, 7>;
using Matrix67d = Eigen::Matrix<double, 6, 7>;

// Rigid transform: unit quaternion rotation followed by translation.
// Maps points from the child frame into the parent frame.
struct Pose {
    Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    Pose() = default;
    Pose(const Eigen::Quaterniond& q, const Eigen::Vector3d& t) : rotation(q.normalized()), translation(t) {}
    Pose(const Eigen::Matrix3d& r, const Eigen::Vector3d& t) : rotation(Eigen::Quaterniond(r).normalized()), translation(t) {}

    static Pose identity() { return {}; }

    Eigen::Matrix3d rotation_matrix() const { return rotation.toRotationMatrix(); }

    Eigen::Vector3d operator*(const Eigen::Vector3d& p) const { return rotation * p + translation; }

    Pose operator*(const Pose& other) const
    {
        Pose out;
        out.rotation = (rotation * other.rotation).normalized();
        out.translation = rotation * other.translation + translation;
        return out;
    }

    Pose inverse() const
    {
        Pose out;
        out.rotation = rotation.conjugate();
        out.translation = -(out.rotation * translation);
        return out;
    }

    Eigen::Matrix4d matrix() const
    {
        Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
        m.topLeftCorner<3, 3>() = rotation_matrix();
        m.topRightCorner<3, 1>() = translation;
        return m;
    }
};

inline Eigen::Matrix3d skew(const Eigen::Vector3d& v)
{
    Eigen::Matrix3d m;
    m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
    return m;
}

}  // namespace ius
