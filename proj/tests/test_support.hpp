#pragma once

#include "ius/arm_model.hpp"

#include <Eigen/Geometry>

#include <random>

namespace ius::test {

inline Vector7d random_configuration(const ArmModel& model, std::mt19937_64& rng, double margin = 0.05)
{
    Vector7d q;
    for (std::size_t i = 0; i < kNumJoints; ++i) {
        std::uniform_real_distribution<double> dist(model.joints[i].lower_limit + margin,
                                                    model.joints[i].upper_limit - margin);
        q(static_cast<long>(i)) = dist(rng);
    }
    return q;
}

inline Vector7d random_vector7(std::mt19937_64& rng, double scale = 1.0)
{
    std::uniform_real_distribution<double> dist(-scale, scale);
    Vector7d v;
    for (long i = 0; i < 7; ++i) {
        v(i) = dist(rng);
    }
    return v;
}

// Rotation vector w with exp([w]x) = rb * ra^T, for small relative rotations.
inline Eigen::Vector3d rotation_difference(const Eigen::Matrix3d& ra, const Eigen::Matrix3d& rb)
{
    Eigen::AngleAxisd aa(rb * ra.transpose());
    return aa.angle() * aa.axis();
}

// Independent 4x4 homogeneous-matrix chain: Rodrigues formula per joint.
inline Eigen::Matrix4d rodrigues(const Eigen::Vector3d& axis, double angle)
{
    Eigen::Matrix3d k;
    k << 0, -axis.z(), axis.y(), axis.z(), 0, -axis.x(), -axis.y(), axis.x(), 0;
    Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
    t.topLeftCorner<3, 3>() = Eigen::Matrix3d::Identity() + std::sin(angle) * k + (1.0 - std::cos(angle)) * k * k;
    return t;
}

inline Eigen::Matrix4d chain_oracle(const ArmModel& model, const Vector7d& q, Frame frame)
{
    Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
    for (std::size_t i = 0; i < kNumJoints; ++i) {
        t = t * model.joints[i].parent_transform.matrix() * rodrigues(model.joints[i].axis, q(static_cast<long>(i)));
    }
    if (frame == Frame::probe) {
        t = t * model.probe_offset.matrix();
    } else if (frame == Frame::camera) {
        t = t * model.camera_offset.matrix();
    }
    return t;
}

}  // namespace ius::test
