#include "ius/dynamics.hpp"

namespace ius {

namespace {

// Spatial vectors are ordered (angular; linear) and referred to the world origin.

Matrix6d spatial_inertia(const LinkInertia& link, const Pose& frame)
{
    const Eigen::Matrix3d r = frame.rotation_matrix();
    const Eigen::Vector3d c = frame * link.com;
    const Eigen::Matrix3d ic = r * link.inertia * r.transpose();
    const Eigen::Matrix3d cx = skew(c);
    Matrix6d out;
    out.topLeftCorner<3, 3>() = ic + link.mass * cx * cx.transpose();
    out.topRightCorner<3, 3>() = link.mass * cx;
    out.bottomLeftCorner<3, 3>() = link.mass * cx.transpose();
    out.bottomRightCorner<3, 3>() = link.mass * Eigen::Matrix3d::Identity();
    return out;
}

Vector6d motion_axis(const Eigen::Vector3d& axis, const Eigen::Vector3d& origin)
{
    Vector6d s;
    s << axis, origin.cross(axis);
    return s;
}

Vector6d cross_motion(const Vector6d& v, const Vector6d& m)
{
    const Eigen::Vector3d w = v.head<3>();
    const Eigen::Vector3d u = v.tail<3>();
    Vector6d out;
    out << w.cross(m.head<3>()), w.cross(m.tail<3>()) + u.cross(m.head<3>());
    return out;
}

Vector6d cross_force(const Vector6d& v, const Vector6d& f)
{
    const Eigen::Vector3d w = v.head<3>();
    const Eigen::Vector3d u = v.tail<3>();
    Vector6d out;
    out << w.cross(f.head<3>()) + u.cross(f.tail<3>()), w.cross(f.tail<3>());
    return out;
}

}  // namespace

Matrix7d mass_matrix(const ArmModel& model, const Vector7d& q)
{
    const JointFrames frames = joint_frames(model, q);
    std::array<Vector6d, kNumJoints> axes;
    std::array<Matrix6d, kNumJoints> composite;
    for (std::size_t i = 0; i < kNumJoints; ++i) {
        axes[i] = motion_axis(frames.axis[i], frames.origin[i]);
        composite[i] = spatial_inertia(model.links[i], frames.link[i]);
    }
    for (std::size_t i = kNumJoints - 1; i > 0; --i) {
        composite[i - 1] += composite[i];
    }
    Matrix7d m;
    for (std::size_t i = 0; i < kNumJoints; ++i) {
        for (std::size_t j = i; j < kNumJoints; ++j) {
            const double v = axes[i].dot(composite[j] * axes[j]);
            m(static_cast<long>(i), static_cast<long>(j)) = v;
            m(static_cast<long>(j), static_cast<long>(i)) = v;
        }
    }
    return m;
}

Vector7d bias_torques(const ArmModel& model, const Vector7d& q, const Vector7d& qdot)
{
    const JointFrames frames = joint_frames(model, q);
    std::array<Vector6d, kNumJoints> axes;
    std::array<Vector6d, kNumJoints> force;
    Vector6d vel = Vector6d::Zero();
    Vector6d acc = Vector6d::Zero();
    for (std::size_t i = 0; i < kNumJoints; ++i) {
        axes[i] = motion_axis(frames.axis[i], frames.origin[i]);
        const Vector6d vj = axes[i] * qdot(static_cast<long>(i));
        acc += cross_motion(vel, vj);
        vel += vj;
        const Matrix6d inertia = spatial_inertia(model.links[i], frames.link[i]);
        force[i] = inertia * acc + cross_force(vel, inertia * vel);
    }
    Vector7d tau;
    for (std::size_t i = kNumJoints; i-- > 0;) {
        tau(static_cast<long>(i)) = axes[i].dot(force[i]);
        if (i > 0) {
            force[i - 1] += force[i];
        }
    }
    return tau;
}

double kinetic_energy(const ArmModel& model, const Vector7d& q, const Vector7d& qdot)
{
    return 0.5 * qdot.dot(mass_matrix(model, q) * qdot);
}

}  // namespace ius
