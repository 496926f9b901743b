#include "ius/inverse_kinematics.hpp"

#include "ius/errors.hpp"

#include <Eigen/Geometry>
#include <Eigen/LU>
#include <Eigen/QR>

#include <cmath>

namespace ius {

namespace {

template <typename ErrorFn>
IkResult damped_least_squares(const ArmModel& model, const Vector7d& q0, const IkOptions& opt, ErrorFn&& error)
{
    IkResult res;
    res.q = q0;
    for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
        Matrix67d j;
        const Vector6d e = error(res.q, j);
        res.residual = e.cwiseAbs().maxCoeff();
        if (res.residual < opt.tolerance) {
            res.converged = true;
            return res;
        }
        const Matrix6d jjt = j * j.transpose() + opt.damping * opt.damping * Matrix6d::Identity();
        Vector7d dq = j.transpose() * jjt.partialPivLu().solve(e);
        if (opt.rest_posture) {
            const Eigen::Matrix<double, 7, 6> pinv = j.completeOrthogonalDecomposition().pseudoInverse();
            dq += opt.rest_gain * (Matrix7d::Identity() - pinv * j) * (*opt.rest_posture - res.q);
        }
        const double biggest = dq.cwiseAbs().maxCoeff();
        if (biggest > opt.max_step) {
            dq *= opt.max_step / biggest;
        }
        res.q += dq;
        for (std::size_t i = 0; i < kNumJoints; ++i) {
            const Joint& jt = model.joints[i];
            res.q(static_cast<long>(i)) = std::clamp(res.q(static_cast<long>(i)), jt.lower_limit + opt.limit_margin,
                                                     jt.upper_limit - opt.limit_margin);
        }
    }
    Matrix67d j;
    res.residual = error(res.q, j).cwiseAbs().maxCoeff();
    res.converged = res.residual < opt.tolerance;
    return res;
}

}  // namespace

IkResult solve_pose_ik(const ArmModel& model, Frame frame, const Pose& target, const Vector7d& q0,
                       const IkOptions& options)
{
    return damped_least_squares(model, q0, options, [&](const Vector7d& q, Matrix67d& j) {
        const Pose p = forward_kinematics(model, q, frame);
        j = geometric_jacobian(model, q, frame);
        const Eigen::AngleAxisd aa(target.rotation_matrix() * p.rotation_matrix().transpose());
        Vector6d e;
        e << target.translation - p.translation, aa.angle() * aa.axis();
        return e;
    });
}

IkResult solve_chart_ik(const ArmModel& model, const SurfaceChart& chart, const SurfaceCoords& target,
                        const Vector7d& q0, const IkOptions& options)
{
    if (target.eps.norm() >= 1.0) {
        throw InvalidInput("chart IK: |eps| must be below 1");
    }
    // The probe pose with these coordinates is known in closed form; reach it
    // first so the chart iteration starts on the chart.
    const Pose aligned = chart.aligned_pose({target.s1, target.s2}, target.d);
    const Eigen::Quaterniond q_eps(std::sqrt(1.0 - target.eps.squaredNorm()), target.eps.x(), target.eps.y(),
                                   target.eps.z());
    const Pose goal(q_eps.conjugate() * aligned.rotation, aligned.translation);
    const IkResult coarse = solve_pose_ik(model, Frame::probe, goal, q0, options);

    return damped_least_squares(model, coarse.q, options, [&](const Vector7d& q, Matrix67d& j) {
        const TaskMap map = chart.task_map(forward_kinematics(model, q, Frame::probe));
        j = map.twist_to_rate * geometric_jacobian(model, q, Frame::probe);
        return Vector6d(target.vector() - map.coords.vector());
    });
}

}  // namespace ius
