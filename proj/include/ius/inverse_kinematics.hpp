#pragma once

#include "ius/arm_model.hpp"
#include "ius/surface_chart.hpp"

#include <optional>

namespace ius {

struct IkResult {
    Vector7d q = Vector7d::Zero();
    double residual = 0.0;  // infinity norm of the final task error
    int iterations = 0;
    bool converged = false;
};

struct IkOptions {
    int max_iterations = 300;
    double tolerance = 1e-10;
    double damping = 1e-3;   // Levenberg-Marquardt lambda
    double max_step = 0.2;   // rad per iteration
    double limit_margin = 0.02;  // rad kept away from joint limits
    // When set, the redundant direction is used to pull towards this posture.
    std::optional<Vector7d> rest_posture;
    double rest_gain = 0.5;
};

// Damped least squares on the world pose of `frame`: position error and
// rotation vector of R_target R^T.
IkResult solve_pose_ik(const ArmModel& model, Frame frame, const Pose& target, const Vector7d& q0,
                       const IkOptions& options = {});

// Damped least squares on the surface coordinates of the probe.
IkResult solve_chart_ik(const ArmModel& model, const SurfaceChart& chart, const SurfaceCoords& target,
                        const Vector7d& q0, const IkOptions& options = {});

}  // namespace ius
