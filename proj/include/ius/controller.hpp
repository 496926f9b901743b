#pragma once

#include "ius/pose.hpp"
#include "ius/surface_chart.hpp"

#include <vector>

namespace ius {

// Task-space stiffness and damping over (s1, s2, d, eps1, eps2, eps3).
// Units: N/m and N s/m on the first three rows, N m and N m s per unit eps on
// the orientation rows.
struct ImpedanceGains {
    Matrix6d stiffness = Matrix6d::Zero();
    Matrix6d damping = Matrix6d::Zero();

    // Throws InvalidInput unless both matrices are symmetric positive definite.
    void validate() const;
};

// K = diag(300, 300, 500, 5, 5, 1) with a constant diagonal damping matched to
// the reference arm near its scanning posture.
ImpedanceGains default_gains();

struct Setpoint {
    SurfaceCoords rho_d;
    Vector6d rhodot_d = Vector6d::Zero();
};

// tau = J^T [K (rho_d - rho) + D (rhodot_d - rhodot)]. Orientation errors are
// plain differences of eps vectors.
Vector7d impedance_torque(const ImpedanceGains& gains, const Setpoint& sp, const SurfaceCoords& rho,
                          const Vector6d& rhodot, const Matrix67d& j_rho);

// Task-space inertia (J M^-1 J^T)^-1.
Matrix6d task_inertia(const Matrix67d& j_rho, const Matrix7d& mass);

// Damping that gives every mode of Lambda e'' + D e' + K e = 0 the ratio zeta:
// D = 2 zeta L^(1/2) (L^(-1/2) K L^(-1/2))^(1/2) L^(1/2).
Matrix6d critical_damping(const Matrix6d& stiffness, const Matrix6d& lambda, double zeta);

// tau = -gain * (I - J^+ J) qdot.
Vector7d nullspace_damping(const Matrix67d& j_rho, const Vector7d& qdot, double gain);
Matrix7d nullspace_projector(const Matrix67d& j_rho);

// Approach profile: d_d(t) = max(d_hold, d_start - ramp_rate t), held for
// hold_duration after the ramp ends.
struct ContactProfile {
    double d_start = 0.02;
    double d_hold = -0.003;
    double ramp_rate = 0.005;
    double hold_duration = 5.0;

    void validate() const;
    double ramp_end() const { return (d_start - d_hold) / ramp_rate; }
    double duration() const { return ramp_end() + hold_duration; }
};

// Setpoint at (s, d_d(t)) with eps_d = 0.
Setpoint contact_setpoints(const ContactProfile& profile, double t, const Eigen::Vector2d& s = Eigen::Vector2d::Zero());

struct ChartRect {
    Eigen::Vector2d lo = Eigen::Vector2d::Zero();
    Eigen::Vector2d hi = Eigen::Vector2d::Zero();
};

// Boustrophedon over a chart rectangle: lines along s1, stepping in s2,
// traversed at constant speed. Lines are spread evenly so that neighbours are
// at most `spacing` apart; a rectangle narrower than the spacing gets a single
// centre line.
class RasterPath {
public:
    RasterPath(const ChartRect& domain, double spacing, double speed);

    const std::vector<Eigen::Vector2d>& waypoints() const { return waypoints_; }
    int lines() const { return lines_; }
    double length() const { return cumulative_.back(); }
    double duration() const { return length() / speed_; }
    double speed() const { return speed_; }

    // Position and velocity at time t; clamped to the ends outside [0, duration].
    std::pair<Eigen::Vector2d, Eigen::Vector2d> at(double t) const;

private:
    std::vector<Eigen::Vector2d> waypoints_;
    std::vector<double> cumulative_;
    double speed_;
    int lines_ = 0;
};

// Raster setpoint at constant d_hold and eps_d = 0.
Setpoint raster_setpoints(const RasterPath& path, double d_hold, double t);

}  // namespace ius
