#include "ius/controller.hpp"

#include "ius/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace ius {

namespace {

void check_spd(const Matrix6d& m, const char* what)
{
    if (!m.allFinite()) {
        throw InvalidInput(std::string(what) + " has non-finite entries");
    }
    if ((m - m.transpose()).cwiseAbs().maxCoeff() >= 1e-12) {
        throw InvalidInput(std::string(what) + " is not symmetric");
    }
    const Eigen::SelfAdjointEigenSolver<Matrix6d> eig(m, Eigen::EigenvaluesOnly);
    if (!(eig.eigenvalues().minCoeff() > 0.0)) {
        throw InvalidInput(std::string(what) + " is not positive definite");
    }
}

Matrix6d spd_sqrt(const Matrix6d& m)
{
    const Eigen::SelfAdjointEigenSolver<Matrix6d> eig(m);
    return eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
           eig.eigenvectors().transpose();
}

}  // namespace

void ImpedanceGains::validate() const
{
    check_spd(stiffness, "stiffness");
    check_spd(damping, "damping");
}

ImpedanceGains default_gains()
{
    ImpedanceGains g;
    g.stiffness.diagonal() << 300.0, 300.0, 500.0, 5.0, 5.0, 1.0;
    g.damping.diagonal() << 30.0, 30.0, 180.0, 3.0, 3.5, 0.1;
    return g;
}

Vector7d impedance_torque(const ImpedanceGains& gains, const Setpoint& sp, const SurfaceCoords& rho,
                          const Vector6d& rhodot, const Matrix67d& j_rho)
{
    const Vector6d e = sp.rho_d.vector() - rho.vector();
    const Vector6d edot = sp.rhodot_d - rhodot;
    if (!e.allFinite() || !edot.allFinite() || !j_rho.allFinite()) {
        throw InvalidInput("impedance_torque: non-finite input");
    }
    return j_rho.transpose() * (gains.stiffness * e + gains.damping * edot);
}

Matrix6d task_inertia(const Matrix67d& j_rho, const Matrix7d& mass)
{
    const Matrix67d jm = mass.llt().solve(j_rho.transpose()).transpose();
    return (jm * j_rho.transpose()).inverse();
}

Matrix6d critical_damping(const Matrix6d& stiffness, const Matrix6d& lambda, double zeta)
{
    if (!(zeta > 0.0)) {
        throw InvalidInput("damping ratio must be positive");
    }
    const Matrix6d sym_lambda = 0.5 * (lambda + lambda.transpose());
    const Matrix6d l_half = spd_sqrt(sym_lambda);
    const Matrix6d l_inv_half = l_half.inverse();
    const Matrix6d inner = l_inv_half * stiffness * l_inv_half;
    const Matrix6d d = 2.0 * zeta * l_half * spd_sqrt(0.5 * (inner + inner.transpose())) * l_half;
    return 0.5 * (d + d.transpose());
}

Matrix7d nullspace_projector(const Matrix67d& j_rho)
{
    const Eigen::JacobiSVD<Eigen::Matrix<double, 6, 7>> svd(j_rho, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double tol = 1e-10 * std::max(sv(0), 1.0);
    Matrix7d p = Matrix7d::Identity();
    for (int i = 0; i < 6; ++i) {
        if (sv(i) > tol) {
            p -= svd.matrixV().col(i) * svd.matrixV().col(i).transpose();
        }
    }
    return p;
}

Vector7d nullspace_damping(const Matrix67d& j_rho, const Vector7d& qdot, double gain)
{
    if (!(gain >= 0.0)) {
        throw InvalidInput("nullspace gain must be non-negative");
    }
    return -gain * (nullspace_projector(j_rho) * qdot);
}

void ContactProfile::validate() const
{
    if (!(d_start > d_hold)) {
        throw InvalidInput("contact profile: d_start must exceed d_hold");
    }
    if (!(ramp_rate > 0.0)) {
        throw InvalidInput("contact profile: ramp_rate must be positive");
    }
    if (!(hold_duration >= 0.0)) {
        throw InvalidInput("contact profile: hold_duration must be non-negative");
    }
}

Setpoint contact_setpoints(const ContactProfile& profile, double t, const Eigen::Vector2d& s)
{
    if (!(t >= 0.0)) {
        throw InvalidInput("contact_setpoints: t must be non-negative");
    }
    Setpoint sp;
    sp.rho_d.s1 = s.x();
    sp.rho_d.s2 = s.y();
    const double ramp = profile.d_start - profile.ramp_rate * t;
    if (ramp > profile.d_hold) {
        sp.rho_d.d = ramp;
        sp.rhodot_d(2) = -profile.ramp_rate;
    } else {
        sp.rho_d.d = profile.d_hold;
    }
    return sp;
}

RasterPath::RasterPath(const ChartRect& domain, double spacing, double speed) : speed_(speed)
{
    if (!(spacing > 0.0) || !(speed > 0.0)) {
        throw InvalidInput("raster spacing and speed must be positive");
    }
    if (!(domain.hi.x() >= domain.lo.x()) || !(domain.hi.y() >= domain.lo.y()) || !domain.lo.allFinite() ||
        !domain.hi.allFinite()) {
        throw InvalidInput("raster domain is empty");
    }
    const double width = domain.hi.y() - domain.lo.y();
    std::vector<double> rows;
    if (width < spacing) {
        rows.push_back(0.5 * (domain.lo.y() + domain.hi.y()));
    } else {
        lines_ = static_cast<int>(std::ceil(width / spacing - 1e-9)) + 1;
        for (int k = 0; k < lines_; ++k) {
            rows.push_back(domain.lo.y() + width * k / (lines_ - 1));
        }
    }
    lines_ = static_cast<int>(rows.size());
    for (int k = 0; k < lines_; ++k) {
        const bool forward = k % 2 == 0;
        const double a = forward ? domain.lo.x() : domain.hi.x();
        const double b = forward ? domain.hi.x() : domain.lo.x();
        waypoints_.emplace_back(a, rows[static_cast<std::size_t>(k)]);
        waypoints_.emplace_back(b, rows[static_cast<std::size_t>(k)]);
    }
    cumulative_.push_back(0.0);
    for (std::size_t i = 1; i < waypoints_.size(); ++i) {
        cumulative_.push_back(cumulative_.back() + (waypoints_[i] - waypoints_[i - 1]).norm());
    }
}

std::pair<Eigen::Vector2d, Eigen::Vector2d> RasterPath::at(double t) const
{
    const double dist = speed_ * t;
    if (!(dist > 0.0)) {
        return {waypoints_.front(), Eigen::Vector2d::Zero()};
    }
    if (dist >= length()) {
        return {waypoints_.back(), Eigen::Vector2d::Zero()};
    }
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), dist);
    const std::size_t seg = static_cast<std::size_t>(it - cumulative_.begin());  // segment end index
    const Eigen::Vector2d& a = waypoints_[seg - 1];
    const Eigen::Vector2d& b = waypoints_[seg];
    const double len = cumulative_[seg] - cumulative_[seg - 1];
    const Eigen::Vector2d dir = (b - a) / len;
    return {a + (dist - cumulative_[seg - 1]) * dir, speed_ * dir};
}

Setpoint raster_setpoints(const RasterPath& path, double d_hold, double t)
{
    const auto [s, v] = path.at(t);
    Setpoint sp;
    sp.rho_d.s1 = s.x();
    sp.rho_d.s2 = s.y();
    sp.rho_d.d = d_hold;
    sp.rhodot_d.head<2>() = v;
    return sp;
}

}  // namespace ius
