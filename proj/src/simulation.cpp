#include "ius/simulation.hpp"

#include "ius/dynamics.hpp"
#include "ius/errors.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>

namespace ius {

void PhantomModel::validate() const
{
    if (!(contact_stiffness > 0.0)) {
        throw InvalidInput("phantom contact stiffness must be positive");
    }
    if (!(contact_damping >= 0.0)) {
        throw InvalidInput("phantom contact damping must be non-negative");
    }
}

double contact_force(const PhantomModel& phantom, double d, double ddot)
{
    if (!(d < 0.0)) {
        return 0.0;
    }
    return std::max(0.0, phantom.contact_stiffness * -d + phantom.contact_damping * std::max(0.0, -ddot));
}

Vector6d contact_wrench(const PhantomModel& phantom, double d, double ddot, const Eigen::Vector3d& normal)
{
    Vector6d w = Vector6d::Zero();
    w.head<3>() = contact_force(phantom, d, ddot) * normal;
    return w;
}

double steady_state_force(double k_controller, double k_contact, double d_hold)
{
    if (!(k_controller > 0.0) || !(k_contact > 0.0)) {
        throw InvalidInput("steady_state_force: stiffnesses must be positive");
    }
    if (!(d_hold < 0.0)) {
        throw InvalidInput("steady_state_force: d_hold must be negative");
    }
    return k_controller * k_contact / (k_controller + k_contact) * -d_hold;
}

Simulator::Simulator(ArmModel model, std::shared_ptr<const SurfaceChart> control_chart,
                     std::shared_ptr<const SurfaceChart> truth_chart, PhantomModel phantom,
                     ControllerSettings controller, double dt)
    : model_(std::move(model)),
      control_(std::move(control_chart)),
      truth_(std::move(truth_chart)),
      phantom_(std::move(phantom)),
      controller_(controller),
      dt_(dt)
{
    model_.validate();
    phantom_.validate();
    if (!control_) {
        throw InvalidInput("simulator needs a control chart");
    }
    // All-zero gains switch the controller off (passive arm).
    const bool controller_off = controller_.damping_mode == DampingMode::constant &&
                                controller_.gains.stiffness.isZero(0.0) && controller_.gains.damping.isZero(0.0);
    if (controller_.damping_mode == DampingMode::constant && !controller_off) {
        controller_.gains.validate();
    } else if (controller_.damping_mode == DampingMode::critical) {
        ImpedanceGains k_only = controller_.gains;
        k_only.damping = Matrix6d::Identity();
        k_only.validate();
        if (!(controller_.damping_ratio > 0.0)) {
            throw InvalidInput("damping ratio must be positive");
        }
    }
    if (!(controller_.nullspace_gain >= 0.0)) {
        throw InvalidInput("nullspace gain must be non-negative");
    }

    if (!(dt_ > 0.0 && dt_ <= 0.005)) {
        throw InvalidInput("time step must lie in (0, 5 ms]");
    }
}

Forces Simulator::forces(const Vector7d& q, const Vector7d& qdot, const Setpoint& sp) const
{
    Forces f;
    const Pose probe = forward_kinematics(model_, q, Frame::probe);
    const Matrix67d jg = geometric_jacobian(model_, q, Frame::probe);
    f.control = control_->task_map(probe);
    f.j_rho = f.control.twist_to_rate * jg;
    f.mass = mass_matrix(model_, q);
    f.bias = bias_torques(model_, q, qdot);

    f.damping = controller_.gains.damping;
    if (controller_.damping_mode == DampingMode::critical) {
        f.damping = critical_damping(controller_.gains.stiffness, task_inertia(f.j_rho, f.mass),
                                     controller_.damping_ratio);
    }
    const Vector6d rhodot = f.j_rho * qdot;
    f.tau_spring = f.j_rho.transpose() * (controller_.gains.stiffness * (sp.rho_d.vector() - f.control.coords.vector()));
    f.tau_damper = f.j_rho.transpose() * (f.damping * (sp.rhodot_d - rhodot));
    f.tau_null = nullspace_damping(f.j_rho, qdot, controller_.nullspace_gain);

    f.tau_contact_spring.setZero();
    f.tau_contact_damper.setZero();
    f.contact_depth = std::numeric_limits<double>::infinity();
    if (truth_) {
        std::optional<TaskMap> contact;
        try {
            contact = truth_->task_map(probe);
        } catch (const ChartBoundaryError&) {
            // Off the phantom or far from it: no contact.
        }
        if (contact) {
            f.contact_depth = contact->coords.d;
            f.contact_rate = (contact->twist_to_rate.row(2) * (jg * qdot))(0);
            if (f.contact_depth < 0.0) {
                const double spring = phantom_.contact_stiffness * -f.contact_depth;
                f.contact_force = contact_force(phantom_, f.contact_depth, f.contact_rate);
                const Eigen::Vector3d n = contact->frame.normal;
                const Eigen::Matrix<double, 7, 3> jvt = jg.topRows<3>().transpose();
                f.tau_contact_spring = jvt * (spring * n);
                f.tau_contact_damper = jvt * ((f.contact_force - spring) * n);
                f.contact_wrench.head<3>() = f.contact_force * n;
            }
        }
    }
    return f;
}

SimState Simulator::observe(const Vector7d& q, const Vector7d& qdot, double t, long step, const Forces& f) const
{
    SimState s;
    s.t = t;
    s.step = step;
    s.joint = {q, qdot};
    s.rho = f.control.coords;
    s.rhodot = f.j_rho * qdot;
    s.contact_wrench = f.contact_wrench;
    s.contact_force = f.contact_force;
    s.contact_depth = f.contact_depth;
    return s;
}

SimState Simulator::initial_state(const Vector7d& q, const Vector7d& qdot, double t) const
{
    model_.check_limits(q);
    return observe(q, qdot, t, 0, forces(q, qdot, Setpoint{}));
}

SimState Simulator::step(const SimState& state, const SetpointSource& setpoints) const
{
    const Vector7d& q = state.joint.q;
    const Vector7d& qdot = state.joint.qdot;
    const Forces f = forces(q, qdot, setpoints(state.t));
    const Vector7d qddot = f.mass.llt().solve(f.tau_total() - f.bias);
    const Vector7d qdot_next = qdot + dt_ * qddot;
    const Vector7d q_next = q + dt_ * qdot_next;
    const long step_next = state.step + 1;
    if (!q_next.allFinite() || !qdot_next.allFinite()) {
        throw IntegratorDivergence(step_next, "integrator diverged at step " + std::to_string(step_next));
    }
    model_.check_limits(q_next);
    const double t_next = state.t + dt_;
    return observe(q_next, qdot_next, t_next, step_next, forces(q_next, qdot_next, setpoints(t_next)));
}

double Simulator::energy(const Vector7d& q, const Vector7d& qdot, const Setpoint& sp) const
{
    const Forces f = forces(q, qdot, sp);
    const Vector6d e = sp.rho_d.vector() - f.control.coords.vector();
    double v = 0.5 * qdot.dot(f.mass * qdot) + 0.5 * e.dot(controller_.gains.stiffness * e);
    if (f.contact_depth < 0.0) {
        v += 0.5 * phantom_.contact_stiffness * f.contact_depth * f.contact_depth;
    }
    return v;
}

}  // namespace ius
