#pragma once

#include "ius/arm_model.hpp"
#include "ius/controller.hpp"
#include "ius/surface_chart.hpp"

#include <functional>
#include <memory>
#include <string>

namespace ius {

// Compliant phantom: a frictionless normal penalty on the ground-truth surface.
struct PhantomModel {
    TriMesh mesh;
    double contact_stiffness = 100.0;  // N/m
    double contact_damping = 2.0;      // N s/m
    std::string label;

    void validate() const;
};

// Normal force magnitude: k_t (-d) + c max(0, -ddot) when d < 0, never negative.
double contact_force(const PhantomModel& phantom, double d, double ddot);

// Wrench (force; moment) at the probe tip, force along +normal.
Vector6d contact_wrench(const PhantomModel& phantom, double d, double ddot, const Eigen::Vector3d& normal);

// Equilibrium force of the controller's distance spring in series with the
// contact spring.
double steady_state_force(double k_controller, double k_contact, double d_hold);

enum class DampingMode { constant, critical };

struct ControllerSettings {
    ImpedanceGains gains = default_gains();
    DampingMode damping_mode = DampingMode::constant;
    double damping_ratio = 0.7;
    double nullspace_gain = 0.5;  // N m s/rad
};

struct SimState {
    double t = 0.0;
    long step = 0;
    JointState joint;
    SurfaceCoords rho;              // on the control chart
    Vector6d rhodot = Vector6d::Zero();
    Vector6d contact_wrench = Vector6d::Zero();
    double contact_force = 0.0;     // N
    double contact_depth = 0.0;     // d on the ground-truth surface, +inf off the phantom
};

// Everything acting on the arm at one state.
struct Forces {
    TaskMap control;
    Matrix67d j_rho;
    Matrix7d mass;
    Vector7d bias;
    Matrix6d damping;                // task damping in use
    Vector7d tau_spring;             // J^T K (rho_d - rho)
    Vector7d tau_damper;             // J^T D (rhodot_d - rhodot)
    Vector7d tau_null;
    Vector7d tau_contact_spring;
    Vector7d tau_contact_damper;
    double contact_depth = 0.0;
    double contact_rate = 0.0;
    double contact_force = 0.0;
    Vector6d contact_wrench = Vector6d::Zero();

    Vector7d tau_total() const
    {
        return tau_spring + tau_damper + tau_null + tau_contact_spring + tau_contact_damper;
    }
};

using SetpointSource = std::function<Setpoint(double t)>;

// Rigid-arm simulation under the impedance controller. The controller senses
// surface coordinates on `control_chart` (possibly a reconstruction); contact
// forces come from `phantom` on the ground-truth chart. Gravity is assumed
// perfectly compensated.
class Simulator {
public:
    Simulator(ArmModel model, std::shared_ptr<const SurfaceChart> control_chart,
              std::shared_ptr<const SurfaceChart> truth_chart, PhantomModel phantom, ControllerSettings controller,
              double dt);

    const ArmModel& model() const { return model_; }
    const SurfaceChart& control_chart() const { return *control_; }
    const PhantomModel& phantom() const { return phantom_; }
    const ControllerSettings& controller() const { return controller_; }
    double dt() const { return dt_; }

    SimState initial_state(const Vector7d& q, const Vector7d& qdot = Vector7d::Zero(), double t = 0.0) const;

    Forces forces(const Vector7d& q, const Vector7d& qdot, const Setpoint& sp) const;

    // Semi-implicit Euler: qdot' = qdot + dt M^-1 (tau - C qdot), q' = q + dt qdot'.
    // Throws JointLimitError when a joint leaves its range and
    // IntegratorDivergence on non-finite state.
    SimState step(const SimState& state, const SetpointSource& setpoints) const;

    // Kinetic energy plus the impedance and contact spring potentials for a
    // constant setpoint.
    double energy(const Vector7d& q, const Vector7d& qdot, const Setpoint& sp) const;

private:
    SimState observe(const Vector7d& q, const Vector7d& qdot, double t, long step, const Forces& f) const;

    ArmModel model_;
    std::shared_ptr<const SurfaceChart> control_;
    std::shared_ptr<const SurfaceChart> truth_;
    PhantomModel phantom_;
    ControllerSettings controller_;
    double dt_;
};

}  // namespace ius
