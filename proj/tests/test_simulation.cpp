#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ius/errors.hpp"
#include "ius/inverse_kinematics.hpp"
#include "ius/simulation.hpp"

#include <cmath>
#include <limits>

using namespace ius;

namespace {

const Eigen::Vector3d kCentre(0.55, 0.0, 0.0);

std::shared_ptr<const SurfaceChart> flat_chart()
{
    static const auto chart = std::make_shared<const SurfaceChart>(
        make_flat_phantom(kCentre, 0.2, 0.02), ScenePlane{kCentre, Eigen::Vector3d::UnitZ(), Eigen::Vector3d::UnitX()});
    return chart;
}

Vector7d nominal()
{
    return (Vector7d() << 0.0, 0.784, 0.0, 1.625, 0.0, 0.733, 0.0).finished();
}

Simulator flat_simulator(const ControllerSettings& cs, double dt, double k_t = 100.0)
{
    const auto chart = flat_chart();
    return Simulator(reference_arm(), chart, chart, PhantomModel{chart->mesh(), k_t, 2.0, "flat"}, cs, dt);
}

Vector7d start_configuration(const SurfaceCoords& rho)
{
    IkOptions opt;
    opt.rest_posture = nominal();
    const IkResult ik = solve_chart_ik(reference_arm(), *flat_chart(), rho, nominal(), opt);
    REQUIRE(ik.converged);
    return ik.q;
}

Vector7d final_q(double dt, double seconds)
{
    const Simulator sim = flat_simulator(ControllerSettings{}, dt);
    Setpoint sp;
    sp.rho_d.d = -0.003;
    const SetpointSource src = [&](double) { return sp; };
    SimState s = sim.initial_state(start_configuration({0.01, -0.01, 0.01, {0.02, -0.03, 0.05}}));
    const long steps = std::lround(seconds / dt);
    for (long i = 0; i < steps; ++i) {
        s = sim.step(s, src);
    }
    return s.joint.q;
}

}  // namespace

TEST_CASE("contact wrench: no contact above the surface")
{
    const PhantomModel ph{TriMesh{}, 500.0, 2.0, ""};
    CHECK(contact_wrench(ph, 0.01, -1.0, Eigen::Vector3d::UnitZ()).isZero(0.0));
    CHECK(contact_wrench(ph, 0.0, -1.0, Eigen::Vector3d::UnitZ()).isZero(0.0));
}

TEST_CASE("contact wrench: Hooke force along the normal")
{
    const PhantomModel ph{TriMesh{}, 500.0, 2.0, ""};
    const Eigen::Vector3d n = Eigen::Vector3d(1.0, 2.0, 2.0) / 3.0;
    const Vector6d w = contact_wrench(ph, -0.002, 0.0, n);
    CHECK((w.head<3>() - 1.0 * n).norm() < 1e-15);
    CHECK(w.tail<3>().isZero(0.0));
    CHECK(contact_force(ph, -0.002, -0.1) == doctest::Approx(1.2).epsilon(1e-14));
}

TEST_CASE("contact wrench never pulls")
{
    const PhantomModel ph{TriMesh{}, 500.0, 50.0, ""};
    for (double d : {-1e-6, -1e-4, -0.001, -0.005}) {
        for (double ddot : {-1.0, 0.0, 0.01, 0.1, 1.0, 10.0}) {
            const Vector6d w = contact_wrench(ph, d, ddot, Eigen::Vector3d::UnitZ());
            CHECK(w(2) >= 0.0);
            CHECK(contact_force(ph, d, ddot) >= 0.0);
        }
    }
}

TEST_CASE("phantom parameters are validated")
{
    CHECK_THROWS_AS((PhantomModel{TriMesh{}, 0.0, 1.0, ""}.validate()), InvalidInput);
    CHECK_THROWS_AS((PhantomModel{TriMesh{}, 100.0, -1.0, ""}.validate()), InvalidInput);
}

TEST_CASE("series-spring steady force")
{
    CHECK(steady_state_force(500.0, 500.0, -0.004) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(steady_state_force(500.0, 1e12, -0.004) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK_THROWS_AS(steady_state_force(0.0, 500.0, -0.004), InvalidInput);
    CHECK_THROWS_AS(steady_state_force(500.0, 500.0, 0.001), InvalidInput);
}

TEST_CASE("time step range")
{
    CHECK_THROWS_AS(flat_simulator(ControllerSettings{}, 0.0), InvalidInput);
    CHECK_THROWS_AS(flat_simulator(ControllerSettings{}, 0.006), InvalidInput);
    CHECK_NOTHROW(flat_simulator(ControllerSettings{}, 0.005));
}

TEST_CASE("zero gains, at rest, out of contact: only time advances")
{
    ControllerSettings cs;
    cs.gains.stiffness.setZero();
    cs.gains.damping.setZero();
    cs.nullspace_gain = 0.0;
    const Simulator sim = flat_simulator(cs, 0.001);
    const SetpointSource src = [](double) { return Setpoint{}; };
    SimState s = sim.initial_state(nominal());
    REQUIRE(s.contact_depth > 0.0);
    for (int i = 0; i < 100; ++i) {
        s = sim.step(s, src);
    }
    CHECK(s.joint.q == nominal());
    CHECK(s.joint.qdot.isZero(0.0));
    CHECK(s.t == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(s.step == 100);
}

TEST_CASE("semi-implicit Euler converges at first order")
{
    const Vector7d q1 = final_q(0.001, 2.0);
    const Vector7d q2 = final_q(0.0005, 2.0);
    const Vector7d q3 = final_q(0.00025, 2.0);
    const double ratio = (q1 - q2).norm() / (q2 - q3).norm();
    CHECK(ratio > 1.5);
    CHECK(ratio < 2.5);
}

TEST_CASE("energy balance with constant setpoint")
{
    const double dt = 0.001;
    const Simulator sim = flat_simulator(ControllerSettings{}, dt);
    Setpoint sp;
    sp.rho_d.d = -0.003;
    const SetpointSource src = [&](double) { return sp; };
    SimState s = sim.initial_state(start_configuration({0.01, -0.01, 0.01, {0.02, -0.03, 0.05}}));
    const double e0 = sim.energy(s.joint.q, s.joint.qdot, sp);
    double peak = e0;
    double dissipated = 0.0;
    double worst = 0.0;
    bool touched = false;
    for (int i = 0; i < 5000; ++i) {
        const Forces f = sim.forces(s.joint.q, s.joint.qdot, sp);
        const Vector7d non_conservative = f.tau_damper + f.tau_null + f.tau_contact_damper;
        s = sim.step(s, src);
        dissipated -= dt * s.joint.qdot.dot(non_conservative);
        const double e = sim.energy(s.joint.q, s.joint.qdot, sp);
        peak = std::max(peak, e);
        worst = std::max(worst, std::abs(e + dissipated - e0));
        touched = touched || s.contact_force > 0.0;
    }
    CHECK(touched);
    CHECK(worst < 0.01 * peak);
}

TEST_CASE("distance ramp into the flat phantom settles at the series-spring force")
{
    const double dt = 0.001;
    const Simulator sim = flat_simulator(ControllerSettings{}, dt, 500.0);
    const ContactProfile profile{0.02, -0.004, 0.005, 2.0};
    const SetpointSource src = [&](double t) { return contact_setpoints(profile, t); };
    SimState s = sim.initial_state(start_configuration({0.0, 0.0, profile.d_start, Eigen::Vector3d::Zero()}));
    double worst_lag = 0.0;
    double approach_force = 0.0;
    double sum = 0.0;
    int n = 0;
    const long steps = std::lround(profile.duration() / dt);
    for (long i = 0; i < steps; ++i) {
        s = sim.step(s, src);
        if (s.rho.d > 0.0) {
            approach_force = std::max(approach_force, s.contact_force);
            worst_lag = std::max(worst_lag, std::abs(s.rho.d - src(s.t).rho_d.d));
        }
        if (s.t > profile.duration() - 0.5) {
            sum += s.contact_force;
            ++n;
        }
    }
    const double oracle = steady_state_force(500.0, 500.0, profile.d_hold);
    CHECK(approach_force == 0.0);
    CHECK(worst_lag < 0.002);
    CHECK(sum / n == doctest::Approx(oracle).epsilon(0.02));
}

TEST_CASE("stepping is deterministic")
{
    CHECK(final_q(0.001, 0.3) == final_q(0.001, 0.3));
}

TEST_CASE("joint limit violation ends the run")
{
    ControllerSettings cs;
    cs.gains.stiffness.setZero();
    cs.gains.damping.setZero();
    const Simulator sim = flat_simulator(cs, 0.001);
    Vector7d q = nominal();
    q(6) = reference_arm().joints[6].upper_limit - 1e-4;
    Vector7d qdot = Vector7d::Zero();
    qdot(6) = 1.0;
    const SimState s = sim.initial_state(q, qdot);
    const SetpointSource src = [](double) { return Setpoint{}; };
    CHECK_THROWS_AS(sim.step(s, src), JointLimitError);
}

TEST_CASE("non-finite state reports divergence with the step index")
{
    const Simulator sim = flat_simulator(ControllerSettings{}, 0.001);
    SimState s = sim.initial_state(nominal());
    s.step = 41;
    s.joint.qdot(0) = std::numeric_limits<double>::quiet_NaN();
    const SetpointSource src = [](double) { return Setpoint{}; };
    try {
        sim.step(s, src);
        FAIL("expected divergence");
    } catch (const IntegratorDivergence& e) {
        CHECK(e.step() == 42);
    }
}
