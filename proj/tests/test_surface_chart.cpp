#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ius/errors.hpp"
#include "ius/surface_chart.hpp"
#include "test_support.hpp"

#include <Eigen/SVD>

#include <limits>
#include <random>

using namespace ius;

namespace {

TriMesh flat_mesh() { return make_flat_phantom({0.0, 0.0, 0.0}, 0.2, 0.02); }

TriMesh bump_mesh()
{
    return make_grid_mesh(-0.1, -0.1, 0.004, 51, 51,
                          [](double x, double y) { return 0.03 * std::exp(-(x * x + y * y) / (0.05 * 0.05)); });
}

// Exhaustive oracle: orthogonal projection onto the triangle's plane when it
// falls inside, else the nearest of the three clamped edge points.
double oracle_point_triangle(const Eigen::Vector3d& p, const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                             const Eigen::Vector3d& c)
{
    const Eigen::Vector3d n = (b - a).cross(c - a).normalized();
    const Eigen::Vector3d foot = p - n.dot(p - a) * n;
    const auto inside = [&](const Eigen::Vector3d& u, const Eigen::Vector3d& v) {
        return (v - u).cross(foot - u).dot(n) >= 0.0;
    };
    if (inside(a, b) && inside(b, c) && inside(c, a)) {
        return std::abs(n.dot(p - a));
    }
    double best = std::numeric_limits<double>::infinity();
    for (auto [u, v] : {std::pair{a, b}, std::pair{b, c}, std::pair{c, a}}) {
        const double t = std::clamp((p - u).dot(v - u) / (v - u).squaredNorm(), 0.0, 1.0);
        best = std::min(best, (u + t * (v - u) - p).norm());
    }
    return best;
}

std::pair<int, double> brute_force_closest(const TriMesh& mesh, const Eigen::Vector3d& p)
{
    int best = -1;
    double dist = std::numeric_limits<double>::infinity();
    for (int f = 0; f < static_cast<int>(mesh.num_faces()); ++f) {
        const double d = oracle_point_triangle(p, mesh.vertex(f, 0), mesh.vertex(f, 1), mesh.vertex(f, 2));
        if (d < dist) {
            dist = d;
            best = f;
        }
    }
    return {best, dist};
}

Pose rotate_about(const Pose& pose, const Eigen::Vector3d& axis, double angle)
{
    return Pose(Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis)) * pose.rotation, pose.translation);
}

Eigen::Quaterniond random_rotation(std::mt19937_64& rng, double max_angle)
{
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(0.0, max_angle);
    const Eigen::Vector3d axis = Eigen::Vector3d(g(rng), g(rng), g(rng)).normalized();
    return Eigen::Quaterniond(Eigen::AngleAxisd(u(rng), axis));
}

}  // namespace

TEST_CASE("closest point: perpendicular foot and on-surface cases on a flat mesh")
{
    const SurfaceChart chart(flat_mesh(), ScenePlane{});
    const TriMesh& m = chart.mesh();
    for (int f : {0, 7, 101}) {
        const Eigen::Vector3d centroid = (m.vertex(f, 0) + m.vertex(f, 1) + m.vertex(f, 2)) / 3.0;
        const ClosestPoint above = chart.closest_point(centroid + 0.05 * m.face_normals()[static_cast<std::size_t>(f)]);
        CHECK((above.where.point - centroid).norm() < 1e-12);
        CHECK(std::abs(above.distance - 0.05) < 1e-12);
        const ClosestPoint below = chart.closest_point(centroid - 0.01 * Eigen::Vector3d::UnitZ());
        CHECK(std::abs(below.distance + 0.01) < 1e-12);
        const ClosestPoint on = chart.closest_point(centroid);
        CHECK(std::abs(on.distance) < 1e-12);
        CHECK(std::abs(on.where.barycentric.sum() - 1.0) < 1e-12);
    }
}

TEST_CASE("closest point equals the exhaustive per-triangle oracle")
{
    for (const TriMesh& mesh : {bump_mesh(), make_hemisphere_phantom({0, 0, 0}, 0.05, 0.2, 0.0025)}) {
        const MeshIndex index(mesh);
        std::mt19937_64 rng(17);
        std::uniform_real_distribution<double> xy(-0.12, 0.12);
        std::uniform_real_distribution<double> z(-0.03, 0.09);
        for (int trial = 0; trial < 300; ++trial) {
            const Eigen::Vector3d p(xy(rng), xy(rng), z(rng));
            const MeshPoint mp = index.closest_point(p);
            const auto [face, dist] = brute_force_closest(mesh, p);
            CHECK(std::abs(mp.distance - dist) < 1e-12);
            // Faces may differ only when the minimiser is shared (edge or vertex).
            if (mp.face != face) {
                const double own = oracle_point_triangle(p, mesh.vertex(mp.face, 0), mesh.vertex(mp.face, 1),
                                                         mesh.vertex(mp.face, 2));
                CHECK(std::abs(own - dist) < 1e-15);
            }
        }
    }
}

TEST_CASE("closest point on an empty mesh is rejected")
{
    const MeshIndex index{TriMesh{}};
    CHECK_THROWS_AS(index.closest_point(Eigen::Vector3d::Zero()), InvalidInput);
}

TEST_CASE("flat chart is the orthogonal projection")
{
    const SurfaceChart chart(flat_mesh(), ScenePlane{});
    CHECK(chart.anchor().norm() < 1e-15);
    const EmbeddedPoint origin = chart.embed({0.0, 0.0});
    CHECK(origin.where.point.norm() < 1e-15);

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-0.1, 0.1);
    for (int i = 0; i < 100; ++i) {
        const Eigen::Vector2d s(u(rng), u(rng));
        const EmbeddedPoint e = chart.embed(s);
        CHECK((e.where.point - Eigen::Vector3d(s.x(), s.y(), 0.0)).norm() < 1e-15);
        CHECK((e.frame.normal - Eigen::Vector3d::UnitZ()).norm() < 1e-15);
        CHECK((e.frame.t1 - Eigen::Vector3d::UnitX()).norm() < 1e-15);
    }
}

TEST_CASE("chart origin is the surface point above the plane centre")
{
    ScenePlane plane;
    plane.centre = Eigen::Vector3d(0.01, -0.02, 0.0);
    const SurfaceChart chart(bump_mesh(), plane);
    const EmbeddedPoint origin = chart.embed({0.0, 0.0});
    CHECK((origin.where.point - chart.anchor()).norm() < 1e-15);
    CHECK(std::abs(origin.where.point.x() - 0.01) < 1e-15);
    CHECK(std::abs(origin.where.point.y() + 0.02) < 1e-15);
    CHECK(origin.where.point.z() > 0.02);
}

TEST_CASE("embed then closest point round-trips chart coordinates on a curved mesh")
{
    for (const TriMesh& mesh : {bump_mesh(), make_hemisphere_phantom({0, 0, 0}, 0.05, 0.2, 0.005)}) {
        const SurfaceChart chart(mesh, ScenePlane{});
        std::mt19937_64 rng(2);
        std::uniform_real_distribution<double> u(-0.0999, 0.0999);
        for (int i = 0; i < 1000; ++i) {
            const Eigen::Vector2d s(u(rng), u(rng));
            const EmbeddedPoint e = chart.embed(s);
            CHECK((chart.closest_point(e.where.point).where.s - s).norm() < 1e-9);
            CHECK(std::abs(e.where.barycentric.sum() - 1.0) < 1e-12);
            CHECK(e.where.barycentric.minCoeff() >= 0.0);
            const Eigen::Matrix3d r = e.frame.rotation();
            CHECK((r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-10);
            CHECK(r.determinant() > 0.0);
        }
    }
}

TEST_CASE("embedding outside the domain reports the clamped coordinates")
{
    const SurfaceChart chart(flat_mesh(), ScenePlane{});
    try {
        chart.embed({0.3, 0.05});
        FAIL("expected ChartDomainError");
    } catch (const ChartDomainError& e) {
        CHECK((e.clamped() - Eigen::Vector2d(0.1, 0.05)).norm() < 1e-12);
        CHECK(chart.contains(e.clamped()));
    }
    CHECK_FALSE(chart.contains({-0.2, 0.0}));
}

TEST_CASE("task coordinates of an aligned probe above a flat mesh")
{
    const SurfaceChart chart(flat_mesh(), ScenePlane{});
    const Pose aligned(Eigen::Matrix3d::Identity(), Eigen::Vector3d(0.03, -0.04, 0.02));
    const SurfaceCoords rho = chart.task_coordinates(aligned);
    Vector6d expected;
    expected << 0.03, -0.04, 0.02, 0, 0, 0;
    CHECK((rho.vector() - expected).cwiseAbs().maxCoeff() < 1e-15);

    // Probe -z (out of the transducer face) points at the surface: -z_probe == -n.
    CHECK((aligned.rotation_matrix() * -Eigen::Vector3d::UnitZ() + Eigen::Vector3d::UnitZ()).norm() < 1e-15);

    const SurfaceCoords tilted = chart.task_coordinates(rotate_about(aligned, Eigen::Vector3d::UnitX(), M_PI / 2));
    CHECK(std::abs(tilted.eps.norm() - std::sin(M_PI / 4)) < 1e-12);
    CHECK(std::abs(tilted.d - 0.02) < 1e-15);
}

TEST_CASE("task coordinates of an aligned pose built by embed return (s, h, 0)")
{
    const SurfaceChart chart(bump_mesh(), ScenePlane{});
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-0.08, 0.08);
    std::uniform_real_distribution<double> hgt(-0.006, 0.04);
    for (int i = 0; i < 500; ++i) {
        const Eigen::Vector2d s(u(rng), u(rng));
        const double h = hgt(rng);
        const SurfaceCoords rho = chart.task_coordinates(chart.aligned_pose(s, h));
        CHECK(std::abs(rho.s1 - s.x()) < 1e-9);
        CHECK(std::abs(rho.s2 - s.y()) < 1e-9);
        CHECK(std::abs(rho.d - h) < 1e-9);
        CHECK(rho.eps.norm() < 1e-9);
    }
}

TEST_CASE("re-applying the error quaternion aligns the probe")
{
    const SurfaceChart chart(bump_mesh(), ScenePlane{});
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-0.08, 0.08);
    for (int i = 0; i < 500; ++i) {
        Pose probe = chart.aligned_pose({u(rng), u(rng)}, 0.01);
        probe.rotation = random_rotation(rng, 3.0) * probe.rotation;
        const SurfaceCoords rho = chart.task_coordinates(probe);
        CHECK(rho.eps.norm() <= 1.0);
        const double w = std::sqrt(std::max(0.0, 1.0 - rho.eps.squaredNorm()));
        const Eigen::Quaterniond err(w, rho.eps.x(), rho.eps.y(), rho.eps.z());
        const Pose corrected(err * probe.rotation, probe.translation);
        CHECK(chart.task_coordinates(corrected).eps.norm() < 1e-9);
    }
}

TEST_CASE("probe off the chart or beyond the vertical extent is a boundary error")
{
    const SurfaceChart chart(flat_mesh(), ScenePlane{}, 0.1);
    CHECK_THROWS_AS(chart.task_coordinates(Pose(Eigen::Matrix3d::Identity(), Eigen::Vector3d(0.3, 0.0, 0.01))),
                    ChartBoundaryError);
    CHECK_THROWS_AS(chart.task_coordinates(Pose(Eigen::Matrix3d::Identity(), Eigen::Vector3d(0.0, 0.0, 0.15))),
                    ChartBoundaryError);
    CHECK_NOTHROW(chart.task_coordinates(Pose(Eigen::Matrix3d::Identity(), Eigen::Vector3d(0.0, 0.0, 0.09))));
}

TEST_CASE("twist-to-rate map matches finite differences of the task coordinates")
{
    const SurfaceChart chart(bump_mesh(), ScenePlane{});
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-0.08, 0.08);
    std::uniform_real_distribution<double> hgt(-0.006, 0.05);
    std::normal_distribution<double> g;
    const double dt = 1e-6;
    for (int i = 0; i < 1000; ++i) {
        Pose probe = chart.aligned_pose({u(rng), u(rng)}, hgt(rng));
        probe.rotation = random_rotation(rng, 1.5) * probe.rotation;
        Vector6d twist;
        for (long k = 0; k < 6; ++k) {
            twist(k) = g(rng) * (k < 3 ? 0.1 : 1.0);
        }
        const auto moved = [&](double t) {
            const Eigen::Vector3d w = twist.tail<3>() * t;
            const Eigen::Quaterniond dq(Eigen::AngleAxisd(w.norm(), w.norm() > 0 ? w.normalized() : Eigen::Vector3d::UnitX()));
            return Pose(dq * probe.rotation, probe.translation + twist.head<3>() * t);
        };
        const Vector6d fd = (chart.task_coordinates(moved(dt)).vector() - chart.task_coordinates(moved(-dt)).vector()) / (2 * dt);
        const TaskMap map = chart.task_map(probe);
        CHECK((map.twist_to_rate * twist - fd).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("flat mesh with an aligned probe: the d row is the normal-projected linear Jacobian")
{
    ScenePlane plane;
    plane.centre = Eigen::Vector3d(0.55, 0.0, 0.0);
    const SurfaceChart chart(make_flat_phantom({0.55, 0.0, 0.0}, 0.2, 0.02), plane);
    const ArmModel model = reference_arm();
    // Any configuration over the phantom; alignment is not needed for the d row.
    Vector7d q;
    q << 0.0, 0.784, 0.0, 1.625, 0.0, 0.733, 0.0;
    const Pose probe = forward_kinematics(model, q, Frame::probe);
    REQUIRE(chart.contains(chart.chart_coordinates(probe.translation)));
    const Matrix67d jr = chart.task_jacobian(model, q);
    const Matrix67d jg = geometric_jacobian(model, q, Frame::probe);
    CHECK((jr.row(2) - Eigen::Vector3d::UnitZ().transpose() * jg.topRows<3>()).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((jr.topRows<2>() - jg.topRows<2>()).cwiseAbs().maxCoeff() < 1e-15);
}
