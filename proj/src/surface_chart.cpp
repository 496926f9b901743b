#include "ius/surface_chart.hpp"

#include "ius/errors.hpp"
#include "ius/triangle_geometry.hpp"

#include <Eigen/LU>

#include <cmath>
#include <limits>

namespace ius {

namespace {

constexpr double kBaryTolerance = 1e-10;
constexpr int kNewtonIterations = 30;

}  // namespace

SurfaceChart::SurfaceChart(TriMesh mesh, ScenePlane plane, double vertical_extent)
    : index_(std::move(mesh)), plane_(std::move(plane)), vertical_extent_(vertical_extent)
{
    if (index_.mesh().empty()) {
        throw InvalidInput("surface chart: mesh is empty");
    }
    if (!(vertical_extent_ > 0.0)) {
        throw InvalidInput("surface chart: vertical extent must be positive");
    }
    plane_.normal.normalize();
    vertex_normals_ = index_.mesh().vertex_normals();

    const TriMesh& m = index_.mesh();
    std::vector<AabbTree<2>::Box> boxes;
    projected_faces_.reserve(m.num_faces());
    boxes.reserve(m.num_faces());
    for (std::size_t f = 0; f < m.num_faces(); ++f) {
        std::array<Eigen::Vector2d, 3> tri;
        AabbTree<2>::Box box;
        box.setEmpty();
        for (int k = 0; k < 3; ++k) {
            tri[static_cast<std::size_t>(k)] = plane_.coordinates(m.vertex(static_cast<int>(f), k));
            box.extend(tri[static_cast<std::size_t>(k)]);
        }
        projected_faces_.push_back(tri);
        boxes.push_back(box);
    }
    footprint_ = AabbTree<2>(std::move(boxes));

    // Anchor: surface point above the plane centre (or above the nearest
    // footprint point when the centre projects outside the mesh).
    origin_ = Eigen::Vector2d::Zero();
    origin_ = clamp(Eigen::Vector2d::Zero());
    anchor_ = embed(Eigen::Vector2d::Zero()).where.point;
}

int SurfaceChart::locate(const Eigen::Vector2d& plane_s, Eigen::Vector3d& barycentric) const
{
    int best = -1;
    double best_min = -std::numeric_limits<double>::infinity();
    footprint_.traverse(
        [&](const AabbTree<2>::Box& box) {
            return box.squaredExteriorDistance(plane_s) <= 1e-24;
        },
        [&](int f) {
            const auto& tri = projected_faces_[static_cast<std::size_t>(f)];
            const double area2 = (tri[1] - tri[0]).x() * (tri[2] - tri[0]).y() - (tri[2] - tri[0]).x() * (tri[1] - tri[0]).y();
            if (area2 <= 1e-14) {
                return;  // vertical or overhanging in projection
            }
            const Eigen::Vector3d b = barycentric_2d(plane_s, tri[0], tri[1], tri[2]);
            const double mn = b.minCoeff();
            if (mn >= -1e-12 && (mn > best_min || (mn == best_min && f < best))) {
                best_min = mn;
                best = f;
                barycentric = b;
            }
        });
    return best;
}

bool SurfaceChart::contains(const Eigen::Vector2d& s) const
{
    Eigen::Vector3d b;
    return locate(s + origin_, b) >= 0;
}

Eigen::Vector2d SurfaceChart::clamp(const Eigen::Vector2d& s) const
{
    const Eigen::Vector2d ps = s + origin_;
    if (contains(s)) {
        return s;
    }
    const auto [face, d2] = footprint_.nearest(ps, [&](int f) {
        const auto& tri = projected_faces_[static_cast<std::size_t>(f)];
        return (closest_point_on_triangle_2d(ps, tri[0], tri[1], tri[2]) - ps).squaredNorm();
    });
    (void)d2;
    const auto& tri = projected_faces_[static_cast<std::size_t>(face)];
    const Eigen::Vector2d best_point = closest_point_on_triangle_2d(ps, tri[0], tri[1], tri[2]);
    return best_point - origin_;
}

SurfaceFrame SurfaceChart::frame_from_normal(const Eigen::Vector3d& n) const
{
    SurfaceFrame fr;
    fr.normal = n;
    const Eigen::Vector3d e = plane_.e1();
    Eigen::Vector3d u = e - e.dot(n) * n;
    if (u.norm() < 1e-9) {
        throw ChartBoundaryError("surface normal is parallel to the chart x axis; frame is degenerate");
    }
    fr.t1 = u.normalized();
    fr.t2 = n.cross(fr.t1);
    return fr;
}

EmbeddedPoint SurfaceChart::embed(const Eigen::Vector2d& s) const
{
    Eigen::Vector3d b;
    const int face = locate(s + origin_, b);
    if (face < 0) {
        throw ChartDomainError(clamp(s), "chart coordinates outside the chart domain");
    }
    b = b.cwiseMax(0.0);
    b /= b.sum();
    const TriMesh& m = index_.mesh();
    const Face& fv = m.faces()[static_cast<std::size_t>(face)];
    EmbeddedPoint out;
    out.where.face_id = face;
    out.where.barycentric = b;
    out.where.s = s;
    out.where.point = b(0) * m.vertex(face, 0) + b(1) * m.vertex(face, 1) + b(2) * m.vertex(face, 2);
    Eigen::Vector3d n = Eigen::Vector3d::Zero();
    for (int k = 0; k < 3; ++k) {
        n += b(k) * vertex_normals_[static_cast<std::size_t>(fv[static_cast<std::size_t>(k)])];
    }
    out.frame = frame_from_normal(n.normalized());
    return out;
}

Pose SurfaceChart::aligned_pose(const Eigen::Vector2d& s, double height) const
{
    const EmbeddedPoint e = embed(s);
    return Pose(e.frame.rotation(), e.where.point + height * e.frame.normal);
}

ClosestPoint SurfaceChart::closest_point(const Eigen::Vector3d& p) const
{
    const MeshPoint mp = index_.closest_point(p);
    const Face& fv = mesh().faces()[static_cast<std::size_t>(mp.face)];
    Eigen::Vector3d n = Eigen::Vector3d::Zero();
    for (int k = 0; k < 3; ++k) {
        n += mp.barycentric(k) * vertex_normals_[static_cast<std::size_t>(fv[static_cast<std::size_t>(k)])];
    }
    const double side = (p - mp.point).dot(n);
    ClosestPoint out;
    out.where.face_id = mp.face;
    out.where.barycentric = mp.barycentric;
    out.where.point = mp.point;
    out.where.s = chart_coordinates(mp.point);
    out.distance = side < 0.0 ? -mp.distance : mp.distance;
    return out;
}

std::optional<SurfaceChart::Projection> SurfaceChart::project_on_face(int face, const Eigen::Vector3d& p) const
{
    const TriMesh& m = index_.mesh();
    const Face& fv = m.faces()[static_cast<std::size_t>(face)];
    const Eigen::Vector3d& v0 = m.vertex(face, 0);
    const Eigen::Vector3d e1 = m.vertex(face, 1) - v0;
    const Eigen::Vector3d e2 = m.vertex(face, 2) - v0;
    const Eigen::Vector3d& n0 = vertex_normals_[static_cast<std::size_t>(fv[0])];
    const Eigen::Vector3d dn1 = vertex_normals_[static_cast<std::size_t>(fv[1])] - n0;
    const Eigen::Vector3d dn2 = vertex_normals_[static_cast<std::size_t>(fv[2])] - n0;

    // Initial guess: orthogonal projection onto the face plane.
    const Eigen::Vector3d nf = m.face_normals()[static_cast<std::size_t>(face)];
    Eigen::Vector3d x;  // (b1, b2, h)
    {
        Eigen::Matrix3d a;
        a << e1, e2, nf;
        x = a.partialPivLu().solve(p - v0);
    }
    for (int it = 0; it < kNewtonIterations; ++it) {
        const Eigen::Vector3d blended = n0 + x(0) * dn1 + x(1) * dn2;
        const Eigen::Vector3d residual = v0 + x(0) * e1 + x(1) * e2 + x(2) * blended - p;
        Eigen::Matrix3d jac;
        jac << e1 + x(2) * dn1, e2 + x(2) * dn2, blended;
        const Eigen::Vector3d step = jac.partialPivLu().solve(residual);
        if (!step.allFinite()) {
            return std::nullopt;
        }
        x -= step;
        if (step.lpNorm<Eigen::Infinity>() < 1e-15) {
            break;
        }
        // Far outside the face: give up early.
        if (std::abs(x(0)) > 10.0 || std::abs(x(1)) > 10.0) {
            return std::nullopt;
        }
    }
    const Eigen::Vector3d bary(1.0 - x(0) - x(1), x(0), x(1));
    if (bary.minCoeff() < -kBaryTolerance) {
        return std::nullopt;
    }
    const Eigen::Vector3d blended = n0 + x(0) * dn1 + x(1) * dn2;
    const Eigen::Vector3d residual = v0 + x(0) * e1 + x(1) * e2 + x(2) * blended - p;
    if (residual.norm() > 1e-12 * std::max(1.0, p.norm())) {
        return std::nullopt;
    }
    return Projection{face, bary, x(2), blended};
}

std::optional<SurfaceChart::Projection> SurfaceChart::project(const Eigen::Vector3d& p) const
{
    // Any projection foot with |p - f| <= r lies on a face whose box, grown
    // by r, contains p. Grow r until the best foot found is within r.
    const double closest = index_.closest_point(p).distance;
    if (closest > vertical_extent_) {
        return std::nullopt;
    }
    double radius = std::min(vertical_extent_, 1.5 * closest + 1e-9);
    for (;;) {
        std::optional<Projection> best;
        double best_dist = std::numeric_limits<double>::infinity();
        index_.tree().traverse(
            [&](const AabbTree<3>::Box& box) { return box.squaredExteriorDistance(p) <= radius * radius; },
            [&](int f) {
                if (index_.tree().primitive_box(f).squaredExteriorDistance(p) > radius * radius) {
                    return;
                }
                auto proj = project_on_face(f, p);
                if (!proj) {
                    return;
                }
                const double dist = std::abs(proj->height) * proj->blended_normal.norm();
                if (dist < best_dist || (dist == best_dist && f < best->face)) {
                    best_dist = dist;
                    best = proj;
                }
            });
        if (best && best_dist <= radius) {
            if (best_dist > vertical_extent_) {
                return std::nullopt;
            }
            return best;
        }
        if (radius >= vertical_extent_) {
            return std::nullopt;
        }
        radius = std::min(vertical_extent_, 2.0 * radius);
    }
}

TaskMap SurfaceChart::task_map(const Pose& probe) const
{
    const Eigen::Vector3d& p = probe.translation;
    const auto proj = project(p);
    if (!proj) {
        throw ChartBoundaryError("probe is outside the chart or beyond its vertical extent");
    }
    const int face = proj->face;
    const TriMesh& m = index_.mesh();
    const Face& fv = m.faces()[static_cast<std::size_t>(face)];
    const Eigen::Vector3d& v0 = m.vertex(face, 0);
    const Eigen::Vector3d e1 = m.vertex(face, 1) - v0;
    const Eigen::Vector3d e2 = m.vertex(face, 2) - v0;
    const Eigen::Vector3d& n0 = vertex_normals_[static_cast<std::size_t>(fv[0])];
    const Eigen::Vector3d dn1 = vertex_normals_[static_cast<std::size_t>(fv[1])] - n0;
    const Eigen::Vector3d dn2 = vertex_normals_[static_cast<std::size_t>(fv[2])] - n0;
    const double h = proj->height;
    const Eigen::Vector3d& blended = proj->blended_normal;
    const double blen = blended.norm();

    TaskMap out;
    out.foot.face_id = face;
    out.foot.barycentric = proj->barycentric.cwiseMax(0.0) / proj->barycentric.cwiseMax(0.0).sum();
    out.foot.point = v0 + proj->barycentric(1) * e1 + proj->barycentric(2) * e2;
    out.foot.s = chart_coordinates(out.foot.point);
    const Eigen::Vector3d n = blended / blen;
    out.frame = frame_from_normal(n);

    // Error quaternion: world-frame rotation from the probe to the aligned frame.
    Eigen::Quaterniond qd(out.frame.rotation());
    Eigen::Quaterniond qe = qd * probe.rotation.conjugate();
    if (qe.w() < 0.0) {
        qe.coeffs() *= -1.0;
    }
    qe.normalize();
    const double w = qe.w();
    const Eigen::Vector3d eps = qe.vec();

    out.coords.s1 = out.foot.s.x();
    out.coords.s2 = out.foot.s.y();
    out.coords.d = h * blen;
    out.coords.eps = eps;

    // Implicit differentiation of p = f(b) + h N(b) with respect to p.
    Eigen::Matrix3d a;
    a << e1 + h * dn1, e2 + h * dn2, blended;
    const Eigen::Matrix3d ainv = a.inverse();
    Eigen::Matrix<double, 3, 2> edges;
    edges << e1, e2;
    Eigen::Matrix<double, 3, 2> normal_edges;
    normal_edges << dn1, dn2;
    const Eigen::Matrix<double, 2, 3> dbary = ainv.topRows<2>();
    const Eigen::Matrix3d dfoot = edges * dbary;
    const Eigen::Matrix3d dblended = normal_edges * dbary;
    const Eigen::Matrix3d proj_n = Eigen::Matrix3d::Identity() - n * n.transpose();
    const Eigen::Matrix3d dn = proj_n * dblended / blen;
    const Eigen::RowVector3d dd = blen * ainv.row(2) + h * n.transpose() * dblended;

    const Eigen::Vector3d ex = plane_.e1();
    const Eigen::Vector3d u = ex - ex.dot(n) * n;
    const Eigen::Vector3d& t1 = out.frame.t1;
    const Eigen::Vector3d& t2 = out.frame.t2;
    const Eigen::Matrix3d du = -n * (ex.transpose() * dn) - ex.dot(n) * dn;
    const Eigen::Matrix3d dt1 = (Eigen::Matrix3d::Identity() - t1 * t1.transpose()) * du / u.norm();
    const Eigen::Matrix3d dt2 = -skew(t1) * dn + skew(n) * dt1;
    const Eigen::Matrix3d frame_rate = 0.5 * (skew(t1) * dt1 + skew(t2) * dt2 + skew(n) * dn);

    Matrix6d t = Matrix6d::Zero();
    t.block<2, 3>(0, 0) = plane_.basis().transpose() * dfoot;
    t.block<1, 3>(2, 0) = dd;
    t.block<3, 3>(3, 0) = 0.5 * (w * Eigen::Matrix3d::Identity() - skew(eps)) * frame_rate;
    t.block<3, 3>(3, 3) = -0.5 * (w * Eigen::Matrix3d::Identity() + skew(eps));
    out.twist_to_rate = t;
    return out;
}

SurfaceCoords SurfaceChart::task_coordinates(const Pose& probe) const { return task_map(probe).coords; }

Matrix67d SurfaceChart::task_jacobian(const ArmModel& model, const Vector7d& q) const
{
    const Pose probe = forward_kinematics(model, q, Frame::probe);
    return task_map(probe).twist_to_rate * geometric_jacobian(model, q, Frame::probe);
}

}  // namespace ius
