#pragma once

#include "ius/aabb_tree.hpp"
#include "ius/arm_model.hpp"
#include "ius/mesh_index.hpp"
#include "ius/pose.hpp"
#include "ius/scene_plane.hpp"
#include "ius/tri_mesh.hpp"

#include <optional>

namespace ius {

// Location on the chart: face, barycentric weights (non-negative, sum 1) and
// chart coordinates s = (s1, s2) in metres.
struct ChartPoint {
    int face_id = -1;
    Eigen::Vector3d barycentric = Eigen::Vector3d::Zero();
    Eigen::Vector2d s = Eigen::Vector2d::Zero();
    Eigen::Vector3d point = Eigen::Vector3d::Zero();
};

// Right-handed orthonormal surface frame: outward normal n and tangents t1, t2.
struct SurfaceFrame {
    Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
    Eigen::Vector3d t1 = Eigen::Vector3d::UnitX();
    Eigen::Vector3d t2 = Eigen::Vector3d::UnitY();

    // Columns t1, t2, n: the probe orientation that is aligned with the surface.
    Eigen::Matrix3d rotation() const
    {
        Eigen::Matrix3d r;
        r << t1, t2, normal;
        return r;
    }
};

// Surface-specific task coordinates, stacked as (s1, s2, d, eps1, eps2, eps3).
// d > 0 above the surface, d < 0 penetration. eps is the vector part of the
// unit quaternion (w >= 0) rotating the current probe orientation onto the
// surface-aligned orientation, expressed in the world frame.
struct SurfaceCoords {
    double s1 = 0.0;
    double s2 = 0.0;
    double d = 0.0;
    Eigen::Vector3d eps = Eigen::Vector3d::Zero();

    Vector6d vector() const
    {
        Vector6d v;
        v << s1, s2, d, eps;
        return v;
    }

    static SurfaceCoords from_vector(const Vector6d& v) { return {v(0), v(1), v(2), v.tail<3>()}; }
};

struct ClosestPoint {
    ChartPoint where;
    double distance = 0.0;  // signed by the side of the interpolated normal
};

struct EmbeddedPoint {
    ChartPoint where;
    SurfaceFrame frame;
};

// Task coordinates plus the linear map from probe twist (v; omega) to
// coordinate rates.
struct TaskMap {
    SurfaceCoords coords;
    ChartPoint foot;
    SurfaceFrame frame;
    Matrix6d twist_to_rate;
};

// Chart of a height-field mesh over the localisation plane. The chart
// coordinates of a surface point are its in-plane coordinates, measured from
// the projection of the anchor (the surface point above the plane centre).
//
// A probe point p is attached to the surface by normal projection: the foot f
// on face F and offset h satisfy p = f + h N(f), where N is the barycentric
// blend of vertex normals. Unlike the Euclidean closest point this keeps the
// surface frame continuous across edges. The search is restricted to
// |d| <= vertical_extent.
class SurfaceChart {
public:
    SurfaceChart(TriMesh mesh, ScenePlane plane, double vertical_extent = 0.1);

    const TriMesh& mesh() const { return index_.mesh(); }
    const MeshIndex& index() const { return index_; }
    const ScenePlane& plane() const { return plane_; }
    const Eigen::Vector3d& anchor() const { return anchor_; }
    double vertical_extent() const { return vertical_extent_; }
    const std::vector<Eigen::Vector3d>& vertex_normals() const { return vertex_normals_; }

    Eigen::Vector2d chart_coordinates(const Eigen::Vector3d& x) const { return plane_.coordinates(x) - origin_; }

    // Euclidean closest point, signed by the interpolated normal.
    ClosestPoint closest_point(const Eigen::Vector3d& p) const;

    bool contains(const Eigen::Vector2d& s) const;

    // Nearest chart coordinates inside the domain.
    Eigen::Vector2d clamp(const Eigen::Vector2d& s) const;

    // Throws ChartDomainError (carrying clamp(s)) when s is outside the domain.
    EmbeddedPoint embed(const Eigen::Vector2d& s) const;

    // Probe pose at height h above embed(s), aligned with the surface frame.
    Pose aligned_pose(const Eigen::Vector2d& s, double height) const;

    // Throws ChartBoundaryError when the probe is off the chart or beyond the
    // vertical extent.
    SurfaceCoords task_coordinates(const Pose& probe) const;
    TaskMap task_map(const Pose& probe) const;

    // J_rho = T(rho, frame) * J_geometric(probe), 6 x 7.
    Matrix67d task_jacobian(const ArmModel& model, const Vector7d& q) const;

private:
    struct Projection {
        int face;
        Eigen::Vector3d barycentric;
        double height;
        Eigen::Vector3d blended_normal;
    };

    std::optional<Projection> project_on_face(int face, const Eigen::Vector3d& p) const;
    std::optional<Projection> project(const Eigen::Vector3d& p) const;
    SurfaceFrame frame_from_normal(const Eigen::Vector3d& n) const;
    int locate(const Eigen::Vector2d& plane_s, Eigen::Vector3d& barycentric) const;

    MeshIndex index_;
    ScenePlane plane_;
    double vertical_extent_;
    std::vector<Eigen::Vector3d> vertex_normals_;
    std::vector<std::array<Eigen::Vector2d, 3>> projected_faces_;
    AabbTree<2> footprint_;
    Eigen::Vector2d origin_ = Eigen::Vector2d::Zero();
    Eigen::Vector3d anchor_ = Eigen::Vector3d::Zero();
};

}  // namespace ius
