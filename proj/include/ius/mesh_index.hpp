#pragma once

#include "ius/aabb_tree.hpp"
#include "ius/tri_mesh.hpp"

#include <optional>

namespace ius {

struct MeshPoint {
    int face = -1;
    Eigen::Vector3d barycentric = Eigen::Vector3d::Zero();
    Eigen::Vector3d point = Eigen::Vector3d::Zero();
    double distance = 0.0;  // unsigned
};

struct MeshRayHit {
    int face = -1;
    double t = 0.0;
    Eigen::Vector3d barycentric = Eigen::Vector3d::Zero();
};

// Bounding-box hierarchy over a mesh for closest-point and ray queries.
class MeshIndex {
public:
    explicit MeshIndex(TriMesh mesh);

    const TriMesh& mesh() const { return mesh_; }
    const AabbTree<3>& tree() const { return tree_; }

    // Global minimiser of point-to-triangle distance; ties go to the lower face id.
    MeshPoint closest_point(const Eigen::Vector3d& p) const;

    // Nearest hit with t > t_min.
    std::optional<MeshRayHit> raycast(const Eigen::Vector3d& origin, const Eigen::Vector3d& direction,
                                      double t_min = 0.0) const;

private:
    TriMesh mesh_;
    AabbTree<3> tree_;
};

}  // namespace ius
