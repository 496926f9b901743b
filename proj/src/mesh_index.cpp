#include "ius/mesh_index.hpp"

#include "ius/errors.hpp"
#include "ius/triangle_geometry.hpp"

#include <limits>

namespace ius {

namespace {

std::vector<AabbTree<3>::Box> face_boxes(const TriMesh& mesh)
{
    std::vector<AabbTree<3>::Box> boxes;
    boxes.reserve(mesh.num_faces());
    for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
        AabbTree<3>::Box box(mesh.vertex(static_cast<int>(f), 0));
        box.extend(mesh.vertex(static_cast<int>(f), 1));
        box.extend(mesh.vertex(static_cast<int>(f), 2));
        boxes.push_back(box);
    }
    return boxes;
}

bool ray_hits_box(const AabbTree<3>::Box& box, const Eigen::Vector3d& origin, const Eigen::Vector3d& inv_dir,
                  double t_max)
{
    double t0 = 0.0;
    double t1 = t_max;
    for (int k = 0; k < 3; ++k) {
        double a = (box.min()(k) - origin(k)) * inv_dir(k);
        double b = (box.max()(k) - origin(k)) * inv_dir(k);
        if (a > b) {
            std::swap(a, b);
        }
        // NaN from 0 * inf means the ray lies in the slab plane; keep the interval.
        if (a == a) {
            t0 = std::max(t0, a);
        }
        if (b == b) {
            t1 = std::min(t1, b);
        }
        if (t0 > t1 * (1.0 + 1e-12) + 1e-15) {
            return false;
        }
    }
    return true;
}

}  // namespace

MeshIndex::MeshIndex(TriMesh mesh) : mesh_(std::move(mesh)), tree_(face_boxes(mesh_)) {}

MeshPoint MeshIndex::closest_point(const Eigen::Vector3d& p) const
{
    if (mesh_.empty()) {
        throw InvalidInput("closest_point: mesh is empty");
    }
    const auto [face, d2] = tree_.nearest(p, [&](int f) {
        return (closest_point_on_triangle(p, mesh_.vertex(f, 0), mesh_.vertex(f, 1), mesh_.vertex(f, 2)).point - p)
            .squaredNorm();
    });
    const TrianglePoint tp = closest_point_on_triangle(p, mesh_.vertex(face, 0), mesh_.vertex(face, 1), mesh_.vertex(face, 2));
    return {face, tp.barycentric, tp.point, std::sqrt(d2)};
}

std::optional<MeshRayHit> MeshIndex::raycast(const Eigen::Vector3d& origin, const Eigen::Vector3d& direction,
                                             double t_min) const
{
    const Eigen::Vector3d inv_dir = direction.cwiseInverse();
    std::optional<MeshRayHit> best;
    double best_t = std::numeric_limits<double>::infinity();
    tree_.traverse([&](const AabbTree<3>::Box& box) { return ray_hits_box(box, origin, inv_dir, best_t); },
                   [&](int f) {
                       auto hit = intersect_ray_triangle(origin, direction, mesh_.vertex(f, 0), mesh_.vertex(f, 1),
                                                         mesh_.vertex(f, 2), t_min);
                       if (hit && (hit->t < best_t || (hit->t == best_t && f < best->face))) {
                           best_t = hit->t;
                           best = MeshRayHit{f, hit->t, hit->barycentric};
                       }
                   });
    return best;
}

}  // namespace ius
