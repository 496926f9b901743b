#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace ius {

using Face = std::array<int, 3>;

// Indexed triangle mesh with counter-clockwise winding and outward face
// normals. Construction validates the mesh: indices in range, no degenerate
// faces, and a consistently oriented manifold (each edge shared by at most
// two faces, traversed in opposite directions).
class TriMesh {
public:
    TriMesh() = default;
    TriMesh(std::vector<Eigen::Vector3d> vertices, std::vector<Face> faces);

    const std::vector<Eigen::Vector3d>& vertices() const { return vertices_; }
    const std::vector<Face>& faces() const { return faces_; }
    const std::vector<Eigen::Vector3d>& face_normals() const { return face_normals_; }

    std::size_t num_faces() const { return faces_.size(); }
    bool empty() const { return faces_.empty(); }

    const Eigen::Vector3d& vertex(int face, int corner) const
    {
        return vertices_[static_cast<std::size_t>(faces_[static_cast<std::size_t>(face)][static_cast<std::size_t>(corner)])];
    }

    double face_area(int face) const;
    double total_area() const;

    // Area-weighted average of incident face normals, unit length.
    std::vector<Eigen::Vector3d> vertex_normals() const;

    TriMesh translated(const Eigen::Vector3d& offset) const;

private:
    std::vector<Eigen::Vector3d> vertices_;
    std::vector<Face> faces_;
    std::vector<Eigen::Vector3d> face_normals_;
};

// Minimum triangle area accepted by TriMesh, m^2.
inline constexpr double kMinFaceArea = 1e-12;

// ASCII OFF: "OFF", "<nv> <nf> 0", vertex lines, "3 a b c" face lines.
// Coordinates are written in shortest round-trip form, so read(write(m))
// reproduces every coordinate bit for bit.
std::string write_off(const TriMesh& mesh);
TriMesh read_off(const std::string& text);
void save_off(const TriMesh& mesh, const std::filesystem::path& path);
TriMesh load_off(const std::filesystem::path& path);

// Regular grid of 2*(nx-1)*(ny-1) triangles over [x0, x0 + (nx-1) h] x [y0, y0 + (ny-1) h]
// with z = height(x, y). Winding gives +z facing normals.
template <class HeightFn>
TriMesh make_grid_mesh(double x0, double y0, double h, int nx, int ny, HeightFn&& height)
{
    std::vector<Eigen::Vector3d> verts;
    verts.reserve(static_cast<std::size_t>(nx * ny));
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const double x = x0 + i * h;
            const double y = y0 + j * h;
            verts.emplace_back(x, y, height(x, y));
        }
    }
    std::vector<Face> faces;
    faces.reserve(static_cast<std::size_t>(2 * (nx - 1) * (ny - 1)));
    for (int j = 0; j + 1 < ny; ++j) {
        for (int i = 0; i + 1 < nx; ++i) {
            const int a = j * nx + i;
            const int b = a + 1;
            const int c = a + nx + 1;
            const int d = a + nx;
            faces.push_back({a, b, c});
            faces.push_back({a, c, d});
        }
    }
    return TriMesh(std::move(verts), std::move(faces));
}

// Flat square phantom of side `size` centred at `centre`, top face at centre.z().
TriMesh make_flat_phantom(const Eigen::Vector3d& centre, double size, double resolution);

// Hemisphere of `radius` on a square base of side `size`, sampled on a grid.
TriMesh make_hemisphere_phantom(const Eigen::Vector3d& centre, double radius, double size, double resolution);

}  // namespace ius
