#pragma once

#include "ius/mesh_index.hpp"
#include "ius/pose.hpp"
#include "ius/scene_plane.hpp"
#include "ius/tri_mesh.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ius {

// Pinhole depth camera. Pixel (u, v) looks along ((u - cx) / fx, (v - cy) / fy, 1)
// in the optical frame (z forward, x right, y down).
struct CameraIntrinsics {
    double fx = 200.0;
    double fy = 200.0;
    double cx = 159.5;
    double cy = 119.5;
    int width = 320;
    int height = 240;
    double depth_noise_sigma = 0.001;  // m

    void validate() const;
};

// Depth is the optical-axis (z) distance in metres; 0 marks an invalid pixel.
struct DepthImage {
    CameraIntrinsics intrinsics;
    Pose pose;  // camera to world
    std::vector<double> depths;  // row-major, width * height

    double at(int u, int v) const { return depths[static_cast<std::size_t>(v * intrinsics.width + u)]; }
    std::size_t valid_count() const;
};

// Height samples on a lattice of nodes over the plane. Node (i, j) sits at
// in-plane coordinates origin + resolution * (i, j); heights are along the
// plane normal. weight == 0 marks an uncovered node.
struct HeightField {
    ScenePlane plane;
    double resolution = 0.005;
    int nx = 0;
    int ny = 0;
    Eigen::Vector2d origin = Eigen::Vector2d::Zero();
    std::vector<double> heights;
    std::vector<double> weights;

    std::size_t index(int i, int j) const { return static_cast<std::size_t>(j * nx + i); }
    Eigen::Vector2d node(int i, int j) const { return origin + resolution * Eigen::Vector2d(i, j); }
    std::size_t covered_count() const;
};

struct FusionSettings {
    double resolution = 0.005;  // m
    double extent = 0.3;        // side of the square region centred on the plane centre, m
};

// Ray-casts the mesh for every pixel and adds N(0, sigma) noise to valid depths.
// Deterministic for a given seed.
DepthImage render_depth(const MeshIndex& mesh, const CameraIntrinsics& intrinsics, const Pose& pose,
                        std::uint64_t seed);

// Back-projects every valid pixel, bins it to the nearest lattice node and
// averages heights per node. The result does not depend on the order of
// `images`. Throws EmptyReconstruction when no pixel lands in the region.
HeightField fuse_views(const std::vector<DepthImage>& images, const ScenePlane& plane,
                       const FusionSettings& settings = {});

// One vertex per node used by a covered cell (a lattice square whose four
// corners are covered), two triangles per covered cell, normals along the
// plane normal side. Throws EmptyReconstruction when no cell is covered.
TriMesh extract_mesh(const HeightField& field);

struct MeshError {
    double rms = 0.0;
    double hausdorff = 0.0;
};

// Symmetric point-sampled surface distance: `samples` area-uniform points on
// each mesh, distance to the other mesh.
MeshError mesh_error(const TriMesh& recon, const TriMesh& truth, int samples = 10000, std::uint64_t seed = 1);

// Portable float map, grayscale ("Pf"), little-endian, rows bottom to top.
// Depths are stored as 32-bit floats.
void save_pfm(const DepthImage& image, const std::filesystem::path& path);
std::vector<float> load_pfm(const std::filesystem::path& path, int& width, int& height);

// Height field text format:
//   HEIGHTFIELD 1
//   centre <x> <y> <z>
//   normal <x> <y> <z>
//   x_axis <x> <y> <z>
//   resolution <m>
//   size <nx> <ny>
//   origin <s1> <s2>
//   then nx * ny lines "<height> <weight>", i fastest.
std::string write_height_field(const HeightField& field);
HeightField read_height_field(const std::string& text);
void save_height_field(const HeightField& field, const std::filesystem::path& path);

}  // namespace ius
