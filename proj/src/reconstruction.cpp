#include "ius/reconstruction.hpp"

#include "ius/errors.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

namespace ius {

void CameraIntrinsics::validate() const
{
    if (!(fx > 0.0 && fy > 0.0)) {
        throw InvalidInput("camera focal lengths must be positive");
    }
    if (width <= 0 || height <= 0) {
        throw InvalidInput("camera image size must be positive");
    }
    if (!(cx >= 0.0 && cx <= width - 1.0 && cy >= 0.0 && cy <= height - 1.0)) {
        throw InvalidInput("principal point must lie inside the image");
    }
    if (!(depth_noise_sigma >= 0.0)) {
        throw InvalidInput("depth noise sigma must be non-negative");
    }
}

std::size_t DepthImage::valid_count() const
{
    return static_cast<std::size_t>(std::count_if(depths.begin(), depths.end(), [](double d) { return d > 0.0; }));
}

std::size_t HeightField::covered_count() const
{
    return static_cast<std::size_t>(std::count_if(weights.begin(), weights.end(), [](double w) { return w > 0.0; }));
}

DepthImage render_depth(const MeshIndex& mesh, const CameraIntrinsics& intrinsics, const Pose& pose,
                        std::uint64_t seed)
{
    intrinsics.validate();
    DepthImage img;
    img.intrinsics = intrinsics;
    img.pose = pose;
    img.depths.assign(static_cast<std::size_t>(intrinsics.width * intrinsics.height), 0.0);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    const Eigen::Matrix3d r = pose.rotation_matrix();
    for (int v = 0; v < intrinsics.height; ++v) {
        for (int u = 0; u < intrinsics.width; ++u) {
            // Ray with unit z component, so the hit parameter is the depth.
            const Eigen::Vector3d ray((u - intrinsics.cx) / intrinsics.fx, (v - intrinsics.cy) / intrinsics.fy, 1.0);
            const auto hit = mesh.raycast(pose.translation, r * ray);
            // Draw for every pixel so the noise pattern does not depend on coverage.
            const double n = noise(rng) * intrinsics.depth_noise_sigma;
            if (hit) {
                img.depths[static_cast<std::size_t>(v * intrinsics.width + u)] = std::max(hit->t + n, 1e-6);
            }
        }
    }
    return img;
}

HeightField fuse_views(const std::vector<DepthImage>& images, const ScenePlane& plane, const FusionSettings& settings)
{
    if (images.empty()) {
        throw InvalidInput("fusion needs at least one depth image");
    }
    if (!(settings.resolution > 0.0) || !(settings.extent > 0.0)) {
        throw InvalidInput("fusion resolution and extent must be positive");
    }
    HeightField field;
    field.plane = plane;
    field.plane.normal.normalize();
    field.resolution = settings.resolution;
    const int cells = static_cast<int>(std::lround(settings.extent / settings.resolution));
    field.nx = cells + 1;
    field.ny = cells + 1;
    field.origin = Eigen::Vector2d::Constant(-0.5 * cells * settings.resolution);
    field.heights.assign(static_cast<std::size_t>(field.nx * field.ny), 0.0);
    field.weights.assign(static_cast<std::size_t>(field.nx * field.ny), 0.0);

    // Heights are accumulated as integers in units of 2^-40 m, so per-node sums
    // are exact and the result depends neither on image order nor on
    // duplicated views.
    constexpr double kQuantum = 0x1p-40;
    std::vector<std::int64_t> sums(field.heights.size(), 0);
    std::vector<std::int64_t> counts(field.heights.size(), 0);
    const Eigen::Matrix<double, 3, 2> basis = field.plane.basis();
    for (const DepthImage& img : images) {
        const CameraIntrinsics& k = img.intrinsics;
        const Eigen::Matrix3d r = img.pose.rotation_matrix();
        for (int v = 0; v < k.height; ++v) {
            for (int u = 0; u < k.width; ++u) {
                const double depth = img.at(u, v);
                if (!(depth > 0.0)) {
                    continue;
                }
                const Eigen::Vector3d local((u - k.cx) / k.fx * depth, (v - k.cy) / k.fy * depth, depth);
                const Eigen::Vector3d rel = r * local + img.pose.translation - field.plane.centre;
                const Eigen::Vector2d s = basis.transpose() * rel;
                const long i = std::lround((s.x() - field.origin.x()) / field.resolution);
                const long j = std::lround((s.y() - field.origin.y()) / field.resolution);
                if (i < 0 || j < 0 || i >= field.nx || j >= field.ny) {
                    continue;
                }
                const std::size_t node = field.index(static_cast<int>(i), static_cast<int>(j));
                sums[node] += std::llround(field.plane.normal.dot(rel) / kQuantum);
                counts[node] += 1;
            }
        }
    }
    bool any = false;
    for (std::size_t n = 0; n < sums.size(); ++n) {
        if (counts[n] == 0) {
            continue;
        }
        any = true;
        // Exact integer quotient plus a correctly rounded fraction: k-fold
        // duplication scales remainder and count alike and yields the same double.
        const std::lldiv_t qr = std::lldiv(sums[n], counts[n]);
        field.heights[n] = (static_cast<double>(qr.quot) + static_cast<double>(qr.rem) / static_cast<double>(counts[n])) *
                           kQuantum;
        field.weights[n] = static_cast<double>(counts[n]);
    }
    if (!any) {
        throw EmptyReconstruction("no valid depth pixel falls inside the reconstruction region");
    }
    return field;
}

TriMesh extract_mesh(const HeightField& field)
{
    const auto covered = [&](int i, int j) { return field.weights[field.index(i, j)] > 0.0; };
    std::vector<int> vertex_of(field.heights.size(), -1);
    std::vector<Eigen::Vector3d> verts;
    std::vector<Face> faces;
    const auto vertex = [&](int i, int j) {
        const std::size_t n = field.index(i, j);
        if (vertex_of[n] < 0) {
            vertex_of[n] = static_cast<int>(verts.size());
            verts.push_back(field.plane.point(field.node(i, j), field.heights[n]));
        }
        return vertex_of[n];
    };
    for (int j = 0; j + 1 < field.ny; ++j) {
        for (int i = 0; i + 1 < field.nx; ++i) {
            if (!(covered(i, j) && covered(i + 1, j) && covered(i + 1, j + 1) && covered(i, j + 1))) {
                continue;
            }
            const int a = vertex(i, j);
            const int b = vertex(i + 1, j);
            const int c = vertex(i + 1, j + 1);
            const int d = vertex(i, j + 1);
            faces.push_back({a, b, c});
            faces.push_back({a, c, d});
        }
    }
    if (faces.empty()) {
        throw EmptyReconstruction("height field has no covered cell");
    }
    return TriMesh(std::move(verts), std::move(faces));
}

namespace {

std::vector<Eigen::Vector3d> sample_surface(const TriMesh& mesh, int count, std::mt19937_64& rng)
{
    std::vector<double> cumulative;
    cumulative.reserve(mesh.num_faces());
    double total = 0.0;
    for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
        total += mesh.face_area(static_cast<int>(f));
        cumulative.push_back(total);
    }
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<Eigen::Vector3d> pts;
    pts.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        const double pick = uni(rng) * total;
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
        const int f = static_cast<int>(std::min<std::ptrdiff_t>(it - cumulative.begin(),
                                                                static_cast<std::ptrdiff_t>(mesh.num_faces()) - 1));
        const double r1 = std::sqrt(uni(rng));
        const double r2 = uni(rng);
        pts.push_back((1.0 - r1) * mesh.vertex(f, 0) + r1 * (1.0 - r2) * mesh.vertex(f, 1) + r1 * r2 * mesh.vertex(f, 2));
    }
    return pts;
}

}  // namespace

MeshError mesh_error(const TriMesh& recon, const TriMesh& truth, int samples, std::uint64_t seed)
{
    if (recon.empty() || truth.empty()) {
        throw InvalidInput("mesh_error needs two non-empty meshes");
    }
    std::mt19937_64 rng(seed);
    const MeshIndex recon_index(recon);
    const MeshIndex truth_index(truth);
    double sum_sq = 0.0;
    double worst = 0.0;
    for (const auto& [from, to] : {std::pair{&recon, &truth_index}, std::pair{&truth, &recon_index}}) {
        for (const Eigen::Vector3d& p : sample_surface(*from, samples, rng)) {
            const double d = to->closest_point(p).distance;
            sum_sq += d * d;
            worst = std::max(worst, d);
        }
    }
    return {std::sqrt(sum_sq / (2.0 * samples)), worst};
}

// ---------------------------------------------------------------------------

void save_pfm(const DepthImage& image, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write depth map " + path.string());
    }
    const int w = image.intrinsics.width;
    const int h = image.intrinsics.height;
    out << "Pf\n" << w << " " << h << "\n-1.0\n";
    std::vector<char> row(static_cast<std::size_t>(w) * 4);
    for (int v = h - 1; v >= 0; --v) {
        for (int u = 0; u < w; ++u) {
            const float f = static_cast<float>(image.at(u, v));
            std::uint32_t bits = std::bit_cast<std::uint32_t>(f);
            for (int b = 0; b < 4; ++b) {
                row[static_cast<std::size_t>(u * 4 + b)] = static_cast<char>((bits >> (8 * b)) & 0xffu);
            }
        }
        out.write(row.data(), static_cast<std::streamsize>(row.size()));
    }
    if (!out) {
        throw IoError("failed writing depth map " + path.string());
    }
}

std::vector<float> load_pfm(const std::filesystem::path& path, int& width, int& height)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open depth map " + path.string());
    }
    std::string magic;
    double scale = 0.0;
    in >> magic >> width >> height >> scale;
    in.get();
    if (magic != "Pf" || width <= 0 || height <= 0 || scale == 0.0) {
        throw ParseError("PFM: bad header in " + path.string());
    }
    const bool little = scale < 0.0;
    std::vector<float> data(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
    std::vector<unsigned char> row(static_cast<std::size_t>(width) * 4);
    for (int v = height - 1; v >= 0; --v) {
        in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
        if (!in) {
            throw ParseError("PFM: truncated data in " + path.string());
        }
        for (int u = 0; u < width; ++u) {
            std::uint32_t bits = 0;
            for (int b = 0; b < 4; ++b) {
                const int shift = little ? 8 * b : 8 * (3 - b);
                bits |= static_cast<std::uint32_t>(row[static_cast<std::size_t>(u * 4 + b)]) << shift;
            }
            data[static_cast<std::size_t>(v * width + u)] = std::bit_cast<float>(bits);
        }
    }
    return data;
}

namespace {

std::string num(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace

std::string write_height_field(const HeightField& field)
{
    std::string out = "HEIGHTFIELD 1\n";
    const auto vec = [&](const char* tag, const Eigen::Vector3d& v) {
        out += std::string(tag) + " " + num(v.x()) + " " + num(v.y()) + " " + num(v.z()) + "\n";
    };
    vec("centre", field.plane.centre);
    vec("normal", field.plane.normal);
    vec("x_axis", field.plane.x_axis);
    out += "resolution " + num(field.resolution) + "\n";
    out += "size " + std::to_string(field.nx) + " " + std::to_string(field.ny) + "\n";
    out += "origin " + num(field.origin.x()) + " " + num(field.origin.y()) + "\n";
    for (std::size_t n = 0; n < field.heights.size(); ++n) {
        out += num(field.heights[n]) + " " + num(field.weights[n]) + "\n";
    }
    return out;
}

HeightField read_height_field(const std::string& text)
{
    std::istringstream in(text);
    std::string tag;
    int version = 0;
    in >> tag >> version;
    if (tag != "HEIGHTFIELD" || version != 1) {
        throw ParseError("height field: bad header");
    }
    HeightField f;
    const auto expect = [&](const char* want) {
        in >> tag;
        if (tag != want) {
            throw ParseError(std::string("height field: expected '") + want + "'");
        }
    };
    expect("centre");
    in >> f.plane.centre.x() >> f.plane.centre.y() >> f.plane.centre.z();
    expect("normal");
    in >> f.plane.normal.x() >> f.plane.normal.y() >> f.plane.normal.z();
    expect("x_axis");
    in >> f.plane.x_axis.x() >> f.plane.x_axis.y() >> f.plane.x_axis.z();
    expect("resolution");
    in >> f.resolution;
    expect("size");
    in >> f.nx >> f.ny;
    expect("origin");
    in >> f.origin.x() >> f.origin.y();
    if (!in || f.nx <= 0 || f.ny <= 0 || !(f.resolution > 0.0)) {
        throw ParseError("height field: bad header values");
    }
    const std::size_t n = static_cast<std::size_t>(f.nx) * static_cast<std::size_t>(f.ny);
    f.heights.resize(n);
    f.weights.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        in >> f.heights[k] >> f.weights[k];
    }
    if (!in) {
        throw ParseError("height field: truncated data");
    }
    return f;
}

void save_height_field(const HeightField& field, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write height field " + path.string());
    }
    out << write_height_field(field);
}

}  // namespace ius
