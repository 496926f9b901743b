#include "ius/tri_mesh.hpp"

#include "ius/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>

namespace ius {

TriMesh::TriMesh(std::vector<Eigen::Vector3d> vertices, std::vector<Face> faces)
    : vertices_(std::move(vertices)), faces_(std::move(faces))
{
    const int nv = static_cast<int>(vertices_.size());
    for (const auto& v : vertices_) {
        if (!v.allFinite()) {
            throw InvalidInput("mesh vertex is not finite");
        }
    }
    face_normals_.reserve(faces_.size());
    std::map<std::pair<int, int>, int> directed_edges;
    for (std::size_t f = 0; f < faces_.size(); ++f) {
        const Face& face = faces_[f];
        for (int idx : face) {
            if (idx < 0 || idx >= nv) {
                throw InvalidInput("face " + std::to_string(f) + " has vertex index out of range");
            }
        }
        const Eigen::Vector3d n = (vertices_[static_cast<std::size_t>(face[1])] - vertices_[static_cast<std::size_t>(face[0])])
                                      .cross(vertices_[static_cast<std::size_t>(face[2])] - vertices_[static_cast<std::size_t>(face[0])]);
        if (0.5 * n.norm() <= kMinFaceArea) {
            throw InvalidInput("face " + std::to_string(f) + " is degenerate");
        }
        face_normals_.push_back(n.normalized());
        for (int k = 0; k < 3; ++k) {
            const std::pair<int, int> edge{face[static_cast<std::size_t>(k)], face[static_cast<std::size_t>((k + 1) % 3)]};
            if (++directed_edges[edge] > 1) {
                throw InvalidInput("face " + std::to_string(f) + " breaks consistent winding or manifoldness");
            }
        }
    }
}

double TriMesh::face_area(int face) const
{
    return 0.5 * (vertex(face, 1) - vertex(face, 0)).cross(vertex(face, 2) - vertex(face, 0)).norm();
}

double TriMesh::total_area() const
{
    double a = 0.0;
    for (std::size_t f = 0; f < faces_.size(); ++f) {
        a += face_area(static_cast<int>(f));
    }
    return a;
}

std::vector<Eigen::Vector3d> TriMesh::vertex_normals() const
{
    std::vector<Eigen::Vector3d> normals(vertices_.size(), Eigen::Vector3d::Zero());
    for (std::size_t f = 0; f < faces_.size(); ++f) {
        const Eigen::Vector3d weighted = face_area(static_cast<int>(f)) * face_normals_[f];
        for (int idx : faces_[f]) {
            normals[static_cast<std::size_t>(idx)] += weighted;
        }
    }
    for (auto& n : normals) {
        const double len = n.norm();
        n = len > 0.0 ? Eigen::Vector3d(n / len) : Eigen::Vector3d::UnitZ();
    }
    return normals;
}

TriMesh TriMesh::translated(const Eigen::Vector3d& offset) const
{
    std::vector<Eigen::Vector3d> verts = vertices_;
    for (auto& v : verts) {
        v += offset;
    }
    return TriMesh(std::move(verts), faces_);
}

namespace {

void append_number(std::string& out, double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

}  // namespace

std::string write_off(const TriMesh& mesh)
{
    std::string out = "OFF\n";
    out += std::to_string(mesh.vertices().size()) + " " + std::to_string(mesh.faces().size()) + " 0\n";
    for (const auto& v : mesh.vertices()) {
        append_number(out, v.x());
        out += ' ';
        append_number(out, v.y());
        out += ' ';
        append_number(out, v.z());
        out += '\n';
    }
    for (const auto& f : mesh.faces()) {
        out += "3 " + std::to_string(f[0]) + " " + std::to_string(f[1]) + " " + std::to_string(f[2]) + "\n";
    }
    return out;
}

namespace {

class Tokenizer {
public:
    explicit Tokenizer(const std::string& text) : text_(text) {}

    std::string_view next()
    {
        for (;;) {
            while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
                ++pos_;
            }
            if (pos_ < text_.size() && text_[pos_] == '#') {
                while (pos_ < text_.size() && text_[pos_] != '\n') {
                    ++pos_;
                }
                continue;
            }
            break;
        }
        if (pos_ >= text_.size()) {
            throw ParseError("OFF: unexpected end of file");
        }
        const std::size_t start = pos_;
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
        return std::string_view(text_).substr(start, pos_ - start);
    }

    template <class T>
    T number()
    {
        const std::string_view tok = next();
        T value{};
        auto res = std::from_chars(tok.data(), tok.data() + tok.size(), value);
        if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
            throw ParseError("OFF: bad number '" + std::string(tok) + "'");
        }
        return value;
    }

private:
    const std::string& text_;
    std::size_t pos_ = 0;
};

}  // namespace

TriMesh read_off(const std::string& text)
{
    Tokenizer tok(text);
    if (tok.next() != "OFF") {
        throw ParseError("OFF: missing header");
    }
    const long nv = tok.number<long>();
    const long nf = tok.number<long>();
    tok.number<long>();
    if (nv < 0 || nf < 0) {
        throw ParseError("OFF: negative counts");
    }
    std::vector<Eigen::Vector3d> verts(static_cast<std::size_t>(nv));
    for (auto& v : verts) {
        v.x() = tok.number<double>();
        v.y() = tok.number<double>();
        v.z() = tok.number<double>();
    }
    std::vector<Face> faces(static_cast<std::size_t>(nf));
    for (auto& f : faces) {
        if (tok.number<int>() != 3) {
            throw ParseError("OFF: only triangular faces are supported");
        }
        f = {tok.number<int>(), tok.number<int>(), tok.number<int>()};
    }
    try {
        return TriMesh(std::move(verts), std::move(faces));
    } catch (const InvalidInput& e) {
        throw ParseError(std::string("OFF: ") + e.what());
    }
}

void save_off(const TriMesh& mesh, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write mesh file " + path.string());
    }
    out << write_off(mesh);
    if (!out) {
        throw IoError("failed writing mesh file " + path.string());
    }
}

TriMesh load_off(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open mesh file " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return read_off(buf.str());
}

TriMesh make_flat_phantom(const Eigen::Vector3d& centre, double size, double resolution)
{
    const int n = std::max(2, static_cast<int>(std::lround(size / resolution)) + 1);
    const double h = size / (n - 1);
    return make_grid_mesh(centre.x() - 0.5 * size, centre.y() - 0.5 * size, h, n, n,
                          [&](double, double) { return centre.z(); });
}

TriMesh make_hemisphere_phantom(const Eigen::Vector3d& centre, double radius, double size, double resolution)
{
    const int n = std::max(2, static_cast<int>(std::lround(size / resolution)) + 1);
    const double h = size / (n - 1);
    return make_grid_mesh(centre.x() - 0.5 * size, centre.y() - 0.5 * size, h, n, n, [&](double x, double y) {
        const double r2 = (x - centre.x()) * (x - centre.x()) + (y - centre.y()) * (y - centre.y());
        return centre.z() + (r2 < radius * radius ? std::sqrt(radius * radius - r2) : 0.0);
    });
}

}  // namespace ius
