#include "ius/localization.hpp"

#include "ius/errors.hpp"
#include "ius/json_util.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <fstream>
#include <sstream>

namespace ius {

ScenePlane fit_plane(const std::vector<MarkerObservation>& markers, const Pose& camera_pose, PlaneFitPoints points)
{
    if (markers.size() < 3) {
        throw DegenerateConfiguration("plane fit needs at least three markers");
    }
    std::vector<Eigen::Vector3d> centres;
    std::vector<Eigen::Vector3d> samples;
    for (const auto& m : markers) {
        for (const auto& c : m.corners) {
            if (!c.allFinite()) {
                throw InvalidInput("marker " + std::to_string(m.marker_id) + " has non-finite corners");
            }
        }
        centres.push_back(camera_pose * m.centre());
        if (points == PlaneFitPoints::all_corners) {
            for (const auto& c : m.corners) {
                samples.push_back(camera_pose * c);
            }
        } else {
            samples.push_back(centres.back());
        }
    }

    ScenePlane plane;
    plane.centre = Eigen::Vector3d::Zero();
    for (const auto& c : centres) {
        plane.centre += c;
    }
    plane.centre /= static_cast<double>(centres.size());

    // Collinearity is judged on the marker centres whatever the fit points.
    Eigen::MatrixXd centred(static_cast<long>(centres.size()), 3);
    for (std::size_t i = 0; i < centres.size(); ++i) {
        centred.row(static_cast<long>(i)) = (centres[i] - plane.centre).transpose();
    }
    const Eigen::Vector3d sv = Eigen::JacobiSVD<Eigen::MatrixXd>(centred).singularValues();
    if (!(sv(1) > 1e-9 * std::max(sv(0), 1e-300)) || !(sv(0) > 1e-12)) {
        throw DegenerateConfiguration("marker centres are collinear or coincident");
    }

    Eigen::MatrixXd fit(static_cast<long>(samples.size()), 3);
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const auto& s : samples) {
        mean += s;
    }
    mean /= static_cast<double>(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        fit.row(static_cast<long>(i)) = (samples[i] - mean).transpose();
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(fit, Eigen::ComputeFullV);
    Eigen::Vector3d n = svd.matrixV().col(2).normalized();
    if (n.dot(camera_pose.translation - plane.centre) < 0.0) {
        n = -n;
    }
    plane.normal = n;

    const Eigen::Vector3d first = centres[1] - centres[0];
    plane.x_axis = (first - first.dot(n) * n).normalized();
    return plane;
}

Pose alignment_pose(const ScenePlane& plane, double angle, double distance, double azimuth)
{
    if (!(angle >= 0.0 && angle < M_PI / 2)) {
        throw InvalidInput("alignment angle must lie in [0, pi/2)");
    }
    if (!(distance > 0.0)) {
        throw InvalidInput("alignment distance must be positive");
    }
    const Eigen::Vector3d n = plane.normal.normalized();
    const Eigen::Vector3d tangent = std::cos(azimuth) * plane.e1() + std::sin(azimuth) * plane.e2();
    const Eigen::Vector3d offset = std::cos(angle) * n + std::sin(angle) * tangent;
    const Eigen::Vector3d position = plane.centre + distance * offset;

    Eigen::Matrix3d r;
    const Eigen::Vector3d z = -offset;
    const Eigen::Vector3d x = n.cross(tangent);
    r << x, z.cross(x), z;
    return Pose(r, position);
}

std::vector<Pose> orbit_trajectory(const ScenePlane& plane, int n_views, double angle, double distance)
{
    if (n_views < 2) {
        throw InvalidInput("an orbit needs at least two views");
    }
    std::vector<Pose> poses;
    poses.reserve(static_cast<std::size_t>(n_views));
    for (int k = 0; k < n_views; ++k) {
        poses.push_back(alignment_pose(plane, angle, distance, 2.0 * M_PI * k / n_views));
    }
    return poses;
}

// ---------------------------------------------------------------------------

std::string write_marker_observations(const std::vector<MarkerObservation>& markers)
{
    using json_util::json;
    json list = json::array();
    for (const auto& m : markers) {
        json corners = json::array();
        for (const auto& c : m.corners) {
            corners.push_back(json_util::to_json(c));
        }
        list.push_back({{"id", m.marker_id}, {"corners", corners}, {"confidence", m.confidence}});
    }
    json doc{{"format_version", 1}, {"frame", "camera"}, {"markers", list}};
    return doc.dump(2) + "\n";
}

std::vector<MarkerObservation> read_marker_observations(const std::string& text)
{
    using namespace json_util;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("markers: ") + e.what());
    }
    require_keys(doc, {"format_version", "frame", "markers"}, "markers");
    if (field(doc, "format_version", "markers") != 1) {
        throw ParseError("markers.format_version: only version 1 is supported");
    }
    if (doc.contains("frame") && doc.at("frame") != "camera") {
        throw ParseError("markers.frame: corners must be given in the camera frame");
    }
    const json& list = field(doc, "markers", "markers");
    if (!list.is_array()) {
        throw ParseError("markers.markers: expected an array");
    }
    std::vector<MarkerObservation> out;
    for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string ctx = "markers[" + std::to_string(i) + "]";
        const json& m = list[i];
        require_keys(m, {"id", "corners", "confidence"}, ctx);
        MarkerObservation obs;
        obs.marker_id = field(m, "id", ctx).get<int>();
        const json& corners = field(m, "corners", ctx);
        if (!corners.is_array() || corners.size() != 4) {
            throw ParseError(ctx + ".corners: expected four corners");
        }
        for (std::size_t k = 0; k < 4; ++k) {
            obs.corners[k] = vec3(corners[k], ctx + ".corners");
        }
        obs.confidence = number_or(m, "confidence", 1.0, ctx);
        if (obs.confidence < 0.0 || obs.confidence > 1.0) {
            throw ParseError(ctx + ".confidence: must lie in [0, 1]");
        }
        out.push_back(obs);
    }
    return out;
}

void save_marker_observations(const std::vector<MarkerObservation>& markers, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write marker file " + path.string());
    }
    out << write_marker_observations(markers);
}

std::vector<MarkerObservation> load_marker_observations(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open marker file " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return read_marker_observations(buf.str());
}

}  // namespace ius
