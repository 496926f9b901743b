#include "ius/arm_model.hpp"

#include "ius/errors.hpp"
#include "ius/json_util.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <fstream>
#include <sstream>

namespace ius {

namespace {

Eigen::Matrix3d rod_inertia(double mass, double length, double radius)
{
    const double transverse = mass * (3.0 * radius * radius + length * length) / 12.0;
    return Eigen::Vector3d(transverse, transverse, 0.5 * mass * radius * radius).asDiagonal();
}

void check_rotation(const Pose& p, const std::string& what)
{
    const Eigen::Matrix3d r = p.rotation_matrix();
    const double err = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    if (err >= 1e-12 || std::abs(p.rotation.norm() - 1.0) >= 1e-12) {
        throw InvalidInput(what + ": rotation is not orthonormal");
    }
}

}  // namespace

void ArmModel::validate() const
{
    for (std::size_t i = 0; i < kNumJoints; ++i) {
        const Joint& j = joints[i];
        const std::string tag = "joint " + std::to_string(i);
        if (std::abs(j.axis.norm() - 1.0) > 1e-12) {
            throw InvalidInput(tag + ": axis is not a unit vector");
        }
        check_rotation(j.parent_transform, tag + " parent transform");
        if (!(j.lower_limit < j.upper_limit)) {
            throw InvalidInput(tag + ": lower limit must be below upper limit");
        }
        if (!(j.velocity_limit > 0.0)) {
            throw InvalidInput(tag + ": velocity limit must be positive");
        }
        const LinkInertia& l = links[i];
        if (!(l.mass > 0.0)) {
            throw InvalidInput("link " + std::to_string(i) + ": mass must be positive");
        }
        if ((l.inertia - l.inertia.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
            throw InvalidInput("link " + std::to_string(i) + ": inertia tensor is not symmetric");
        }
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(l.inertia);
        if (!(eig.eigenvalues().minCoeff() > 0.0)) {
            throw InvalidInput("link " + std::to_string(i) + ": inertia tensor is not positive-definite");
        }
    }
    check_rotation(probe_offset, "probe offset");
    check_rotation(camera_offset, "camera offset");
}

void ArmModel::check_limits(const Vector7d& q) const
{
    for (std::size_t i = 0; i < kNumJoints; ++i) {
        const double v = q(static_cast<long>(i));
        if (!std::isfinite(v) || v < joints[i].lower_limit || v > joints[i].upper_limit) {
            std::ostringstream os;
            os << "joint " << i << " position " << v << " outside limits [" << joints[i].lower_limit << ", "
               << joints[i].upper_limit << "]";
            throw JointLimitError(i, v, os.str());
        }
    }
}

bool ArmModel::within_limits(const Vector7d& q) const
{
    for (std::size_t i = 0; i < kNumJoints; ++i) {
        const double v = q(static_cast<long>(i));
        if (!(v >= joints[i].lower_limit && v <= joints[i].upper_limit)) {
            return false;
        }
    }
    return true;
}

ArmModel reference_arm()
{
    constexpr double deg = M_PI / 180.0;
    const std::array<double, kNumJoints> offsets{0.15, 0.19, 0.20, 0.20, 0.20, 0.20, 0.126};
    const std::array<double, kNumJoints> limits{180, 120, 170, 120, 170, 120, 175};
    const std::array<double, kNumJoints> vlimits{1.7, 1.7, 1.7, 2.2, 2.4, 3.1, 3.1};
    const std::array<double, kNumJoints> masses{4.0, 4.0, 3.0, 2.7, 1.7, 1.8, 0.9};

    ArmModel m;
    m.name = "reference-7dof";
    for (std::size_t i = 0; i < kNumJoints; ++i) {
        Joint& j = m.joints[i];
        j.name = "joint_" + std::to_string(i + 1);
        j.axis = (i % 2 == 0) ? Eigen::Vector3d::UnitZ() : Eigen::Vector3d::UnitY();
        j.parent_transform = Pose(Eigen::Quaterniond::Identity(), Eigen::Vector3d(0.0, 0.0, offsets[i]));
        j.lower_limit = -limits[i] * deg;
        j.upper_limit = limits[i] * deg;
        j.velocity_limit = vlimits[i];

        // Each link spans to the next joint; the last one carries flange, probe and camera.
        const double length = (i + 1 < kNumJoints) ? offsets[i + 1] : 0.15;
        LinkInertia& l = m.links[i];
        l.mass = masses[i];
        l.com = Eigen::Vector3d(0.0, 0.0, 0.5 * length);
        l.inertia = rod_inertia(l.mass, length, 0.06);
    }
    m.links[6].com = Eigen::Vector3d(0.02, 0.0, 0.07);
    m.links[6].inertia = rod_inertia(m.links[6].mass, 0.15, 0.04);

    // Probe frame flipped about y so its -z axis continues the flange +z axis.
    m.probe_offset = Pose(Eigen::Quaterniond(0.0, 0.0, 1.0, 0.0), Eigen::Vector3d(0.0, 0.0, 0.15));
    // Look-ahead camera, optical axis tilted 45 deg from the flange axis.
    m.camera_offset = Pose(Eigen::Quaterniond(Eigen::AngleAxisd(-M_PI / 4, Eigen::Vector3d::UnitY())),
                           Eigen::Vector3d(0.07, 0.0, 0.03));
    m.home_probe_pose = forward_kinematics(m, Vector7d::Zero(), Frame::probe);
    return m;
}

JointFrames joint_frames(const ArmModel& model, const Vector7d& q)
{
    JointFrames out;
    Pose current;
    for (std::size_t i = 0; i < kNumJoints; ++i) {
        const Joint& j = model.joints[i];
        current = current * j.parent_transform;
        out.origin[i] = current.translation;
        out.axis[i] = current.rotation * j.axis;
        current = current * Pose(Eigen::Quaterniond(Eigen::AngleAxisd(q(static_cast<long>(i)), j.axis)),
                                 Eigen::Vector3d::Zero());
        out.link[i] = current;
    }
    return out;
}

namespace {

Pose frame_offset(const ArmModel& model, Frame frame)
{
    switch (frame) {
    case Frame::probe:
        return model.probe_offset;
    case Frame::camera:
        return model.camera_offset;
    case Frame::flange:
        break;
    }
    return Pose::identity();
}

}  // namespace

Pose forward_kinematics(const ArmModel& model, const Vector7d& q, Frame frame)
{
    model.check_limits(q);
    return joint_frames(model, q).link[kNumJoints - 1] * frame_offset(model, frame);
}

Matrix67d geometric_jacobian(const ArmModel& model, const Vector7d& q, Frame frame)
{
    model.check_limits(q);
    const JointFrames frames = joint_frames(model, q);
    const Eigen::Vector3d tip = (frames.link[kNumJoints - 1] * frame_offset(model, frame)).translation;
    Matrix67d jac;
    for (std::size_t i = 0; i < kNumJoints; ++i) {
        const auto col = static_cast<long>(i);
        jac.block<3, 1>(0, col) = frames.axis[i].cross(tip - frames.origin[i]);
        jac.block<3, 1>(3, col) = frames.axis[i];
    }
    return jac;
}

// ---------------------------------------------------------------------------
// Model file

namespace {

using json_util::json;

ArmModel from_json(const json& doc)
{
    using namespace json_util;
    require_keys(doc, {"model_version", "name", "description", "joints", "links", "probe_offset", "camera_offset",
                       "home_probe_pose"},
                 "arm_model");
    const json& version = field(doc, "model_version", "arm_model");
    if (!version.is_number_integer() || version.get<int>() != 1) {
        throw ParseError("arm_model.model_version: only version 1 is supported");
    }
    ArmModel m;
    m.name = field(doc, "name", "arm_model").get<std::string>();

    const json& joints = field(doc, "joints", "arm_model");
    const json& links = field(doc, "links", "arm_model");
    if (!joints.is_array() || joints.size() != kNumJoints) {
        throw ParseError("arm_model.joints: exactly 7 joints are required");
    }
    if (!links.is_array() || links.size() != kNumJoints) {
        throw ParseError("arm_model.links: exactly 7 links are required");
    }
    for (std::size_t i = 0; i < kNumJoints; ++i) {
        const std::string ctx = "arm_model.joints[" + std::to_string(i) + "]";
        const json& jj = joints[i];
        require_keys(jj, {"name", "axis", "parent_transform", "position_limits", "velocity_limit"}, ctx);
        Joint& j = m.joints[i];
        j.name = field(jj, "name", ctx).get<std::string>();
        j.axis = vec3(field(jj, "axis", ctx), ctx + ".axis");
        if (std::abs(j.axis.norm() - 1.0) > 1e-9) {
            throw ParseError(ctx + ".axis: not a unit vector");
        }
        j.axis.normalize();
        j.parent_transform = pose(field(jj, "parent_transform", ctx), ctx + ".parent_transform");
        const Eigen::Vector2d lim = vec2(field(jj, "position_limits", ctx), ctx + ".position_limits");
        j.lower_limit = lim(0);
        j.upper_limit = lim(1);
        j.velocity_limit = number(jj, "velocity_limit", ctx);

        const std::string lctx = "arm_model.links[" + std::to_string(i) + "]";
        const json& lj = links[i];
        require_keys(lj, {"mass", "com", "inertia"}, lctx);
        LinkInertia& l = m.links[i];
        l.mass = number(lj, "mass", lctx);
        l.com = vec3(field(lj, "com", lctx), lctx + ".com");
        l.inertia = matrix(field(lj, "inertia", lctx), 3, 3, lctx + ".inertia");
    }
    m.probe_offset = pose(field(doc, "probe_offset", "arm_model"), "arm_model.probe_offset");
    m.camera_offset = pose(field(doc, "camera_offset", "arm_model"), "arm_model.camera_offset");
    if (doc.contains("home_probe_pose")) {
        m.home_probe_pose = pose(doc.at("home_probe_pose"), "arm_model.home_probe_pose");
    }
    try {
        m.validate();
    } catch (const InvalidInput& e) {
        throw ParseError(std::string("arm_model: ") + e.what());
    }
    return m;
}

}  // namespace

ArmModel parse_arm_model(const std::string& text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("arm_model: ") + e.what());
    }
    return from_json(doc);
}

ArmModel load_arm_model(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open arm model file " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_arm_model(buf.str());
}

std::string serialize_arm_model(const ArmModel& model)
{
    using json_util::to_json;
    json doc;
    doc["model_version"] = 1;
    doc["name"] = model.name;
    doc["description"] =
        "Representative 7-DoF arm with alternating roll/pitch joints. Not calibrated against real hardware. "
        "Units: m, rad, rad/s, kg, kg*m^2. Gravity is assumed perfectly compensated.";
    json joints = json::array();
    json links = json::array();
    for (std::size_t i = 0; i < kNumJoints; ++i) {
        const Joint& j = model.joints[i];
        joints.push_back({{"name", j.name},
                          {"axis", to_json(j.axis)},
                          {"parent_transform", to_json(j.parent_transform)},
                          {"position_limits", json::array({j.lower_limit, j.upper_limit})},
                          {"velocity_limit", j.velocity_limit}});
        const LinkInertia& l = model.links[i];
        links.push_back({{"mass", l.mass}, {"com", to_json(l.com)}, {"inertia", to_json(Eigen::MatrixXd(l.inertia))}});
    }
    doc["joints"] = joints;
    doc["links"] = links;
    doc["probe_offset"] = to_json(model.probe_offset);
    doc["camera_offset"] = to_json(model.camera_offset);
    if (model.home_probe_pose) {
        doc["home_probe_pose"] = to_json(*model.home_probe_pose);
    }
    return doc.dump(2) + "\n";
}

void save_arm_model(const ArmModel& model, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write arm model file " + path.string());
    }
    out << serialize_arm_model(model);
}

}  // namespace ius
