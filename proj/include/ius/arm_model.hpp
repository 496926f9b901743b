#pragma once

#include "ius/pose.hpp"

#include <Eigen/Core>

#include <array>
#include <filesystem>
#include <optional>
#include <string>

namespace ius {

inline constexpr std::size_t kNumJoints = 7;

// Revolute joint: a fixed transform from the previous joint frame (or the
// base) followed by a rotation of q about `axis`, expressed in the joint frame.
struct Joint {
    std::string name;
    Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
    Pose parent_transform;
    double lower_limit = -M_PI;
    double upper_limit = M_PI;
    double velocity_limit = 2.0;
};

// Rigid body attached to the frame after the joint rotation. Inertia is taken
// about the centre of mass, in link frame axes.
struct LinkInertia {
    double mass = 1.0;
    Eigen::Vector3d com = Eigen::Vector3d::Zero();
    Eigen::Matrix3d inertia = Eigen::Matrix3d::Identity();
};

enum class Frame { flange, probe, camera };

struct JointState {
    Vector7d q = Vector7d::Zero();
    Vector7d qdot = Vector7d::Zero();
};

// Kinematic and inertial description of a 7-joint serial arm. Gravity is not
// modelled: the torque interface assumes perfect gravity compensation.
struct ArmModel {
    std::string name;
    std::array<Joint, kNumJoints> joints;
    std::array<LinkInertia, kNumJoints> links;
    Pose probe_offset;   // flange -> probe tip; probe -z points out of the transducer face
    Pose camera_offset;  // flange -> camera optical frame (z forward, x right, y down)
    std::optional<Pose> home_probe_pose;

    // Throws InvalidInput if any invariant of the model is broken.
    void validate() const;

    // Throws JointLimitError naming the first joint outside its position limits.
    void check_limits(const Vector7d& q) const;

    bool within_limits(const Vector7d& q) const;
};

// Built-in representative 7-DoF arm: alternating roll/pitch axes, 0.4 m upper
// arm and forearm, probe 0.15 m beyond the flange. Not a calibrated model of
// any commercial arm.
ArmModel reference_arm();

Pose forward_kinematics(const ArmModel& model, const Vector7d& q, Frame frame);

// Base-frame geometric Jacobian of `frame`: rows 0-2 linear velocity, rows 3-5
// angular velocity.
Matrix67d geometric_jacobian(const ArmModel& model, const Vector7d& q, Frame frame);

// Joint origins and world axes after applying q. Index i is joint i.
struct JointFrames {
    std::array<Pose, kNumJoints> link;  // frame of link i (after joint i rotation)
    std::array<Eigen::Vector3d, kNumJoints> origin;
    std::array<Eigen::Vector3d, kNumJoints> axis;
};

JointFrames joint_frames(const ArmModel& model, const Vector7d& q);

// Arm model file (JSON, "model_version": 1). Unknown fields are rejected.
ArmModel load_arm_model(const std::filesystem::path& path);
ArmModel parse_arm_model(const std::string& text);
std::string serialize_arm_model(const ArmModel& model);
void save_arm_model(const ArmModel& model, const std::filesystem::path& path);

}  // namespace ius
