#pragma once

#include "ius/controller.hpp"
#include "ius/inverse_kinematics.hpp"
#include "ius/localization.hpp"
#include "ius/reconstruction.hpp"
#include "ius/simulation.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ius {

struct MarkerLayout {
    Eigen::Vector2d half_extent{0.13, 0.13};  // marker centres at (+-x, +-y) around the ground centre, m
    double size = 0.04;                        // marker side, m
    double corner_noise = 0.001;               // per-coordinate sigma, m
};

struct RasterSettings {
    ChartRect domain{{-0.02, -0.02}, {0.02, 0.02}};
    double line_spacing = 0.01;
    double speed = 0.005;
};

// Scenario file, JSON. Relative paths are resolved against the directory of
// the file. See configs/ for annotated examples.
struct ScenarioConfig {
    std::filesystem::path source_dir;
    std::uint64_t seed = 1;
    std::filesystem::path arm_model;
    Vector7d nominal_configuration = (Vector7d() << 0.0, 0.784, 0.0, 1.625, 0.0, 0.733, 0.0).finished();

    std::filesystem::path phantom_mesh;
    Eigen::Vector3d ground_centre{0.55, 0.0, 0.0};
    double contact_stiffness = 100.0;
    double contact_damping = 2.0;
    std::string phantom_label = "water:glycerine:gelatine 45:45:10";

    MarkerLayout markers;
    PlaneFitPoints plane_fit_points = PlaneFitPoints::marker_centres;
    double observation_height = 0.45;
    double view_angle = kDefaultViewAngle;
    double view_distance = kDefaultViewDistance;
    double view_azimuth = 0.0;

    int views = 8;
    CameraIntrinsics camera;
    FusionSettings fusion;

    ControllerSettings controller;
    ContactProfile contact;
    Eigen::Vector2d contact_point = Eigen::Vector2d::Zero();
    std::optional<RasterSettings> raster;

    double dt = 0.001;
    int log_every = 10;

    ScenePlane ground_plane() const { return {ground_centre, Eigen::Vector3d::UnitZ(), Eigen::Vector3d::UnitX()}; }
};

ScenarioConfig parse_scenario_config(const std::string& text, const std::filesystem::path& source_dir);
ScenarioConfig load_scenario_config(const std::filesystem::path& path);

// Wall-clock budget for one stage; a zero budget never expires.
class Deadline {
public:
    Deadline() = default;
    Deadline(std::string stage, double seconds);
    void check() const;

private:
    std::string stage_;
    std::optional<std::chrono::steady_clock::time_point> end_;
};

// Independent RNG stream for (seed, stream, index).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0);

// Four square markers on `ground` at (+-hx, +-hy), ids 0..3 counter-clockwise
// from (-hx, -hy), corners expressed in the camera frame with seeded Gaussian
// noise. Throws InvalidInput if a corner falls outside the image.
std::vector<MarkerObservation> synthetic_markers(const ScenePlane& ground, const MarkerLayout& layout,
                                                 const Pose& camera_pose, const CameraIntrinsics& camera,
                                                 std::uint64_t seed);

struct ScanRow {
    double t = 0.0;
    Vector7d q = Vector7d::Zero();
    SurfaceCoords rho;
    Setpoint setpoint;
    Vector7d tau = Vector7d::Zero();
    double force = 0.0;  // contact force magnitude, N
};

struct ScanLog {
    std::vector<ScanRow> rows;
};

inline constexpr const char* kScanLogHeader = "t,q0,q1,q2,q3,q4,q5,q6,s1,s2,d,eps1,eps2,eps3,d_d,force_n";

// CSV with kScanLogHeader, "%.9g" fields, LF line endings.
std::string write_scan_log(const ScanLog& log);
// Reads back the exported columns; setpoints other than d_d and torques are zero.
ScanLog parse_scan_log(const std::string& text);
void export_log(const ScanLog& log, const std::filesystem::path& path);
ScanLog load_scan_log(const std::filesystem::path& path);

struct ScanPlan {
    ContactProfile contact;
    Eigen::Vector2d contact_point = Eigen::Vector2d::Zero();
    std::optional<RasterPath> raster;  // starts when the contact hold ends
    int log_every = 10;

    double duration() const { return contact.duration() + (raster ? raster->duration() : 0.0); }
    Setpoint setpoint(double t) const;
};

// Measurements taken every simulation step.
struct ScanMetrics {
    double approach_max_force = 0.0;     // max |F| while d > 0, N
    double ramp_max_drop = 0.0;          // largest fall below the running maximum during the in-contact ramp, N
    double steady_force = 0.0;           // mean force over the last part of the hold, N
    long raster_samples = 0;
    long raster_in_band = 0;             // |d - d_hold| < 1 mm and |eps| < 0.05
    double raster_max_depth_error = 0.0;
    double raster_max_eps = 0.0;
};

struct ScanResult {
    ScanLog log;
    ScanMetrics metrics;
    Vector7d start_configuration = Vector7d::Zero();
    std::string failure;  // empty when the run completed
};

// Places the probe at (start point, d_start, eps = 0) by chart IK from the
// nominal configuration and steps through the plan. Errors during stepping end
// the run early and are reported in `failure`.
ScanResult run_scan(const Simulator& sim, const ScanPlan& plan, const Vector7d& nominal,
                    const Deadline& deadline = {});

// Scenario stages; each writes its artifacts to the output directory.
struct LocalizeOutcome {
    Vector7d observation_q = Vector7d::Zero();
    Pose camera_pose;
    std::vector<MarkerObservation> markers;
    ScenePlane plane;
    double normal_error = 0.0;  // rad
    double centre_error = 0.0;  // m
    Pose alignment;
    IkResult alignment_ik;
};

struct ReconstructOutcome {
    std::vector<DepthImage> views;
    HeightField field;
    TriMesh mesh;
    MeshError error;
    double worst_view_residual = 0.0;
};

enum class Command { localize, reconstruct, scan, pipeline };

struct StageStatus {
    std::string name;
    bool ok = true;
    std::string message;
};

struct ScenarioReport {
    Command command = Command::pipeline;
    std::uint64_t seed = 0;
    std::vector<StageStatus> stages;
    std::optional<LocalizeOutcome> localize;
    std::optional<ReconstructOutcome> reconstruct;
    std::optional<ScanResult> scan;
    bool scan_on_ground_truth = true;
    std::vector<std::string> files;  // written artifacts, relative to the output directory

    bool ok() const;
};

class ScenarioRunner {
public:
    ScenarioRunner(ScenarioConfig config, std::filesystem::path out_dir, double stage_timeout = 0.0);

    const ScenarioConfig& config() const { return config_; }
    const ArmModel& arm() const { return arm_; }
    const TriMesh& truth_mesh() const { return truth_; }

    ScenarioReport run(Command command);

    LocalizeOutcome localize(ScenarioReport& report);
    ReconstructOutcome reconstruct(const ScenePlane& plane, const Vector7d& start_q, ScenarioReport& report);
    ScanResult scan(std::shared_ptr<const SurfaceChart> control_chart, ScenarioReport& report);

    ScanPlan scan_plan() const;
    Simulator make_simulator(std::shared_ptr<const SurfaceChart> control_chart) const;

private:
    std::filesystem::path write_artifact(const std::string& name, const std::string& content, ScenarioReport& report);

    ScenarioConfig config_;
    std::filesystem::path out_;
    double stage_timeout_;
    ArmModel arm_;
    TriMesh truth_;
    std::shared_ptr<const SurfaceChart> truth_chart_;
};

// Plain-text summary with one PASS/FAIL line per applicable check. Contains
// no timings, so equal inputs give equal bytes.
std::string format_report(const ScenarioReport& report, const ScenarioConfig& config);

// Re-evaluates the scan checks from an exported log (the `report` command).
std::string report_from_log(const ScanLog& log, const ScenarioConfig& config, bool ground_truth);

}  // namespace ius
