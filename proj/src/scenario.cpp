#include "ius/scenario.hpp"

#include "ius/errors.hpp"
#include "ius/json_util.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace ius {

namespace fs = std::filesystem;
using json_util::json;

// ---------------------------------------------------------------------------
// Configuration

namespace {

Vector6d vec6(const json& v, const std::string& ctx)
{
    if (!v.is_array() || v.size() != 6) {
        throw ParseError(ctx + ": expected 6 numbers");
    }
    Vector6d out;
    for (std::size_t i = 0; i < 6; ++i) {
        if (!v[i].is_number()) {
            throw ParseError(ctx + ": expected 6 numbers");
        }
        out(static_cast<long>(i)) = v[i].get<double>();
    }
    return out;
}

// Either six diagonal entries or a 6 x 6 row-major matrix.
Matrix6d gain_matrix(const json& v, const std::string& ctx)
{
    if (v.is_array() && v.size() == 6 && v[0].is_array()) {
        return json_util::matrix(v, 6, 6, ctx);
    }
    return vec6(v, ctx).asDiagonal();
}

Vector7d vec7(const json& v, const std::string& ctx)
{
    if (!v.is_array() || v.size() != 7) {
        throw ParseError(ctx + ": expected 7 numbers");
    }
    Vector7d out;
    for (std::size_t i = 0; i < 7; ++i) {
        if (!v[i].is_number()) {
            throw ParseError(ctx + ": expected 7 numbers");
        }
        out(static_cast<long>(i)) = v[i].get<double>();
    }
    return out;
}

double deg(double d) { return d * M_PI / 180.0; }

std::string read_text(const fs::path& path, const char* what)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError(std::string("cannot open ") + what + " " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

ScenarioConfig parse_scenario_config(const std::string& text, const fs::path& source_dir)
{
    using namespace json_util;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("scenario: ") + e.what());
    }
    if (!doc.is_object()) {
        throw ParseError("scenario: expected an object");
    }
    require_keys(doc,
                 {"config_version", "seed", "arm_model", "nominal_configuration", "phantom", "markers", "localization",
                  "reconstruction", "controller", "contact", "raster", "simulation"},
                 "scenario");
    if (field(doc, "config_version", "scenario") != 1) {
        throw ParseError("scenario.config_version: only version 1 is supported");
    }
    ScenarioConfig c;
    c.source_dir = source_dir;
    const json& seed = field(doc, "seed", "scenario");
    if (!seed.is_number_unsigned()) {
        throw ParseError("scenario.seed: expected a non-negative integer");
    }
    c.seed = seed.get<std::uint64_t>();
    c.arm_model = source_dir / field(doc, "arm_model", "scenario").get<std::string>();
    if (doc.contains("nominal_configuration")) {
        c.nominal_configuration = vec7(doc["nominal_configuration"], "scenario.nominal_configuration");
    }

    const json& ph = field(doc, "phantom", "scenario");
    require_keys(ph, {"mesh", "ground_centre", "contact_stiffness", "contact_damping", "label"}, "phantom");
    c.phantom_mesh = source_dir / field(ph, "mesh", "phantom").get<std::string>();
    if (ph.contains("ground_centre")) {
        c.ground_centre = vec3(ph["ground_centre"], "phantom.ground_centre");
    }
    c.contact_stiffness = number_or(ph, "contact_stiffness", c.contact_stiffness, "phantom");
    c.contact_damping = number_or(ph, "contact_damping", c.contact_damping, "phantom");
    if (ph.contains("label")) {
        c.phantom_label = ph["label"].get<std::string>();
    }

    if (doc.contains("markers")) {
        const json& m = doc["markers"];
        require_keys(m, {"half_extent", "size", "corner_noise"}, "markers");
        if (m.contains("half_extent")) {
            c.markers.half_extent = vec2(m["half_extent"], "markers.half_extent");
        }
        c.markers.size = number_or(m, "size", c.markers.size, "markers");
        c.markers.corner_noise = number_or(m, "corner_noise", c.markers.corner_noise, "markers");
    }

    if (doc.contains("localization")) {
        const json& l = doc["localization"];
        require_keys(l, {"plane_fit_points", "observation_height", "view_angle_deg", "view_distance", "azimuth_deg"},
                     "localization");
        if (l.contains("plane_fit_points")) {
            const std::string mode = l["plane_fit_points"].get<std::string>();
            if (mode == "marker_centres") {
                c.plane_fit_points = PlaneFitPoints::marker_centres;
            } else if (mode == "all_corners") {
                c.plane_fit_points = PlaneFitPoints::all_corners;
            } else {
                throw ParseError("localization.plane_fit_points: expected marker_centres or all_corners");
            }
        }
        c.observation_height = number_or(l, "observation_height", c.observation_height, "localization");
        c.view_angle = deg(number_or(l, "view_angle_deg", 45.0, "localization"));
        c.view_distance = number_or(l, "view_distance", c.view_distance, "localization");
        c.view_azimuth = deg(number_or(l, "azimuth_deg", 0.0, "localization"));
    }

    if (doc.contains("reconstruction")) {
        const json& r = doc["reconstruction"];
        require_keys(r, {"views", "resolution", "extent", "camera"}, "reconstruction");
        c.views = static_cast<int>(number_or(r, "views", c.views, "reconstruction"));
        c.fusion.resolution = number_or(r, "resolution", c.fusion.resolution, "reconstruction");
        c.fusion.extent = number_or(r, "extent", c.fusion.extent, "reconstruction");
        if (r.contains("camera")) {
            const json& k = r["camera"];
            require_keys(k, {"fx", "fy", "cx", "cy", "width", "height", "depth_noise_sigma"}, "camera");
            c.camera.fx = number_or(k, "fx", c.camera.fx, "camera");
            c.camera.fy = number_or(k, "fy", c.camera.fy, "camera");
            c.camera.cx = number_or(k, "cx", c.camera.cx, "camera");
            c.camera.cy = number_or(k, "cy", c.camera.cy, "camera");
            c.camera.width = static_cast<int>(number_or(k, "width", c.camera.width, "camera"));
            c.camera.height = static_cast<int>(number_or(k, "height", c.camera.height, "camera"));
            c.camera.depth_noise_sigma = number_or(k, "depth_noise_sigma", c.camera.depth_noise_sigma, "camera");
        }
    }

    if (doc.contains("controller")) {
        const json& g = doc["controller"];
        require_keys(g, {"stiffness", "damping", "damping_mode", "damping_ratio", "nullspace_gain"}, "controller");
        if (g.contains("stiffness")) {
            c.controller.gains.stiffness = gain_matrix(g["stiffness"], "controller.stiffness");
        }
        if (g.contains("damping")) {
            c.controller.gains.damping = gain_matrix(g["damping"], "controller.damping");
        }
        if (g.contains("damping_mode")) {
            const std::string mode = g["damping_mode"].get<std::string>();
            if (mode == "constant") {
                c.controller.damping_mode = DampingMode::constant;
            } else if (mode == "critical") {
                c.controller.damping_mode = DampingMode::critical;
            } else {
                throw ParseError("controller.damping_mode: expected constant or critical");
            }
        }
        c.controller.damping_ratio = number_or(g, "damping_ratio", c.controller.damping_ratio, "controller");
        c.controller.nullspace_gain = number_or(g, "nullspace_gain", c.controller.nullspace_gain, "controller");
    }

    if (doc.contains("contact")) {
        const json& p = doc["contact"];
        require_keys(p, {"d_start", "d_hold", "ramp_rate", "hold_duration", "point"}, "contact");
        c.contact.d_start = number_or(p, "d_start", c.contact.d_start, "contact");
        c.contact.d_hold = number_or(p, "d_hold", c.contact.d_hold, "contact");
        c.contact.ramp_rate = number_or(p, "ramp_rate", c.contact.ramp_rate, "contact");
        c.contact.hold_duration = number_or(p, "hold_duration", c.contact.hold_duration, "contact");
        if (p.contains("point")) {
            c.contact_point = vec2(p["point"], "contact.point");
        }
    }

    if (doc.contains("raster") && !doc["raster"].is_null()) {
        const json& r = doc["raster"];
        require_keys(r, {"domain_min", "domain_max", "line_spacing", "speed"}, "raster");
        RasterSettings rs;
        if (r.contains("domain_min")) {
            rs.domain.lo = vec2(r["domain_min"], "raster.domain_min");
        }
        if (r.contains("domain_max")) {
            rs.domain.hi = vec2(r["domain_max"], "raster.domain_max");
        }
        rs.line_spacing = number_or(r, "line_spacing", rs.line_spacing, "raster");
        rs.speed = number_or(r, "speed", rs.speed, "raster");
        c.raster = rs;
    }

    if (doc.contains("simulation")) {
        const json& s = doc["simulation"];
        require_keys(s, {"dt", "log_every"}, "simulation");
        c.dt = number_or(s, "dt", c.dt, "simulation");
        c.log_every = static_cast<int>(number_or(s, "log_every", c.log_every, "simulation"));
    }

    // Semantic checks that do not need the referenced files.
    c.contact.validate();
    c.camera.validate();
    if (c.views < 2) {
        throw InvalidInput("reconstruction.views must be at least 2");
    }
    if (c.log_every < 1) {
        throw InvalidInput("simulation.log_every must be at least 1");
    }
    if (!(c.dt > 0.0 && c.dt <= 0.005)) {
        throw InvalidInput("simulation.dt must lie in (0, 0.005]");
    }
    if (!(c.observation_height > 0.0)) {
        throw InvalidInput("localization.observation_height must be positive");
    }
    return c;
}

ScenarioConfig load_scenario_config(const fs::path& path)
{
    return parse_scenario_config(read_text(path, "scenario file"), path.parent_path());
}

// ---------------------------------------------------------------------------

Deadline::Deadline(std::string stage, double seconds) : stage_(std::move(stage))
{
    if (seconds > 0.0) {
        end_ = std::chrono::steady_clock::now() +
               std::chrono::duration_cast<std::chrono::steady_clock::duration>(std::chrono::duration<double>(seconds));
    }
}

void Deadline::check() const
{
    if (end_ && std::chrono::steady_clock::now() > *end_) {
        throw StageTimeout("stage '" + stage_ + "' exceeded its time budget");
    }
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index)
{
    // splitmix64 finaliser over a combined key
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1) + 0xbf58476d1ce4e5b9ull * index;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::vector<MarkerObservation> synthetic_markers(const ScenePlane& ground, const MarkerLayout& layout,
                                                 const Pose& camera_pose, const CameraIntrinsics& camera,
                                                 std::uint64_t seed)
{
    if (!(layout.size > 0.0) || !(layout.corner_noise >= 0.0)) {
        throw InvalidInput("marker size must be positive and noise non-negative");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    const Pose world_to_cam = camera_pose.inverse();
    const double hx = layout.half_extent.x();
    const double hy = layout.half_extent.y();
    const double h = 0.5 * layout.size;
    const Eigen::Vector2d centres[4] = {{-hx, -hy}, {hx, -hy}, {hx, hy}, {-hx, hy}};
    // Clockwise seen from the normal side: top-left, top-right, bottom-right, bottom-left.
    const Eigen::Vector2d corner_offsets[4] = {{-h, h}, {h, h}, {h, -h}, {-h, -h}};
    std::vector<MarkerObservation> out;
    for (int id = 0; id < 4; ++id) {
        MarkerObservation m;
        m.marker_id = id;
        for (int k = 0; k < 4; ++k) {
            const Eigen::Vector3d world = ground.point(centres[id] + corner_offsets[k], 0.0);
            const Eigen::Vector3d cam = world_to_cam * world;
            const double u = camera.fx * cam.x() / cam.z() + camera.cx;
            const double v = camera.fy * cam.y() / cam.z() + camera.cy;
            if (!(cam.z() > 0.0) || u < 0.0 || v < 0.0 || u > camera.width - 1.0 || v > camera.height - 1.0) {
                throw InvalidInput("marker " + std::to_string(id) + " is not fully visible from the observation pose");
            }
            m.corners[static_cast<std::size_t>(k)] =
                cam + layout.corner_noise * Eigen::Vector3d(noise(rng), noise(rng), noise(rng));
        }
        out.push_back(m);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Scan log

namespace {

void append_number(std::string& out, double v)
{
    char buf[32];
    const int n = std::snprintf(buf, sizeof(buf), "%.9g", v);
    out.append(buf, static_cast<std::size_t>(n));
}

}  // namespace

std::string write_scan_log(const ScanLog& log)
{
    std::string out = kScanLogHeader;
    out += '\n';
    for (const ScanRow& r : log.rows) {
        double fields[16];
        fields[0] = r.t;
        for (int i = 0; i < 7; ++i) {
            fields[1 + i] = r.q(i);
        }
        fields[8] = r.rho.s1;
        fields[9] = r.rho.s2;
        fields[10] = r.rho.d;
        fields[11] = r.rho.eps.x();
        fields[12] = r.rho.eps.y();
        fields[13] = r.rho.eps.z();
        fields[14] = r.setpoint.rho_d.d;
        fields[15] = r.force;
        for (int i = 0; i < 16; ++i) {
            if (i > 0) {
                out += ',';
            }
            append_number(out, fields[i]);
        }
        out += '\n';
    }
    return out;
}

ScanLog parse_scan_log(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kScanLogHeader) {
        throw ParseError("scan log: unexpected header");
    }
    ScanLog log;
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        double f[16];
        const char* p = line.data();
        const char* end = line.data() + line.size();
        for (int i = 0; i < 16; ++i) {
            const auto res = std::from_chars(p, end, f[i]);
            if (res.ec != std::errc() || (i < 15 && (res.ptr == end || *res.ptr != ',')) ||
                (i == 15 && res.ptr != end)) {
                throw ParseError("scan log line " + std::to_string(lineno) + ": expected 16 numeric fields");
            }
            p = res.ptr + 1;
        }
        ScanRow r;
        r.t = f[0];
        for (int i = 0; i < 7; ++i) {
            r.q(i) = f[1 + i];
        }
        r.rho = {f[8], f[9], f[10], {f[11], f[12], f[13]}};
        r.setpoint.rho_d.d = f[14];
        r.force = f[15];
        if (!log.rows.empty() && !(r.t > log.rows.back().t)) {
            throw ParseError("scan log line " + std::to_string(lineno) + ": time must increase");
        }
        log.rows.push_back(r);
    }
    return log;
}

void export_log(const ScanLog& log, const fs::path& path)
{
    if (log.rows.empty()) {
        throw InvalidInput("export_log: empty log");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write scan log " + path.string());
    }
    out << write_scan_log(log);
    if (!out) {
        throw IoError("failed writing scan log " + path.string());
    }
}

ScanLog load_scan_log(const fs::path& path) { return parse_scan_log(read_text(path, "scan log")); }

// ---------------------------------------------------------------------------
// Scan

Setpoint ScanPlan::setpoint(double t) const
{
    const double t_raster = contact.duration();
    if (raster && t >= t_raster) {
        return raster_setpoints(*raster, contact.d_hold, t - t_raster);
    }
    return contact_setpoints(contact, std::max(t, 0.0), contact_point);
}

namespace {

// Streaming evaluation of the contact and raster checks.
class MetricsAccumulator {
public:
    MetricsAccumulator(const ContactProfile& profile, bool has_raster)
        : profile_(profile),
          has_raster_(has_raster),
          window_(std::min(0.5, 0.5 * profile.hold_duration))
    {
    }

    void add(double t, double d, double eps_norm, double force)
    {
        const double ramp_end = profile_.ramp_end();
        const double hold_end = profile_.duration();
        if (t <= hold_end + 1e-12) {
            if (d > 0.0) {
                m_.approach_max_force = std::max(m_.approach_max_force, std::abs(force));
            }
            if (force > 0.0 && t <= ramp_end) {
                running_max_ = std::max(running_max_, force);
                m_.ramp_max_drop = std::max(m_.ramp_max_drop, running_max_ - force);
            }
            if (t >= hold_end - window_ - 1e-12) {
                steady_sum_ += force;
                ++steady_count_;
            }
        } else if (has_raster_) {
            const double err = std::abs(d - profile_.d_hold);
            ++m_.raster_samples;
            if (err < 1e-3 && eps_norm < 0.05) {
                ++m_.raster_in_band;
            }
            m_.raster_max_depth_error = std::max(m_.raster_max_depth_error, err);
            m_.raster_max_eps = std::max(m_.raster_max_eps, eps_norm);
        }
    }

    ScanMetrics result() const
    {
        ScanMetrics m = m_;
        m.steady_force = steady_count_ > 0 ? steady_sum_ / steady_count_ : 0.0;
        return m;
    }

private:
    ContactProfile profile_;
    bool has_raster_;
    double window_;
    ScanMetrics m_;
    double running_max_ = 0.0;
    double steady_sum_ = 0.0;
    long steady_count_ = 0;
};

ScanRow make_row(const Simulator& sim, const SimState& s, const Setpoint& sp)
{
    ScanRow r;
    r.t = s.t;
    r.q = s.joint.q;
    r.rho = s.rho;
    r.setpoint = sp;
    r.tau = sim.forces(s.joint.q, s.joint.qdot, sp).tau_total();
    r.force = s.contact_force;
    return r;
}

}  // namespace

ScanResult run_scan(const Simulator& sim, const ScanPlan& plan, const Vector7d& nominal, const Deadline& deadline)
{
    ScanResult result;
    const Eigen::Vector2d start = plan.contact_point;
    IkOptions opt;
    opt.rest_posture = nominal;
    const IkResult ik = solve_chart_ik(sim.model(), sim.control_chart(),
                                       SurfaceCoords{start.x(), start.y(), plan.contact.d_start, Eigen::Vector3d::Zero()},
                                       nominal, opt);
    if (!ik.converged) {
        result.failure = "start configuration unreachable (IK residual " + std::to_string(ik.residual) + ")";
        return result;
    }
    result.start_configuration = ik.q;

    MetricsAccumulator metrics(plan.contact, plan.raster.has_value());
    const SetpointSource source = [&plan](double t) { return plan.setpoint(t); };
    SimState state = sim.initial_state(ik.q);
    result.log.rows.push_back(make_row(sim, state, plan.setpoint(state.t)));
    const long steps = std::lround(plan.duration() / sim.dt());
    try {
        for (long i = 1; i <= steps; ++i) {
            state = sim.step(state, source);
            metrics.add(state.t, state.rho.d, state.rho.eps.norm(), state.contact_force);
            if (i % plan.log_every == 0 || i == steps) {
                result.log.rows.push_back(make_row(sim, state, plan.setpoint(state.t)));
            }
            if (i % 1000 == 0) {
                deadline.check();
            }
        }
    } catch (const JointLimitError& e) {
        result.failure = "t = " + std::to_string(state.t) + " s: " + e.what();
    } catch (const IntegratorDivergence& e) {
        result.failure = e.what();
    } catch (const StageTimeout& e) {
        result.failure = "t = " + std::to_string(state.t) + " s: " + e.what();
    } catch (const ChartBoundaryError& e) {
        result.failure = "t = " + std::to_string(state.t) + " s: " + e.what();
    }
    result.metrics = metrics.result();
    return result;
}

// ---------------------------------------------------------------------------
// Runner

bool ScenarioReport::ok() const
{
    return std::all_of(stages.begin(), stages.end(), [](const StageStatus& s) { return s.ok; });
}

ScenarioRunner::ScenarioRunner(ScenarioConfig config, fs::path out_dir, double stage_timeout)
    : config_(std::move(config)), out_(std::move(out_dir)), stage_timeout_(stage_timeout)
{
    arm_ = load_arm_model(config_.arm_model);
    truth_ = load_off(config_.phantom_mesh);
    truth_chart_ = std::make_shared<const SurfaceChart>(truth_, config_.ground_plane());
}

fs::path ScenarioRunner::write_artifact(const std::string& name, const std::string& content, ScenarioReport& report)
{
    const fs::path path = out_ / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << content;
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
    report.files.push_back(name);
    return path;
}

namespace {

// Camera IK with the roll about the optical axis left free: depth views and
// marker observations do not depend on it. Tries 45 deg roll steps from each
// start and keeps the first converged solution, else the best one.
IkResult solve_camera_ik(const ArmModel& arm, const Pose& target, const std::vector<Vector7d>& starts,
                         const Vector7d& rest)
{
    IkOptions opt;
    opt.rest_posture = rest;
    IkResult best;
    best.residual = std::numeric_limits<double>::infinity();
    for (const Vector7d& q0 : starts) {
        for (int k : {0, 1, -1, 2, -2, 3, -3, 4}) {
            Pose rolled = target;
            rolled.rotation =
                target.rotation * Eigen::Quaterniond(Eigen::AngleAxisd(k * M_PI / 4, Eigen::Vector3d::UnitZ()));
            const IkResult r = solve_pose_ik(arm, Frame::camera, rolled, q0, opt);
            if (r.converged) {
                return r;
            }
            if (r.residual < best.residual) {
                best = r;
            }
        }
    }
    return best;
}

}  // namespace

LocalizeOutcome ScenarioRunner::localize(ScenarioReport& report)
{
    const Deadline deadline("localize", stage_timeout_);
    LocalizeOutcome o;
    const ScenePlane ground = config_.ground_plane();
    const Vector7d& nominal = config_.nominal_configuration;
    const Pose look_down = alignment_pose(ground, 0.0, config_.observation_height);
    const IkResult obs = solve_camera_ik(arm_, look_down, {nominal}, nominal);
    if (!obs.converged) {
        throw Error("observation pose unreachable (IK residual " + std::to_string(obs.residual) + ")");
    }
    o.observation_q = obs.q;
    o.camera_pose = forward_kinematics(arm_, obs.q, Frame::camera);
    o.markers = synthetic_markers(ground, config_.markers, o.camera_pose, config_.camera, derive_seed(config_.seed, 1));
    write_artifact("markers.json", write_marker_observations(o.markers), report);
    deadline.check();

    o.plane = fit_plane(o.markers, o.camera_pose, config_.plane_fit_points);
    o.normal_error = std::atan2(o.plane.normal.cross(ground.normal).norm(), o.plane.normal.dot(ground.normal));
    o.centre_error = (o.plane.centre - ground.centre).norm();
    o.alignment = alignment_pose(o.plane, config_.view_angle, config_.view_distance, config_.view_azimuth);
    o.alignment_ik = solve_camera_ik(arm_, o.alignment, {obs.q, nominal}, obs.q);

    json doc{{"format_version", 1},
             {"centre", json_util::to_json(o.plane.centre)},
             {"normal", json_util::to_json(o.plane.normal)},
             {"x_axis", json_util::to_json(o.plane.x_axis)},
             {"normal_error_rad", o.normal_error},
             {"alignment_pose", json_util::to_json(o.alignment)},
             {"alignment_configuration", std::vector<double>(o.alignment_ik.q.data(), o.alignment_ik.q.data() + 7)},
             {"alignment_ik_residual", o.alignment_ik.residual}};
    write_artifact("plane.json", doc.dump(2) + "\n", report);
    if (!o.alignment_ik.converged) {
        throw Error("alignment pose unreachable (IK residual " + std::to_string(o.alignment_ik.residual) + ")");
    }
    return o;
}

ReconstructOutcome ScenarioRunner::reconstruct(const ScenePlane& plane, const Vector7d& start_q, ScenarioReport& report)
{
    const Deadline deadline("reconstruct", stage_timeout_);
    ReconstructOutcome o;
    const auto poses = orbit_trajectory(plane, config_.views, config_.view_angle, config_.view_distance);
    Vector7d q = start_q;
    for (std::size_t k = 0; k < poses.size(); ++k) {
        const IkResult ik = solve_camera_ik(arm_, poses[k], {q, start_q}, start_q);
        o.worst_view_residual = std::max(o.worst_view_residual, ik.residual);
        if (!ik.converged) {
            throw Error("orbit view " + std::to_string(k) + " unreachable (IK residual " + std::to_string(ik.residual) +
                        ")");
        }
        q = ik.q;
        const Pose camera_pose = forward_kinematics(arm_, q, Frame::camera);
        o.views.push_back(render_depth(truth_chart_->index(), config_.camera, camera_pose,
                                       derive_seed(config_.seed, 2, k)));
        char name[32];
        std::snprintf(name, sizeof(name), "depth_%02zu.pfm", k);
        save_pfm(o.views.back(), out_ / name);
        report.files.push_back(name);
        deadline.check();
    }
    o.field = fuse_views(o.views, plane, config_.fusion);
    write_artifact("heightfield.txt", write_height_field(o.field), report);
    o.mesh = extract_mesh(o.field);
    write_artifact("recon_mesh.off", write_off(o.mesh), report);
    deadline.check();
    o.error = mesh_error(o.mesh, truth_, 10000, derive_seed(config_.seed, 3));
    return o;
}

ScanPlan ScenarioRunner::scan_plan() const
{
    ScanPlan plan;
    plan.contact = config_.contact;
    plan.contact_point = config_.contact_point;
    plan.log_every = config_.log_every;
    if (config_.raster) {
        plan.raster.emplace(config_.raster->domain, config_.raster->line_spacing, config_.raster->speed);
        // Contact is made where the raster begins.
        plan.contact_point = plan.raster->at(0.0).first;
    }
    return plan;
}

Simulator ScenarioRunner::make_simulator(std::shared_ptr<const SurfaceChart> control_chart) const
{
    PhantomModel phantom{truth_, config_.contact_stiffness, config_.contact_damping, config_.phantom_label};
    return Simulator(arm_, std::move(control_chart), truth_chart_, std::move(phantom), config_.controller, config_.dt);
}

ScanResult ScenarioRunner::scan(std::shared_ptr<const SurfaceChart> control_chart, ScenarioReport& report)
{
    const Deadline deadline("scan", stage_timeout_);
    const Simulator sim = make_simulator(std::move(control_chart));
    const ScanResult r = run_scan(sim, scan_plan(), config_.nominal_configuration, deadline);
    if (!r.log.rows.empty()) {
        export_log(r.log, out_ / "scan_log.csv");
        report.files.push_back("scan_log.csv");
    }
    return r;
}

ScenarioReport ScenarioRunner::run(Command command)
{
    fs::create_directories(out_);
    ScenarioReport report;
    report.command = command;
    report.seed = config_.seed;

    const auto stage = [&](const std::string& name, auto&& body) {
        StageStatus status{name, true, ""};
        try {
            body();
        } catch (const std::exception& e) {
            status.ok = false;
            status.message = e.what();
        }
        report.stages.push_back(status);
        return status.ok;
    };

    std::shared_ptr<const SurfaceChart> control = truth_chart_;
    bool ok = true;
    if (command != Command::scan) {
        ok = stage("localize", [&] { report.localize = localize(report); });
    }
    if (ok && (command == Command::reconstruct || command == Command::pipeline)) {
        ok = stage("reconstruct", [&] {
            report.reconstruct = reconstruct(report.localize->plane, report.localize->alignment_ik.q, report);
        });
    }
    if (ok && (command == Command::scan || command == Command::pipeline)) {
        if (command == Command::pipeline) {
            control = std::make_shared<const SurfaceChart>(report.reconstruct->mesh, report.localize->plane);
            report.scan_on_ground_truth = false;
        }
        stage("scan", [&] {
            report.scan = scan(control, report);
            if (!report.scan->failure.empty()) {
                throw Error(report.scan->failure);
            }
        });
    }
    const std::string text = format_report(report, config_);
    std::ofstream(out_ / "report.txt", std::ios::binary) << text;
    return report;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

std::string fmt(const char* format, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), format, v);
    return buf;
}

const char* command_name(Command c)
{
    switch (c) {
    case Command::localize: return "localize";
    case Command::reconstruct: return "reconstruct";
    case Command::scan: return "scan";
    case Command::pipeline: return "pipeline";
    }
    return "?";
}

void scan_checks(std::string& out, const ScanMetrics& m, const ScenarioConfig& config, bool ground_truth,
                 bool complete)
{
    const double k_d = config.controller.gains.stiffness(2, 2);
    const double oracle = steady_state_force(k_d, config.contact_stiffness, config.contact.d_hold);
    const auto line = [&](bool pass, const std::string& text) {
        out += std::string("  ") + (pass ? "PASS " : "FAIL ") + text + "\n";
    };
    out += "  steady-state force: " + fmt("%.6g", m.steady_force) + " N, series-spring oracle " + fmt("%.6g", oracle) +
           " N\n";
    if (ground_truth) {
        const double rel = std::abs(m.steady_force - oracle) / oracle;
        line(complete && rel < 0.02, "steady-state force within 2% of oracle (error " + fmt("%.3f", 100.0 * rel) + "%)");
    } else {
        out += "  (controller runs on the reconstruction: oracle and approach checks are informational)\n";
    }
    const std::string approach =
        "no force during approach (max " + fmt("%.3g", m.approach_max_force) + " N while d > 0, limit 0.01 N)";
    if (ground_truth) {
        line(m.approach_max_force < 0.01, approach);
    } else {
        out += "  (informational) " + approach + "\n";
    }
    const double ripple = m.steady_force > 0.0 ? m.ramp_max_drop / m.steady_force : 0.0;
    line(complete && ripple <= 0.05,
         "force non-decreasing during in-contact ramp (largest drop " + fmt("%.2f", 100.0 * ripple) + "% of hold force)");
    if (config.raster) {
        const double frac =
            m.raster_samples > 0 ? static_cast<double>(m.raster_in_band) / static_cast<double>(m.raster_samples) : 0.0;
        line(complete && frac >= 0.95, "raster hold band (|d - d_hold| < 1 mm and |eps| < 0.05) for " +
                                           fmt("%.2f", 100.0 * frac) + "% of " + std::to_string(m.raster_samples) +
                                           " samples (limit 95%)");
        out += "  raster worst |d - d_hold| " + fmt("%.4g", m.raster_max_depth_error) + " m, worst |eps| " +
               fmt("%.4g", m.raster_max_eps) + "\n";
    }
}

}  // namespace

std::string format_report(const ScenarioReport& report, const ScenarioConfig& config)
{
    std::string out = "ultrasound scanning scenario report\n";
    out += std::string("command: ") + command_name(report.command) + "\n";
    out += "seed: " + std::to_string(report.seed) + "\n";
    out += "phantom: " + config.phantom_mesh.filename().string() + " (" + config.phantom_label +
           "), k_t " + fmt("%.6g", config.contact_stiffness) + " N/m\n\n";

    for (const StageStatus& s : report.stages) {
        out += "[" + s.name + "] " + (s.ok ? "ok" : "FAILED: " + s.message) + "\n";
        if (s.name == "localize" && report.localize) {
            const LocalizeOutcome& l = *report.localize;
            out += "  plane centre " + fmt("%.6f", l.plane.centre.x()) + " " + fmt("%.6f", l.plane.centre.y()) + " " +
                   fmt("%.6f", l.plane.centre.z()) + " m, normal error " + fmt("%.4g", l.normal_error * 180.0 / M_PI) +
                   " deg, centre error " + fmt("%.4g", l.centre_error) + " m\n";
            const Eigen::Vector3d axis = l.alignment.rotation_matrix().col(2);
            const double angle = std::atan2(axis.cross(-l.plane.normal).norm(), axis.dot(-l.plane.normal));
            out += "  alignment pose: distance " + fmt("%.6f", (l.alignment.translation - l.plane.centre).norm()) +
                   " m, view angle " + fmt("%.6f", angle * 180.0 / M_PI) + " deg, IK residual " +
                   fmt("%.2g", l.alignment_ik.residual) + "\n";
        }
        if (s.name == "reconstruct" && report.reconstruct) {
            const ReconstructOutcome& r = *report.reconstruct;
            out += "  views " + std::to_string(r.views.size()) + ", covered nodes " +
                   std::to_string(r.field.covered_count()) + ", mesh faces " + std::to_string(r.mesh.num_faces()) +
                   "\n";
            out += "  mesh error vs ground truth: rms " + fmt("%.4g", r.error.rms) + " m, hausdorff " +
                   fmt("%.4g", r.error.hausdorff) + " m (grid " + fmt("%.4g", r.field.resolution) + " m)\n";
            out += std::string("  ") + (r.error.rms < r.field.resolution ? "PASS" : "FAIL") +
                   " reconstruction rms below grid resolution\n";
        }
        if (s.name == "scan" && report.scan) {
            out += std::string("  control chart: ") + (report.scan_on_ground_truth ? "ground truth" : "reconstruction") +
                   ", logged rows " + std::to_string(report.scan->log.rows.size()) + "\n";
            if (!report.scan->failure.empty()) {
                out += "  partial log kept\n";
            }
            scan_checks(out, report.scan->metrics, config, report.scan_on_ground_truth, report.scan->failure.empty());
        }
    }
    out += "\nartifacts:\n";
    std::vector<std::string> files = report.files;
    files.push_back("report.txt");
    for (const std::string& f : files) {
        out += "  " + f + "\n";
    }
    out += std::string("\nstatus: ") + (report.ok() ? "ok" : "FAILED") + "\n";
    return out;
}

std::string report_from_log(const ScanLog& log, const ScenarioConfig& config, bool ground_truth)
{
    if (log.rows.empty()) {
        throw InvalidInput("report: empty scan log");
    }
    MetricsAccumulator acc(config.contact, config.raster.has_value());
    for (std::size_t i = 1; i < log.rows.size(); ++i) {
        const ScanRow& r = log.rows[i];
        acc.add(r.t, r.rho.d, r.rho.eps.norm(), r.force);
    }
    ScanPlan plan;
    plan.contact = config.contact;
    if (config.raster) {
        plan.raster.emplace(config.raster->domain, config.raster->line_spacing, config.raster->speed);
    }
    const bool complete = log.rows.back().t >= plan.duration() - 1e-6;
    std::string out = "scan log report (logged samples only)\n";
    out += "rows: " + std::to_string(log.rows.size()) + ", last t " + fmt("%.6g", log.rows.back().t) + " s" +
           (complete ? "" : " (incomplete run)") + "\n";
    scan_checks(out, acc.result(), config, ground_truth, complete);
    return out;
}

}  // namespace ius
