#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ius/errors.hpp"
#include "ius/scenario.hpp"

#include <fstream>
#include <sstream>
#include <thread>

using namespace ius;
namespace fs = std::filesystem;

namespace {

std::string flat_config(const std::string& extra = "")
{
    return R"({
  "config_version": 1,
  "seed": 5,
  "arm_model": "reference_arm.json",
  "phantom": { "mesh": "flat_phantom.off", "contact_stiffness": 500 },
  "contact": { "d_start": 0.005, "d_hold": -0.002, "ramp_rate": 0.01, "hold_duration": 1.5 })" +
           extra + "\n}";
}

ScenarioConfig parse(const std::string& text) { return parse_scenario_config(text, IUS_DATA_DIR); }

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path fresh_dir(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("ius_test_scenario_" + name);
    fs::remove_all(dir);
    return dir;
}

ScanLog one_row_log()
{
    ScanRow r;
    r.t = 0.125;
    r.q << 0.1, -0.2, 0.3, 1.25, -1e-7, 0.733, 3.0;
    r.rho = {0.012345678, -0.02, -0.0031, {1e-5, -2.5e-4, 0.04}};
    r.setpoint.rho_d.d = -0.003;
    r.force = 0.24999;
    return ScanLog{{r}};
}

}  // namespace

TEST_CASE("config: defaults and overrides")
{
    const ScenarioConfig c = parse(flat_config(R"(,
  "controller": { "stiffness": [300, 300, 400, 5, 5, 1], "damping_mode": "critical" },
  "raster": { "line_spacing": 0.02, "speed": 0.004 },
  "localization": { "view_angle_deg": 30 })"));
    CHECK(c.seed == 5);
    CHECK(c.arm_model == fs::path(IUS_DATA_DIR) / "reference_arm.json");
    CHECK(c.contact_stiffness == 500.0);
    CHECK(c.contact_damping == 2.0);
    CHECK(c.controller.gains.stiffness(2, 2) == 400.0);
    CHECK(c.controller.damping_mode == DampingMode::critical);
    REQUIRE(c.raster);
    CHECK(c.raster->line_spacing == 0.02);
    CHECK(c.view_angle == doctest::Approx(M_PI / 6).epsilon(1e-15));
    CHECK(c.view_distance == 0.30);
    CHECK(c.dt == 0.001);
}

TEST_CASE("config: unknown keys and bad values are rejected")
{
    CHECK_THROWS_AS(parse(flat_config(R"(, "colour": "red")")), ParseError);
    CHECK_THROWS_AS(parse(flat_config(R"(, "simulation": { "dt": 0.001, "substeps": 2 })")), ParseError);
    CHECK_THROWS_AS(parse(flat_config(R"(, "controller": { "damping_mode": "heavy" })")), ParseError);
    CHECK_THROWS_AS(parse(flat_config(R"(, "simulation": { "dt": 0.01 })")), InvalidInput);
    CHECK_THROWS_AS(parse(R"({"config_version": 2, "seed": 1, "arm_model": "a", "phantom": {"mesh": "m"}})"),
                    ParseError);
    CHECK_THROWS_AS(parse(R"({"config_version": 1, "arm_model": "a", "phantom": {"mesh": "m"}})"), ParseError);
    CHECK_THROWS_AS(parse("{ not json"), ParseError);
}

TEST_CASE("scan log: header and column count")
{
    ScanLog log = one_row_log();
    log.rows.push_back(log.rows[0]);
    log.rows[1].t = 0.135;
    const std::string text = write_scan_log(log);
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    CHECK(line == kScanLogHeader);
    int rows = 0;
    while (std::getline(in, line)) {
        CHECK(std::count(line.begin(), line.end(), ',') == 15);
        ++rows;
    }
    CHECK(rows == 2);
    CHECK(text.find('\r') == std::string::npos);
}

TEST_CASE("scan log: one row round-trips with exact fields")
{
    const ScanLog log = one_row_log();
    const ScanLog back = parse_scan_log(write_scan_log(log));
    REQUIRE(back.rows.size() == 1);
    const ScanRow& a = log.rows[0];
    const ScanRow& b = back.rows[0];
    CHECK(a.t == b.t);
    CHECK(a.q == b.q);
    CHECK(a.rho.vector() == b.rho.vector());
    CHECK(a.setpoint.rho_d.d == b.setpoint.rho_d.d);
    CHECK(a.force == b.force);
    CHECK(write_scan_log(back) == write_scan_log(log));
}

TEST_CASE("scan log: malformed input")
{
    CHECK_THROWS_AS(parse_scan_log("t,q0\n"), ParseError);
    const std::string header = std::string(kScanLogHeader) + "\n";
    CHECK_THROWS_AS(parse_scan_log(header + "1,2,3\n"), ParseError);
    CHECK_THROWS_AS(parse_scan_log(header + "0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0\n"), ParseError);
    CHECK_THROWS_AS(parse_scan_log(header + "1,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0\n0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0\n"),
                    ParseError);
    CHECK_THROWS_AS(export_log(ScanLog{}, fs::temp_directory_path() / "ius_empty.csv"), InvalidInput);
    CHECK_THROWS_AS(export_log(one_row_log(), "/nonexistent-dir/x.csv"), IoError);
}

TEST_CASE("seed streams are independent")
{
    CHECK(derive_seed(1, 1) != derive_seed(1, 2));
    CHECK(derive_seed(1, 2, 0) != derive_seed(1, 2, 1));
    CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
    CHECK(derive_seed(1, 2, 3) != derive_seed(2, 2, 3));
}

TEST_CASE("synthetic markers: layout, ordering and visibility")
{
    const ScenePlane ground{{0.55, 0.0, 0.0}, Eigen::Vector3d::UnitZ(), Eigen::Vector3d::UnitX()};
    MarkerLayout layout;
    layout.corner_noise = 0.0;
    const Pose camera(Eigen::Quaterniond(Eigen::AngleAxisd(M_PI, Eigen::Vector3d::UnitX())),
                      Eigen::Vector3d(0.55, 0.0, 0.45));
    const auto markers = synthetic_markers(ground, layout, camera, CameraIntrinsics{}, 3);
    REQUIRE(markers.size() == 4);
    const Eigen::Vector2d expected[4] = {{-0.13, -0.13}, {0.13, -0.13}, {0.13, 0.13}, {-0.13, 0.13}};
    for (int i = 0; i < 4; ++i) {
        CHECK(markers[i].marker_id == i);
        const Eigen::Vector3d c = camera * markers[i].centre();
        CHECK((c - ground.point(expected[i], 0.0)).norm() < 1e-12);
        for (const auto& corner : markers[i].corners) {
            CHECK(std::abs((camera * corner).z()) < 1e-12);
        }
    }
    const ScenePlane fit = fit_plane(markers, camera, PlaneFitPoints::all_corners);
    CHECK(std::acos(std::min(1.0, fit.normal.dot(ground.normal))) < 1e-9);
    CHECK((fit.x_axis - ground.x_axis).norm() < 1e-12);

    layout.half_extent = {0.5, 0.5};
    CHECK_THROWS_AS(synthetic_markers(ground, layout, camera, CameraIntrinsics{}, 3), InvalidInput);
}

TEST_CASE("synthetic markers: noise is seeded")
{
    const ScenePlane ground{{0.55, 0.0, 0.0}, Eigen::Vector3d::UnitZ(), Eigen::Vector3d::UnitX()};
    const Pose camera(Eigen::Quaterniond(Eigen::AngleAxisd(M_PI, Eigen::Vector3d::UnitX())),
                      Eigen::Vector3d(0.55, 0.0, 0.45));
    const auto a = synthetic_markers(ground, MarkerLayout{}, camera, CameraIntrinsics{}, 9);
    const auto b = synthetic_markers(ground, MarkerLayout{}, camera, CameraIntrinsics{}, 9);
    const auto c = synthetic_markers(ground, MarkerLayout{}, camera, CameraIntrinsics{}, 10);
    CHECK(a[2].corners[1] == b[2].corners[1]);
    CHECK(a[2].corners[1] != c[2].corners[1]);
}

TEST_CASE("localize stage with noiseless markers recovers the ground plane")
{
    ScenarioConfig c = parse(flat_config());
    c.markers.corner_noise = 0.0;
    const fs::path out = fresh_dir("localize");
    ScenarioRunner runner(c, out);
    const ScenarioReport report = runner.run(Command::localize);
    REQUIRE(report.ok());
    REQUIRE(report.localize);
    CHECK(report.localize->normal_error < 1e-9);
    CHECK(report.localize->centre_error < 1e-9);
    CHECK(report.localize->alignment_ik.converged);
    const Eigen::Vector3d offset = report.localize->alignment.translation - report.localize->plane.centre;
    CHECK(offset.norm() == doctest::Approx(0.30).epsilon(1e-12));
    CHECK(fs::exists(out / "markers.json"));
    CHECK(fs::exists(out / "plane.json"));
    CHECK(fs::exists(out / "report.txt"));
    CHECK(read_marker_observations(slurp(out / "markers.json")).size() == 4);
}

TEST_CASE("scan stage on the flat phantom: artifacts, checks and determinism")
{
    const ScenarioConfig c = parse(flat_config());
    const fs::path a = fresh_dir("scan_a");
    const fs::path b = fresh_dir("scan_b");
    const ScenarioReport ra = ScenarioRunner(c, a).run(Command::scan);
    const ScenarioReport rb = ScenarioRunner(c, b).run(Command::scan);
    REQUIRE(ra.ok());
    REQUIRE(ra.scan);
    const double oracle = steady_state_force(500.0, 500.0, -0.002);
    CHECK(ra.scan->metrics.steady_force == doctest::Approx(oracle).epsilon(0.02));
    CHECK(ra.scan->metrics.approach_max_force < 0.01);
    CHECK(slurp(a / "scan_log.csv") == slurp(b / "scan_log.csv"));
    CHECK(slurp(a / "report.txt") == slurp(b / "report.txt"));

    const std::string report = slurp(a / "report.txt");
    CHECK(report.find("PASS steady-state force within 2% of oracle") != std::string::npos);
    CHECK(report.find("FAIL") == std::string::npos);

    const ScanLog log = load_scan_log(a / "scan_log.csv");
    CHECK(log.rows.front().t == 0.0);
    CHECK(log.rows.back().t == doctest::Approx(c.contact.duration()).epsilon(1e-9));
    const std::string from_log = report_from_log(log, c, true);
    CHECK(from_log.find("PASS steady-state force") != std::string::npos);
}

TEST_CASE("deadline")
{
    CHECK_NOTHROW(Deadline().check());
    CHECK_NOTHROW(Deadline("x", 0.0).check());
    const Deadline d("slow", 1e-6);
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
    CHECK_THROWS_AS(d.check(), StageTimeout);
}

TEST_CASE("a stage over its time budget fails and keeps its partial log")
{
    ScenarioConfig c = parse(flat_config());
    c.contact.hold_duration = 60.0;
    const fs::path out = fresh_dir("timeout");
    const ScenarioReport report = ScenarioRunner(c, out, 0.2).run(Command::scan);
    CHECK_FALSE(report.ok());
    REQUIRE(report.stages.size() == 1);
    CHECK(report.stages[0].message.find("time budget") != std::string::npos);
    CHECK(fs::exists(out / "scan_log.csv"));
    const std::string text = slurp(out / "report.txt");
    CHECK(text.find("FAILED") != std::string::npos);
    CHECK(text.find("partial log kept") != std::string::npos);
}
