#pragma once

#include "ius/pose.hpp"
#include "ius/scene_plane.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace ius {

// One detected fiducial. Corners are 3-D points in the camera optical frame,
// ordered clockwise as seen by the camera: top-left, top-right, bottom-right,
// bottom-left (the ArUco convention).
struct MarkerObservation {
    int marker_id = 0;
    std::array<Eigen::Vector3d, 4> corners;
    double confidence = 1.0;

    Eigen::Vector3d centre() const { return 0.25 * (corners[0] + corners[1] + corners[2] + corners[3]); }
};

enum class PlaneFitPoints {
    marker_centres,  // one point per marker (corner mean)
    all_corners,     // four points per marker
};

// Least-squares plane through the marker points, in world coordinates. The
// centre is the mean of the marker centres, the normal the smallest singular
// vector of the centred points, flipped towards the camera.
// Throws DegenerateConfiguration for fewer than three markers or collinear /
// coincident marker centres.
ScenePlane fit_plane(const std::vector<MarkerObservation>& markers, const Pose& camera_pose,
                     PlaneFitPoints points = PlaneFitPoints::marker_centres);

inline constexpr double kDefaultViewAngle = M_PI / 4;  // 45 degrees from the plane normal
inline constexpr double kDefaultViewDistance = 0.30;   // m

// Camera pose looking at the plane centre from `distance`, tilted `angle`
// away from the normal towards the in-plane direction at `azimuth` (measured
// from the plane x axis). Camera z points at the centre; camera x stays
// parallel to the plane.
Pose alignment_pose(const ScenePlane& plane, double angle = kDefaultViewAngle, double distance = kDefaultViewDistance,
                     double azimuth = 0.0);

// `n_views` alignment poses at azimuths 2 pi k / n_views.
std::vector<Pose> orbit_trajectory(const ScenePlane& plane, int n_views, double angle = kDefaultViewAngle,
                                   double distance = kDefaultViewDistance);

// Marker observation file: {"format_version": 1, "markers": [{"id", "corners", "confidence"}]}.
std::string write_marker_observations(const std::vector<MarkerObservation>& markers);
std::vector<MarkerObservation> read_marker_observations(const std::string& text);
void save_marker_observations(const std::vector<MarkerObservation>& markers, const std::filesystem::path& path);
std::vector<MarkerObservation> load_marker_observations(const std::filesystem::path& path);

}  // namespace ius
