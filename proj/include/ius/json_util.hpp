#pragma once

#include "ius/errors.hpp"
#include "ius/pose.hpp"

#include <json.hpp>

#include <Eigen/Core>

#include <initializer_list>
#include <string>
#include <string_view>

namespace ius::json_util {

using nlohmann::json;

// Rejects any key of `obj` not listed in `allowed`.
void require_keys(const json& obj, std::initializer_list<std::string_view> allowed, std::string_view context);

const json& field(const json& obj, std::string_view key, std::string_view context);

double number(const json& obj, std::string_view key, std::string_view context);
double number_or(const json& obj, std::string_view key, double fallback, std::string_view context);

Eigen::Vector3d vec3(const json& value, std::string_view context);
Eigen::Vector2d vec2(const json& value, std::string_view context);
Eigen::MatrixXd matrix(const json& value, long rows, long cols, std::string_view context);

// {"translation": [x, y, z], "rotation_wxyz": [w, x, y, z]}
Pose pose(const json& value, std::string_view context);

json to_json(const Eigen::Vector3d& v);
json to_json(const Pose& p);
json to_json(const Eigen::MatrixXd& m);

}  // namespace ius::json_util
