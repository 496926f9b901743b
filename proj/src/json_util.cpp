#include "ius/json_util.hpp"

#include <algorithm>
#include <cmath>

namespace ius::json_util {

namespace {

std::string where(std::string_view context, std::string_view key)
{
    return std::string(context) + "." + std::string(key);
}

}  // namespace

void require_keys(const json& obj, std::initializer_list<std::string_view> allowed, std::string_view context)
{
    if (!obj.is_object()) {
        throw ParseError(std::string(context) + ": expected an object");
    }
    for (const auto& item : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
            throw ParseError(std::string(context) + ": unknown field '" + item.key() + "'");
        }
    }
}

const json& field(const json& obj, std::string_view key, std::string_view context)
{
    auto it = obj.find(std::string(key));
    if (it == obj.end()) {
        throw ParseError(where(context, key) + ": missing required field");
    }
    return *it;
}

double number(const json& obj, std::string_view key, std::string_view context)
{
    const json& v = field(obj, key, context);
    if (!v.is_number()) {
        throw ParseError(where(context, key) + ": expected a number");
    }
    double x = v.get<double>();
    if (!std::isfinite(x)) {
        throw ParseError(where(context, key) + ": not finite");
    }
    return x;
}

double number_or(const json& obj, std::string_view key, double fallback, std::string_view context)
{
    if (!obj.contains(std::string(key))) {
        return fallback;
    }
    return number(obj, key, context);
}

Eigen::MatrixXd matrix(const json& value, long rows, long cols, std::string_view context)
{
    if (!value.is_array() || static_cast<long>(value.size()) != rows) {
        throw ParseError(std::string(context) + ": expected " + std::to_string(rows) + " rows");
    }
    Eigen::MatrixXd m(rows, cols);
    for (long r = 0; r < rows; ++r) {
        const json& row = value[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<long>(row.size()) != cols) {
            throw ParseError(std::string(context) + ": expected " + std::to_string(cols) + " columns");
        }
        for (long c = 0; c < cols; ++c) {
            const json& x = row[static_cast<std::size_t>(c)];
            if (!x.is_number()) {
                throw ParseError(std::string(context) + ": expected numbers");
            }
            m(r, c) = x.get<double>();
        }
    }
    return m;
}

namespace {

Eigen::VectorXd vecn(const json& value, long n, std::string_view context)
{
    if (!value.is_array() || static_cast<long>(value.size()) != n) {
        throw ParseError(std::string(context) + ": expected an array of " + std::to_string(n) + " numbers");
    }
    Eigen::VectorXd v(n);
    for (long i = 0; i < n; ++i) {
        const json& x = value[static_cast<std::size_t>(i)];
        if (!x.is_number()) {
            throw ParseError(std::string(context) + ": expected numbers");
        }
        v(i) = x.get<double>();
        if (!std::isfinite(v(i))) {
            throw ParseError(std::string(context) + ": not finite");
        }
    }
    return v;
}

}  // namespace

Eigen::Vector3d vec3(const json& value, std::string_view context) { return vecn(value, 3, context); }

Eigen::Vector2d vec2(const json& value, std::string_view context) { return vecn(value, 2, context); }

Pose pose(const json& value, std::string_view context)
{
    require_keys(value, {"translation", "rotation_wxyz"}, context);
    Eigen::Vector3d t = vec3(field(value, "translation", context), where(context, "translation"));
    Eigen::VectorXd q = vecn(field(value, "rotation_wxyz", context), 4, where(context, "rotation_wxyz"));
    if (std::abs(q.norm() - 1.0) > 1e-9) {
        throw ParseError(where(context, "rotation_wxyz") + ": quaternion is not unit length");
    }
    return Pose(Eigen::Quaterniond(q(0), q(1), q(2), q(3)), t);
}

json to_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

json to_json(const Pose& p)
{
    const auto& q = p.rotation;
    return json{{"translation", to_json(p.translation)}, {"rotation_wxyz", json::array({q.w(), q.x(), q.y(), q.z()})}};
}

json to_json(const Eigen::MatrixXd& m)
{
    json rows = json::array();
    for (long r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (long c = 0; c < m.cols(); ++c) {
            row.push_back(m(r, c));
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace ius::json_util
