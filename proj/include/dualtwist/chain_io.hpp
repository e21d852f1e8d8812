#pragma once

#include <filesystem>

#include <json.hpp>

#include "dualtwist/kinematics.hpp"

namespace dualtwist {

Vec3 vec3_from_json(const nlohmann::json& j);
nlohmann::json vec3_to_json(const Vec3& v);
/// Quaternions are stored w, x, y, z.
Eigen::Quaterniond quat_from_json(const nlohmann::json& j);
nlohmann::json quat_to_json(const Eigen::Quaterniond& q);
Eigen::Isometry3d transform_from_json(const nlohmann::json& j);
JointConfig joints_from_json(const nlohmann::json& j);

/// Chain document:
///   { "name": ..., "base": {"position": [x,y,z], "orientation": [w,x,y,z]},
///     "joints": [ {"name", "axis", "lower", "upper", "link": {"position", "orientation"}} ] }
KinematicChain chain_from_json(const nlohmann::json& j);
nlohmann::json chain_to_json(const KinematicChain& chain);
KinematicChain load_chain(const std::filesystem::path& path);

nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace dualtwist
