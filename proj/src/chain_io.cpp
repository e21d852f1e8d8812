#include "dualtwist/chain_io.hpp"

#include <fstream>

namespace dualtwist {

using nlohmann::json;

Vec3 vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ConfigurationError("expected a 3-vector, got " + j.dump());
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Eigen::Quaterniond quat_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) {
    throw ConfigurationError("expected a quaternion [w,x,y,z], got " + j.dump());
  }
  Eigen::Quaterniond q(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
                       j[3].get<double>());
  if (q.norm() < 1e-12) throw ConfigurationError("zero quaternion");
  return q.normalized();
}

json quat_to_json(const Eigen::Quaterniond& q) { return json::array({q.w(), q.x(), q.y(), q.z()}); }

Eigen::Isometry3d transform_from_json(const json& j) {
  Eigen::Isometry3d T = Eigen::Isometry3d::Identity();
  if (j.contains("position")) T.translation() = vec3_from_json(j.at("position"));
  if (j.contains("orientation")) T.linear() = quat_from_json(j.at("orientation")).toRotationMatrix();
  return T;
}

JointConfig joints_from_json(const json& j) {
  if (!j.is_array()) throw ConfigurationError("expected a joint array, got " + j.dump());
  JointConfig q(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) q[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return q;
}

namespace {

json transform_to_json(const Eigen::Isometry3d& T) {
  return json{{"position", vec3_to_json(T.translation())},
              {"orientation", quat_to_json(Eigen::Quaterniond(T.rotation()))}};
}

}  // namespace

KinematicChain chain_from_json(const json& j) {
  try {
    std::vector<JointSpec> joints;
    for (const auto& jj : j.at("joints")) {
      JointSpec spec;
      spec.name = jj.value("name", "joint" + std::to_string(joints.size() + 1));
      spec.axis = vec3_from_json(jj.at("axis"));
      spec.lower = jj.at("lower").get<double>();
      spec.upper = jj.at("upper").get<double>();
      if (jj.contains("link")) spec.link = transform_from_json(jj.at("link"));
      joints.push_back(std::move(spec));
    }
    const Eigen::Isometry3d base =
        j.contains("base") ? transform_from_json(j.at("base")) : Eigen::Isometry3d::Identity();
    return KinematicChain(j.value("name", "arm"), base, std::move(joints));
  } catch (const json::exception& e) {
    throw ConfigurationError(std::string("bad chain description: ") + e.what());
  }
}

json chain_to_json(const KinematicChain& chain) {
  json joints = json::array();
  for (const auto& jt : chain.joints()) {
    joints.push_back({{"name", jt.name},
                      {"axis", vec3_to_json(jt.axis)},
                      {"lower", jt.lower},
                      {"upper", jt.upper},
                      {"link", transform_to_json(jt.link)}});
  }
  return json{{"name", chain.name()}, {"base", transform_to_json(chain.base())}, {"joints", joints}};
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigurationError(path.string() + ": " + e.what());
  }
}

KinematicChain load_chain(const std::filesystem::path& path) {
  return chain_from_json(read_json_file(path));
}

}  // namespace dualtwist
