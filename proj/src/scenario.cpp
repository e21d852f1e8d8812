#include "dualtwist/scenario.hpp"

#include "dualtwist/chain_io.hpp"

namespace dualtwist {

using nlohmann::json;

Eigen::Quaterniond frame_from_axis(const Vec3& z_axis, const Vec3& x_hint) {
  if (z_axis.norm() < 1e-12) throw DegenerateGeometryError("frame axis is zero");
  const Vec3 z = z_axis.normalized();
  Vec3 x = x_hint - x_hint.dot(z) * z;
  if (x.norm() < 1e-9) {
    // Hint parallel to z: fall back to whichever world axis is least aligned.
    Eigen::Index k;
    z.cwiseAbs().minCoeff(&k);
    const Vec3 e = Vec3::Unit(k);
    x = e - e.dot(z) * z;
  }
  x.normalize();
  Eigen::Matrix3d R;
  R.col(0) = x;
  R.col(1) = z.cross(x);
  R.col(2) = z;
  return Eigen::Quaterniond(R).normalized();
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

AlignmentVariant parse_variant(const std::string& s) {
  if (s == "axis_to_object") return AlignmentVariant::AxisToObject;
  if (s == "grip_line") return AlignmentVariant::GripLine;
  if (s == "axis_to_axis") return AlignmentVariant::AxisToAxis;
  throw ConfigurationError("unknown alignment variant '" + s + "'");
}

}  // namespace

Scenario scenario_from_json(const json& j, const std::filesystem::path& base_dir,
                            const ScenarioOverrides& overrides) {
  Scenario sc;
  try {
    const auto left_path =
        overrides.left_arm.value_or(resolve(base_dir, j.at("left_arm").get<std::string>()));
    const auto right_path =
        overrides.right_arm.value_or(resolve(base_dir, j.at("right_arm").get<std::string>()));
    sc.left_arm = load_chain(left_path);
    sc.right_arm = load_chain(right_path);

    const auto& init = j.at("initial");
    sc.left_initial = joints_from_json(init.at("left"));
    sc.right_initial = joints_from_json(init.at("right"));
    sc.left_arm.require_size(sc.left_initial);
    sc.right_arm.require_size(sc.right_initial);
    if (!sc.left_arm.within_limits(sc.left_initial) ||
        !sc.right_arm.within_limits(sc.right_initial)) {
      throw ConfigurationError("initial configuration outside joint limits");
    }

    const auto& o = j.at("object");
    sc.object = TwistObject::straight(vec3_from_json(o.at("p1")), vec3_from_json(o.at("direction")),
                                      o.at("length").get<double>(), o.at("stiffness").get<double>());
    sc.object.stretch_tolerance = o.value("stretch_tolerance", sc.object.stretch_tolerance);
    sc.grasp_offset_deg = o.value("grasp_offset_deg", 0.0);
    if (j.contains("grasp_x_hint")) sc.grasp_x_hint = vec3_from_json(j.at("grasp_x_hint"));

    const auto& prep = j.at("prepare");
    sc.prepare_position = vec3_from_json(prep.at("position"));
    if (prep.contains("axis")) sc.hold_axis = vec3_from_json(prep.at("axis"));
    if (prep.contains("x_hint")) sc.hold_x_hint = vec3_from_json(prep.at("x_hint"));

    if (j.contains("plan")) {
      const auto& p = j.at("plan");
      sc.plan.theta_right_deg = p.value("theta_right_deg", sc.plan.theta_right_deg);
      sc.plan.theta_left_deg = p.value("theta_left_deg", sc.plan.theta_left_deg);
      sc.plan.theta_total_deg = p.value("theta_total_deg", sc.plan.theta_total_deg);
      sc.plan.rate_deg_per_tick = p.value("rate_deg_per_tick", sc.plan.rate_deg_per_tick);
      const auto src = p.value("left_source", std::string("teleop"));
      if (src == "teleop") sc.plan.left_source = LeftTwistSource::Teleop;
      else if (src == "mirrored") sc.plan.left_source = LeftTwistSource::Mirrored;
      else throw ConfigurationError("plan.left_source must be 'teleop' or 'mirrored'");
    }
    if (std::abs(sc.plan.theta_left_deg - sc.plan.theta_right_deg) < sc.plan.theta_total_deg) {
      throw ConfigurationError("twist targets do not span theta_total");
    }
    if (!(sc.plan.rate_deg_per_tick > 0.0)) throw ConfigurationError("twist rate must be positive");

    sc.gates.d_thr = sc.object.length;
    if (j.contains("gates")) {
      const auto& g = j.at("gates");
      sc.gates.delta_tor_deg = g.value("delta_tor_deg", sc.gates.delta_tor_deg);
      if (g.contains("d_thr") && !g.at("d_thr").is_string()) {
        sc.gates.d_thr = g.at("d_thr").get<double>();
      } else if (g.contains("d_thr") && g.at("d_thr").get<std::string>() != "object_length") {
        throw ConfigurationError("gates.d_thr must be a number or \"object_length\"");
      }
      sc.gates.grasp_position_tol = g.value("grasp_position_tol", sc.gates.grasp_position_tol);
      sc.gates.grasp_angle_tol_deg = g.value("grasp_angle_tol_deg", sc.gates.grasp_angle_tol_deg);
    }
    if (!(sc.gates.d_thr > 0.0)) throw ConfigurationError("d_thr must be positive");

    if (j.contains("motion")) {
      const auto& m = j.at("motion");
      sc.motion.approach_step = m.value("approach_step", sc.motion.approach_step);
      sc.motion.transport_step = m.value("transport_step", sc.motion.transport_step);
      sc.motion.orientation_step_deg =
          m.value("orientation_step_deg", sc.motion.orientation_step_deg);
      sc.motion.auto_lift = m.value("auto_lift", sc.motion.auto_lift);
    }

    if (j.contains("teleop")) {
      const auto& t = j.at("teleop");
      const auto src = t.value("source", std::string("trace"));
      if (src == "trace") sc.teleop.source = TeleopSource::Trace;
      else if (src == "live") sc.teleop.source = TeleopSource::Live;
      else throw ConfigurationError("teleop.source must be 'trace' or 'live'");
      if (t.contains("trace")) sc.teleop.trace = resolve(base_dir, t.at("trace").get<std::string>());
      sc.teleop.map.scale = t.value("scale", 1.0);
      if (t.contains("offset")) sc.teleop.map.offset = transform_from_json(t.at("offset"));
      sc.teleop.step_bound = t.value("step_bound", sc.teleop.step_bound);
    }
    if (overrides.trace) {
      sc.teleop.trace = *overrides.trace;
      sc.teleop.source = TeleopSource::Trace;
    }
    if (!(sc.teleop.map.scale > 0.0)) throw ConfigurationError("teleop scale must be positive");

    if (j.contains("optimizer")) {
      const auto& op = j.at("optimizer");
      sc.optimizer.lambda_m = op.value("lambda_m", sc.optimizer.lambda_m);
      sc.optimizer.seed_count = op.value("seed_count", sc.optimizer.seed_count);
      sc.optimizer.redundant_joint = op.value("redundant_joint", sc.optimizer.redundant_joint);
      sc.optimizer.beta_left = op.value("beta_left", sc.optimizer.beta_left);
      sc.optimizer.beta_right = op.value("beta_right", sc.optimizer.beta_right);
      if (op.contains("alpha")) sc.optimizer.alpha = VariationWeights(joints_from_json(op.at("alpha")));
    }

    const auto variant = j.value("alignment_variant", std::string("auto"));
    if (variant != "auto") sc.variant = parse_variant(variant);

    sc.singularity_floor = j.value("singularity_floor", sc.singularity_floor);
    if (j.contains("ik")) {
      const auto& ik = j.at("ik");
      sc.ik.tol = ik.value("tol", sc.ik.tol);
      sc.ik.max_iters = ik.value("max_iters", sc.ik.max_iters);
      sc.ik.damping = ik.value("damping", sc.ik.damping);
    }
    sc.tick_rate_hz = j.value("tick_rate_hz", sc.tick_rate_hz);
    sc.settle_ticks = j.value("settle_ticks", sc.settle_ticks);
    sc.max_ticks = j.value("max_ticks", sc.max_ticks);
    if (!(sc.tick_rate_hz > 0.0)) throw ConfigurationError("tick rate must be positive");
  } catch (const json::exception& e) {
    throw ConfigurationError(std::string("bad scenario: ") + e.what());
  }
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path, const ScenarioOverrides& overrides) {
  Scenario sc = scenario_from_json(read_json_file(path), path.parent_path(), overrides);
  sc.source = path;
  return sc;
}

}  // namespace dualtwist
