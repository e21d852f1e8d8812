#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <fstream>
#include <sstream>

#include "dualtwist/chain_io.hpp"
#include "dualtwist/manipulability.hpp"
#include "dualtwist/service.hpp"

namespace py = pybind11;
using namespace dualtwist;

namespace {

Eigen::Quaterniond quat_from(const std::array<double, 4>& wxyz) {
  return Eigen::Quaterniond(wxyz[0], wxyz[1], wxyz[2], wxyz[3]);
}

std::array<double, 4> quat_to(const Eigen::Quaterniond& q) { return {q.w(), q.x(), q.y(), q.z()}; }

py::object json_to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

std::vector<TaskCommand> to_commands(const std::optional<MasterCommand>& cmd, bool lift) {
  std::vector<TaskCommand> out;
  if (lift) out.emplace_back(LiftCommand{});
  if (cmd) out.emplace_back(*cmd);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Dual-arm coordinated twisting core";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ConfigurationError>(m, "ConfigurationError", base.ptr());
  py::register_exception<InputError>(m, "InputError", base.ptr());
  py::register_exception<DegenerateGeometryError>(m, "DegenerateGeometryError", base.ptr());
  py::register_exception<SingularConfigurationError>(m, "SingularConfigurationError", base.ptr());
  py::register_exception<UnreachableTargetError>(m, "UnreachableTargetError", base.ptr());
  py::register_exception<InfeasibleError>(m, "InfeasibleError", base.ptr());
  auto state_err = py::register_exception<StateError>(m, "StateError", base.ptr());
  py::register_exception<OverstretchError>(m, "OverstretchError", state_err.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());

  py::class_<Pose>(m, "Pose")
      .def(py::init<>())
      .def(py::init([](const Vec3& p, const std::array<double, 4>& q) { return Pose(p, quat_from(q)); }),
           py::arg("position"), py::arg("orientation"))
      .def_readwrite("position", &Pose::position)
      .def_property(
          "orientation", [](const Pose& p) { return quat_to(p.orientation); },
          [](Pose& p, const std::array<double, 4>& q) { p.orientation = quat_from(q).normalized(); })
      .def("rotation", &Pose::rotation)
      .def("__repr__", [](const Pose& p) {
        std::ostringstream os;
        os << "Pose(position=[" << p.position.transpose() << "], orientation=[" << p.orientation.w()
           << ' ' << p.orientation.vec().transpose() << "])";
        return os.str();
      });

  py::class_<KinematicChain>(m, "KinematicChain")
      .def_property_readonly("name", &KinematicChain::name)
      .def_property_readonly("joint_count", &KinematicChain::joint_count)
      .def("lower_limits", &KinematicChain::lower_limits)
      .def("upper_limits", &KinematicChain::upper_limits)
      .def("within_limits", &KinematicChain::within_limits, py::arg("q"), py::arg("slack") = 0.0)
      .def("reach", &KinematicChain::reach);

  m.def("load_chain", &load_chain, py::arg("path"));
  m.def("forward_kinematics", &forward_kinematics, py::arg("chain"), py::arg("q"));
  m.def("joint_positions", &joint_positions, py::arg("chain"), py::arg("q"));
  m.def(
      "jacobian", [](const KinematicChain& c, const JointConfig& q) { return Eigen::MatrixXd(jacobian(c, q).full()); },
      py::arg("chain"), py::arg("q"), "6 x n geometric Jacobian, linear rows first.");
  m.def(
      "solve_ik",
      [](const KinematicChain& c, const Pose& target, const JointConfig& seed, double tol, int max_iters) {
        IkOptions opt;
        opt.tol = tol;
        opt.max_iters = max_iters;
        const IkResult r = solve_ik(c, target, seed, opt);
        return py::make_tuple(r.q, r.residual, r.iterations);
      },
      py::arg("chain"), py::arg("target"), py::arg("seed"), py::arg("tol") = 1e-4,
      py::arg("max_iters") = 200, "Returns (q, residual, iterations).");
  m.def("pose_error", &pose_error, py::arg("a"), py::arg("b"), py::arg("orientation_weight") = 0.5);

  m.def(
      "segment_distance",
      [](const Vec3& a0, const Vec3& a1, const Vec3& b0, const Vec3& b1) {
        const auto r = segment_segment_distance(Segment{a0, a1}, Segment{b0, b1});
        return py::make_tuple(r.distance, r.witness_a, r.witness_b);
      },
      "Returns (distance, witness_a, witness_b).");
  m.def(
      "line_distance",
      [](const Vec3& a0, const Vec3& a1, const Vec3& b0, const Vec3& b1) {
        const auto r = line_line_distance(Segment{a0, a1}, Segment{b0, b1});
        return py::make_tuple(r.distance, r.c_a, r.c_b, r.parallel);
      },
      "Returns (distance, c_a, c_b, parallel).");
  m.def(
      "point_segment_distance",
      [](const Vec3& c, const Vec3& s0, const Vec3& s1) {
        const auto r = point_segment_distance(c, Segment{s0, s1});
        return py::make_tuple(r.distance, r.b, r.witness);
      },
      "Returns (distance, b, witness).");
  m.def(
      "min_arm_distance",
      [](const std::vector<Vec3>& left, const std::vector<Vec3>& right, bool skip) {
        const auto r = min_arm_distance(ArmSkeleton(left), ArmSkeleton(right), skip);
        py::dict d;
        d["d_min"] = r.d_min;
        d["left_segment"] = r.left_segment;
        d["right_segment"] = r.right_segment;
        d["witness_left"] = r.witness_left;
        d["witness_right"] = r.witness_right;
        return d;
      },
      py::arg("left"), py::arg("right"), py::arg("skip_adjacent_to_grasp") = true);

  m.def(
      "directional_manipulability",
      [](const Eigen::MatrixXd& angular, const Vec3& k) {
        if (angular.rows() != 3) throw InputError("angular Jacobian must have 3 rows");
        return directional_manipulability(AngularJacobian(angular), k);
      },
      py::arg("angular"), py::arg("k"));
  m.def("manipulability_fitness", &manipulability_fitness, py::arg("m_left"), py::arg("m_right"),
        py::arg("beta_left") = 1.0, py::arg("beta_right") = 1.0);
  m.def(
      "singularity_measure",
      [](const KinematicChain& c, const JointConfig& q) { return singularity_measure(jacobian(c, q)); },
      py::arg("chain"), py::arg("q"));
  m.def(
      "variation_cost",
      [](const JointConfig& initial, const JointConfig& final_q, const std::optional<Eigen::VectorXd>& alpha) {
        return variation_cost(initial, final_q, alpha ? VariationWeights(*alpha) : VariationWeights());
      },
      py::arg("initial"), py::arg("final"), py::arg("alpha") = py::none());

  py::class_<Scenario>(m, "Scenario")
      .def_readonly("left_arm", &Scenario::left_arm)
      .def_readonly("right_arm", &Scenario::right_arm)
      .def_readonly("left_initial", &Scenario::left_initial)
      .def_readonly("right_initial", &Scenario::right_initial)
      .def_property_readonly("d_thr", [](const Scenario& s) { return s.gates.d_thr; })
      .def_property_readonly("object_length", [](const Scenario& s) { return s.object.length; })
      .def_property_readonly("trace", [](const Scenario& s) { return s.teleop.trace; });

  m.def(
      "load_scenario",
      [](const std::filesystem::path& path, std::optional<std::filesystem::path> trace) {
        ScenarioOverrides o;
        o.trace = std::move(trace);
        return load_scenario(path, o);
      },
      py::arg("path"), py::arg("trace") = py::none());

  m.def(
      "run_headless",
      [](const Scenario& sc, std::optional<std::filesystem::path> metrics_out) {
        std::ofstream out;
        if (metrics_out) {
          out.open(*metrics_out, std::ios::trunc);
          if (!out) throw InputError("cannot write " + metrics_out->string());
        }
        HeadlessSummary s;
        {
          py::gil_scoped_release release;
          s = run_headless(sc, out.is_open() ? &out : nullptr);
        }
        py::dict d;
        d["final_phase"] = phase_name(s.final_phase);
        d["ticks"] = s.ticks;
        d["final_theta_t_deg"] = s.final_theta_t_deg;
        d["min_d_min"] = s.min_d_min;
        d["max_delta_twist_deg"] = s.max_delta_twist_deg;
        d["rejected_commands"] = s.rejected_commands;
        d["exit_code"] = s.exit_code;
        return d;
      },
      py::arg("scenario"), py::arg("metrics_out") = py::none());

  m.def(
      "optimize",
      [](const Scenario& sc) {
        const OptimizationProblem p = twist_problem(sc);
        const CandidateScore base = baseline_solution(p);
        return json_to_py(optimization_result_json(optimize_twist_configs(p), base));
      },
      py::arg("scenario"), "Optimized twist configurations for a scenario, as a dict.");

  py::class_<MasterCommand>(m, "MasterCommand")
      .def(py::init([](std::int64_t tick, const Pose& pose, double gripper, bool clutch) {
             MasterCommand c;
             c.tick = tick;
             c.pose = pose;
             c.gripper = gripper;
             c.clutch = clutch;
             return c;
           }),
           py::arg("tick"), py::arg("pose"), py::arg("gripper"), py::arg("clutch"))
      .def_readwrite("tick", &MasterCommand::tick)
      .def_readwrite("pose", &MasterCommand::pose)
      .def_readwrite("gripper", &MasterCommand::gripper)
      .def_readwrite("clutch", &MasterCommand::clutch)
      .def("__eq__", &MasterCommand::operator==);

  m.def("read_trace", &replay_trace, py::arg("path"));
  m.def("write_trace", &record_trace, py::arg("path"), py::arg("commands"));

  py::class_<TaskEngine>(m, "TaskEngine")
      .def(py::init<const Scenario&>(), py::arg("scenario"))
      .def(
          "step",
          [](TaskEngine& e, std::optional<MasterCommand> cmd, bool lift) {
            const auto cmds = to_commands(cmd, lift);
            return std::string(phase_name(e.step(cmds).phase));
          },
          py::arg("command") = py::none(), py::arg("lift") = false,
          "Advances one tick and returns the phase name.")
      .def_property_readonly("phase", [](const TaskEngine& e) { return std::string(phase_name(e.state().phase)); })
      .def_property_readonly("tick", [](const TaskEngine& e) { return e.state().tick; })
      .def_property_readonly("finished", &TaskEngine::finished)
      .def("left_pose", &TaskEngine::left_pose)
      .def("right_pose", &TaskEngine::right_pose)
      .def("snapshot", [](const TaskEngine& e) { return json_to_py(snapshot_json(e)); });
}
