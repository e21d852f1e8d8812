#include "dualtwist/config_opt.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include <Eigen/SVD>

#include "dualtwist/manipulability.hpp"

namespace dualtwist {

VariationWeights::VariationWeights() : alpha(7) { alpha << 1.0, 0.5, 0.5, 0.1, 0.1, 0.1, 0.1; }

VariationWeights::VariationWeights(Eigen::VectorXd a) : alpha(std::move(a)) {
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    if (!(alpha[i] > 0.0)) throw InputError("variation weights must be positive");
  }
}

double variation_cost(const JointConfig& initial, const JointConfig& final_q,
                      const VariationWeights& weights) {
  if (initial.size() != final_q.size() || initial.size() != weights.alpha.size()) {
    throw InputError("variation cost needs equally sized configurations and weights");
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < initial.size(); ++i) {
    sum += weights.alpha[i] * std::abs(final_q[i] - initial[i]);
  }
  return sum;
}

namespace {

constexpr double kDuplicateTol = 1e-3;

ArmSolution evaluate_arm(const ArmProblem& arm, const JointConfig& q) {
  ArmSolution s;
  s.q = q;
  s.variation = variation_cost(arm.initial, q, arm.alpha);
  const Pose ee = forward_kinematics(*arm.chain, q);
  const Jacobian J = jacobian(*arm.chain, q);
  s.manipulability = directional_manipulability(J.angular, twist_axis_direction(ee));
  s.singularity = singularity_measure(J);
  s.pose_error = pose_error(ee, arm.target);
  return s;
}

void check_arm(const char* side, const ArmProblem& arm, const ArmSolution& s,
               const OptimizationProblem& problem, std::vector<std::string>& out) {
  const std::string tag(side);
  if (!arm.chain->within_limits(s.q)) out.push_back(tag + " joint limits");
  if (s.singularity < problem.singularity_floor) {
    std::ostringstream os;
    os << tag << " singularity measure " << s.singularity << " < " << problem.singularity_floor;
    out.push_back(os.str());
  }
  if (!(s.manipulability > 0.0)) out.push_back(tag + " directional manipulability is zero");
  if (s.pose_error > problem.ik.tol) {
    std::ostringstream os;
    os << tag << " pose error " << s.pose_error << " > " << problem.ik.tol;
    out.push_back(os.str());
  }
}

// Unit null vector of the 6 x n Jacobian, sign fixed by the redundant joint.
Eigen::VectorXd null_direction(const KinematicChain& chain, const JointConfig& q, int ref_joint) {
  const auto J = jacobian(chain, q).full();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeFullV);
  Eigen::VectorXd n = svd.matrixV().col(svd.matrixV().cols() - 1);
  if (n[ref_joint] < 0.0) n = -n;
  return n;
}

bool improves(double candidate, double incumbent) {
  return candidate < incumbent - 1e-12 * std::abs(incumbent);
}

}  // namespace

CandidateScore score_candidate(const OptimizationProblem& problem, const JointConfig& left,
                               const JointConfig& right) {
  CandidateScore c;
  c.left = evaluate_arm(problem.left, left);
  c.right = evaluate_arm(problem.right, right);
  check_arm("left", problem.left, c.left, problem, c.violations);
  check_arm("right", problem.right, c.right, problem, c.violations);

  c.f_a = c.left.variation + c.right.variation;
  if (c.left.manipulability > 0.0 && c.right.manipulability > 0.0) {
    c.f_m = manipulability_fitness(c.left.manipulability, c.right.manipulability,
                                   problem.left.beta, problem.right.beta);
  } else {
    c.f_m = std::numeric_limits<double>::infinity();
  }
  c.objective = c.f_a + problem.lambda_m * c.f_m;
  if (problem.lambda_m == 0.0) c.objective = c.f_a;

  const ArmSkeleton ls(joint_positions(*problem.left.chain, left));
  const ArmSkeleton rs(joint_positions(*problem.right.chain, right));
  c.d_min = min_arm_distance(ls, rs, problem.skip_terminal_segments).d_min;
  if (c.d_min < problem.d_thr) {
    std::ostringstream os;
    os << "arm distance " << c.d_min << " < d_thr " << problem.d_thr;
    c.violations.push_back(os.str());
  }
  return c;
}

std::vector<JointConfig> spread_seeds(const KinematicChain& chain, const JointConfig& initial,
                                      int redundant_joint, int count) {
  chain.require_size(initial);
  if (redundant_joint < 0 || redundant_joint >= chain.joint_count()) {
    throw InputError("redundant joint index out of range");
  }
  std::vector<JointConfig> seeds;
  const auto& jt = chain.joints()[redundant_joint];
  for (int i = 0; i < count; ++i) {
    JointConfig s = initial;
    // Interior points only; the limits themselves are poor starting places.
    s[redundant_joint] = jt.lower + (jt.upper - jt.lower) * (i + 0.5) / count;
    seeds.push_back(std::move(s));
  }
  return seeds;
}

std::vector<JointConfig> null_space_candidates(const KinematicChain& chain, const Pose& target,
                                               const std::vector<JointConfig>& seeds,
                                               const IkOptions& ik) {
  std::vector<JointConfig> out;
  for (const auto& seed : seeds) {
    JointConfig q;
    try {
      q = solve_ik(chain, target, seed, ik).q;
    } catch (const UnreachableTargetError&) {
      continue;
    }
    bool duplicate = false;
    for (const auto& existing : out) {
      if ((existing - q).cwiseAbs().maxCoeff() <= kDuplicateTol) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) out.push_back(std::move(q));
  }
  return out;
}

CandidateScore baseline_solution(const OptimizationProblem& problem) {
  const JointConfig l = solve_ik(*problem.left.chain, problem.left.target, problem.left.initial,
                                 problem.ik).q;
  const JointConfig r = solve_ik(*problem.right.chain, problem.right.target,
                                 problem.right.initial, problem.ik).q;
  return score_candidate(problem, l, r);
}

OptimizationResult optimize_twist_configs(const OptimizationProblem& problem) {
  if (!problem.left.chain || !problem.right.chain) throw InputError("problem is missing a chain");
  if (problem.lambda_m < 0.0) throw InputError("lambda_m must be non-negative");
  if (!(problem.singularity_floor > 0.0)) throw InputError("singularity floor must be positive");

  auto arm_candidates = [&](const ArmProblem& arm) {
    std::vector<JointConfig> seeds{arm.initial};
    for (auto& s : spread_seeds(*arm.chain, arm.initial, problem.redundant_joint,
                                problem.seed_count)) {
      seeds.push_back(std::move(s));
    }
    return null_space_candidates(*arm.chain, arm.target, seeds, problem.ik);
  };
  const auto left_c = arm_candidates(problem.left);
  const auto right_c = arm_candidates(problem.right);
  if (left_c.empty() || right_c.empty()) {
    throw InfeasibleError("no IK solution reaches the twist targets",
                          {left_c.empty() ? "left target unreachable" : "right target unreachable"});
  }

  OptimizationResult result;
  std::optional<CandidateScore> best;
  std::optional<CandidateScore> least_bad;
  for (const auto& l : left_c) {
    for (const auto& r : right_c) {
      CandidateScore c = score_candidate(problem, l, r);
      ++result.candidates_evaluated;
      if (c.feasible()) {
        if (!best || improves(c.objective, best->objective)) {
          best = c;
          result.accepted_objectives.push_back(c.objective);
        }
      } else if (!least_bad || c.violations.size() < least_bad->violations.size() ||
                 (c.violations.size() == least_bad->violations.size() &&
                  c.objective < least_bad->objective)) {
        least_bad = std::move(c);
      }
    }
  }
  if (!best) {
    throw InfeasibleError("no candidate satisfies the twist constraints", least_bad->violations);
  }

  // Coordinate descent over the two self-motion parameters.
  IkOptions tight = problem.ik;
  tight.max_iters = std::max(tight.max_iters, 100);
  double h = 0.2;
  int iter = 0;
  while (h >= 1e-3 && iter < problem.refine_iterations) {
    bool moved = false;
    for (int arm = 0; arm < 2; ++arm) {
      const ArmProblem& ap = arm == 0 ? problem.left : problem.right;
      for (double sign : {1.0, -1.0}) {
        ++iter;
        const JointConfig& cur = arm == 0 ? best->left.q : best->right.q;
        const JointConfig stepped =
            ap.chain->clamp(cur + sign * h * null_direction(*ap.chain, cur, problem.redundant_joint));
        JointConfig projected;
        try {
          projected = solve_ik(*ap.chain, ap.target, stepped, tight).q;
        } catch (const UnreachableTargetError&) {
          continue;
        }
        CandidateScore c = arm == 0 ? score_candidate(problem, projected, best->right.q)
                                    : score_candidate(problem, best->left.q, projected);
        ++result.candidates_evaluated;
        if (c.feasible() && improves(c.objective, best->objective)) {
          best = std::move(c);
          result.accepted_objectives.push_back(best->objective);
          moved = true;
        }
      }
    }
    if (!moved) h *= 0.5;
  }

  result.left = best->left;
  result.right = best->right;
  result.f_a = best->f_a;
  result.f_m = best->f_m;
  result.objective = best->objective;
  result.d_min = best->d_min;
  result.iterations = iter;
  result.converged = true;
  return result;
}

}  // namespace dualtwist
