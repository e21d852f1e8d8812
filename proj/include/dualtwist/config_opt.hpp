#pragma once

#include <string>
#include <vector>

#include "dualtwist/collision.hpp"
#include "dualtwist/kinematics.hpp"

namespace dualtwist {

/// Per-joint weights on |theta_final - theta_initial|. Defaults favour moving the
/// joints near the tool over those near the base.
struct VariationWeights {
  Eigen::VectorXd alpha;

  VariationWeights();
  explicit VariationWeights(Eigen::VectorXd a);
};

/// sum_i alpha_i |final_i - initial_i|
double variation_cost(const JointConfig& initial, const JointConfig& final_q,
                      const VariationWeights& weights);

struct ArmProblem {
  const KinematicChain* chain = nullptr;
  JointConfig initial;
  Pose target;
  VariationWeights alpha;
  double beta = 1.0;
};

struct OptimizationProblem {
  ArmProblem left;
  ArmProblem right;
  double lambda_m = 1.0;
  double singularity_floor = 1e-3;
  double d_thr = 0.0;
  bool skip_terminal_segments = true;
  int seed_count = 8;
  /// Joint swept to spread the IK seeds over the arm's self-motion.
  int redundant_joint = 2;
  int refine_iterations = 60;
  IkOptions ik;
};

struct ArmSolution {
  JointConfig q;
  double variation = 0.0;
  double manipulability = 0.0;
  double singularity = 0.0;
  double pose_error = 0.0;
};

struct OptimizationResult {
  ArmSolution left;
  ArmSolution right;
  double f_a = 0.0;
  double f_m = 0.0;
  double objective = 0.0;
  double d_min = 0.0;
  int iterations = 0;
  int candidates_evaluated = 0;
  bool converged = false;
  /// Objective after each accepted improvement; non-increasing.
  std::vector<double> accepted_objectives;
};

/// Evaluation of one configuration pair against the problem's objective and constraints.
struct CandidateScore {
  ArmSolution left;
  ArmSolution right;
  double f_a = 0.0;
  double f_m = 0.0;
  double objective = 0.0;
  double d_min = 0.0;
  std::vector<std::string> violations;
  bool feasible() const { return violations.empty(); }
};

CandidateScore score_candidate(const OptimizationProblem& problem, const JointConfig& left,
                               const JointConfig& right);

/// Distinct IK solutions (inf-norm separation > 1e-3 rad) reaching `target` from `seeds`.
std::vector<JointConfig> null_space_candidates(const KinematicChain& chain, const Pose& target,
                                               const std::vector<JointConfig>& seeds,
                                               const IkOptions& ik = {});

/// Seeds: `initial` with `redundant_joint` swept evenly across its range.
std::vector<JointConfig> spread_seeds(const KinematicChain& chain, const JointConfig& initial,
                                      int redundant_joint, int count);

/// Plain IK from the initial configurations, scored without search.
CandidateScore baseline_solution(const OptimizationProblem& problem);

/// Minimizes f_a + lambda_m f_m over IK solutions of both targets subject to joint
/// limits, singularity floor and arm separation. Throws InfeasibleError when no
/// candidate satisfies every constraint.
OptimizationResult optimize_twist_configs(const OptimizationProblem& problem);

}  // namespace dualtwist
