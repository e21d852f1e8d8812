#include <gtest/gtest.h>

#include <random>

#include "dualtwist/chain_io.hpp"
#include "dualtwist/config_opt.hpp"
#include "dualtwist/manipulability.hpp"
#include "dualtwist/service.hpp"
#include "support/oracles.hpp"
#include "support/paths.hpp"

using namespace dualtwist;

namespace {

JointConfig unit(int i) {
  JointConfig e = JointConfig::Zero(7);
  e[i] = 1.0;
  return e;
}

// Independent recomputation of every constraint for a returned configuration pair.
std::vector<std::string> recheck(const OptimizationProblem& p, const JointConfig& l, const JointConfig& r) {
  std::vector<std::string> bad;
  for (auto [arm, q, tag] : {std::tuple{&p.left, &l, "left"}, std::tuple{&p.right, &r, "right"}}) {
    const auto& c = *arm->chain;
    for (int i = 0; i < c.joint_count(); ++i) {
      if ((*q)[i] < c.joints()[i].lower || (*q)[i] > c.joints()[i].upper) bad.push_back(std::string(tag) + " limit");
    }
    if (oracle::yoshikawa_svd(oracle::fd_jacobian(c, *q, 1e-6)) < p.singularity_floor) {
      bad.push_back(std::string(tag) + " singular");
    }
    const Eigen::Matrix4d T = oracle::fk(c, *q);
    const Eigen::Matrix4d G = oracle::to4(arm->target.isometry());
    const double pos = (T.block<3, 1>(0, 3) - G.block<3, 1>(0, 3)).norm();
    const double ang = oracle::log_rotation(G.topLeftCorner<3, 3>().transpose() * T.topLeftCorner<3, 3>()).norm();
    if (pos + 0.5 * ang > p.ik.tol * (1 + 1e-6)) bad.push_back(std::string(tag) + " pose");
  }
  if (min_arm_distance(ArmSkeleton(oracle::points(*p.left.chain, l)),
                       ArmSkeleton(oracle::points(*p.right.chain, r)), true)
          .d_min < p.d_thr) {
    bad.push_back("d_thr");
  }
  return bad;
}

class ReferenceProblem : public ::testing::Test {
protected:
  static void SetUpTestSuite() {
    scenario = new Scenario(load_scenario(test_data::repo("data/reference_scenario.json")));
  }
  static void TearDownTestSuite() {
    delete scenario;
    scenario = nullptr;
  }
  static Scenario* scenario;
};
Scenario* ReferenceProblem::scenario = nullptr;

}  // namespace

TEST(VariationCost, UnitStepsUnderDefaultWeights) {
  const JointConfig zero = JointConfig::Zero(7);
  EXPECT_EQ(variation_cost(zero, unit(0), VariationWeights()), 1.0);
  EXPECT_EQ(variation_cost(zero, unit(6), VariationWeights()), 0.1);
  EXPECT_EQ(variation_cost(zero, -unit(6), VariationWeights()), 0.1);
  EXPECT_EQ(variation_cost(unit(3), unit(3), VariationWeights()), 0.0);
}

TEST(VariationCost, DefaultWeightsFavourDistalJoints) {
  const VariationWeights w;
  ASSERT_EQ(w.alpha.size(), 7);
  for (int i = 1; i < 7; ++i) EXPECT_LE(w.alpha[i], w.alpha[i - 1]);
}

TEST(VariationCost, MatchesHandSum) {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> u(-3, 3), a(0.01, 2);
  for (int t = 0; t < 500; ++t) {
    JointConfig x(7), y(7);
    Eigen::VectorXd al(7);
    for (int i = 0; i < 7; ++i) {
      x[i] = u(rng);
      y[i] = u(rng);
      al[i] = a(rng);
    }
    double ref = 0.0;
    for (int i = 0; i < 7; ++i) ref += al[i] * std::abs(y[i] - x[i]);
    EXPECT_NEAR(variation_cost(x, y, VariationWeights(al)), ref, 1e-12);
  }
}

TEST(VariationCost, SizeMismatchAndBadWeights) {
  EXPECT_THROW(variation_cost(JointConfig::Zero(6), JointConfig::Zero(7), VariationWeights()), InputError);
  EXPECT_THROW(variation_cost(JointConfig::Zero(6), JointConfig::Zero(6), VariationWeights()), InputError);
  Eigen::VectorXd w = Eigen::VectorXd::Ones(7);
  w[2] = 0.0;
  EXPECT_THROW(VariationWeights{w}, InputError);
}

TEST(Seeds, SpreadStaysInsideRange) {
  const auto L = load_chain(test_data::repo("data/left_arm.json"));
  const JointConfig q0 = JointConfig::Zero(7);
  const auto seeds = spread_seeds(L, q0, 2, 8);
  ASSERT_EQ(seeds.size(), 8u);
  for (const auto& s : seeds) {
    EXPECT_TRUE(L.within_limits(s));
    for (int i = 0; i < 7; ++i) {
      if (i != 2) EXPECT_EQ(s[i], q0[i]);
    }
  }
  EXPECT_THROW(spread_seeds(L, q0, 7, 8), InputError);
}

TEST(NullSpace, IdenticalSeedsGiveOneCandidate) {
  const auto L = load_chain(test_data::repo("data/left_arm.json"));
  JointConfig q(7);
  q << 0.1, 0.4, -0.2, -1.4, 0.1, 0.9, 0.2;
  JointConfig seed = q;
  seed[2] += 0.1;
  const auto c = null_space_candidates(L, forward_kinematics(L, q), {seed, seed, seed});
  EXPECT_EQ(c.size(), 1u);
}

TEST(NullSpace, CandidatesReachTargetAndAreDistinct) {
  const auto L = load_chain(test_data::repo("data/left_arm.json"));
  JointConfig q(7);
  q << 0.1, 0.4, -0.2, -1.4, 0.1, 0.9, 0.2;
  const Pose target = forward_kinematics(L, q);
  const IkOptions ik;
  const auto c = null_space_candidates(L, target, spread_seeds(L, q, 2, 12), ik);
  ASSERT_GT(c.size(), 1u);
  for (size_t i = 0; i < c.size(); ++i) {
    EXPECT_LE(pose_error(Pose::from_isometry(Eigen::Isometry3d(oracle::fk(L, c[i]))), target), ik.tol);
    for (size_t j = 0; j < i; ++j) EXPECT_GT((c[i] - c[j]).cwiseAbs().maxCoeff(), 1e-3);
  }
}

TEST(NullSpace, NonRedundantChainHasIsolatedSolutions) {
  // Six joints: solutions form isolated points, so many seeds collapse onto few.
  std::mt19937_64 rng(62);
  const auto chain = oracle::random_chain(rng, 6);
  const JointConfig q = oracle::random_config(chain, rng, 0.5);
  std::vector<JointConfig> seeds;
  for (int i = 0; i < 40; ++i) {
    JointConfig s = q;
    for (int j = 0; j < 6; ++j) s[j] += 0.02 * (i % 5 - 2) * (j % 2 ? 1 : -1);
    seeds.push_back(s);
  }
  const auto c = null_space_candidates(chain, forward_kinematics(chain, q), seeds);
  ASSERT_FALSE(c.empty());
  EXPECT_LT(c.size(), 5u);
}

TEST_F(ReferenceProblem, TargetsAtInitialPosesReturnInitialConfigs) {
  OptimizationProblem p = twist_problem(*scenario);
  p.left.target = forward_kinematics(*p.left.chain, p.left.initial);
  p.right.target = forward_kinematics(*p.right.chain, p.right.initial);
  p.lambda_m = 0.0;
  const auto r = optimize_twist_configs(p);
  EXPECT_EQ(r.f_a, 0.0);
  EXPECT_EQ(r.left.q, p.left.initial);
  EXPECT_EQ(r.right.q, p.right.initial);
}

TEST_F(ReferenceProblem, DominatesBaselineAndSatisfiesConstraints) {
  const OptimizationProblem p = twist_problem(*scenario);
  const CandidateScore base = baseline_solution(p);
  const auto r = optimize_twist_configs(p);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.objective, base.objective);
  if (base.feasible()) EXPECT_LE(r.objective, base.objective);
  EXPECT_TRUE(recheck(p, r.left.q, r.right.q).empty());
}

TEST_F(ReferenceProblem, ReportedTermsMatchRecomputation) {
  const OptimizationProblem p = twist_problem(*scenario);
  const auto r = optimize_twist_configs(p);
  const double fa = variation_cost(p.left.initial, r.left.q, p.left.alpha) +
                    variation_cost(p.right.initial, r.right.q, p.right.alpha);
  const auto ml = directional_manipulability(jacobian(*p.left.chain, r.left.q).angular,
                                             twist_axis_direction(forward_kinematics(*p.left.chain, r.left.q)));
  const auto mr = directional_manipulability(jacobian(*p.right.chain, r.right.q).angular,
                                             twist_axis_direction(forward_kinematics(*p.right.chain, r.right.q)));
  EXPECT_NEAR(r.f_a, fa, 1e-12);
  EXPECT_NEAR(r.f_m, p.left.beta / ml + p.right.beta / mr, 1e-12);
  EXPECT_NEAR(r.objective, r.f_a + p.lambda_m * r.f_m, 1e-12);
}

TEST_F(ReferenceProblem, AcceptedObjectivesNeverIncrease) {
  const auto r = optimize_twist_configs(twist_problem(*scenario));
  ASSERT_FALSE(r.accepted_objectives.empty());
  for (size_t i = 1; i < r.accepted_objectives.size(); ++i) {
    EXPECT_LE(r.accepted_objectives[i], r.accepted_objectives[i - 1]);
  }
  EXPECT_EQ(r.accepted_objectives.back(), r.objective);
}

TEST_F(ReferenceProblem, Deterministic) {
  const OptimizationProblem p = twist_problem(*scenario);
  const auto a = optimize_twist_configs(p);
  const auto b = optimize_twist_configs(p);
  EXPECT_EQ(a.left.q, b.left.q);
  EXPECT_EQ(a.right.q, b.right.q);
  EXPECT_EQ(a.objective, b.objective);
  EXPECT_EQ(a.accepted_objectives, b.accepted_objectives);
}

TEST_F(ReferenceProblem, UniformWeightScalingKeepsArgmin) {
  OptimizationProblem p = twist_problem(*scenario);
  p.lambda_m = 0.0;
  const auto base = optimize_twist_configs(p);
  for (double s : {2.0, 0.5, 4.0}) {
    OptimizationProblem q = p;
    q.left.alpha = VariationWeights(p.left.alpha.alpha * s);
    q.right.alpha = VariationWeights(p.right.alpha.alpha * s);
    const auto r = optimize_twist_configs(q);
    EXPECT_EQ(r.left.q, base.left.q) << "scale " << s;
    EXPECT_EQ(r.right.q, base.right.q) << "scale " << s;
  }
}

TEST_F(ReferenceProblem, TargetInsideOtherArmIsInfeasible) {
  OptimizationProblem p = twist_problem(*scenario);
  // Left gripper sent onto the right arm's elbow.
  const auto right_pts = joint_positions(*p.right.chain, p.right.initial);
  p.left.target.position = right_pts[4];
  try {
    optimize_twist_configs(p);
    FAIL() << "expected infeasibility";
  } catch (const InfeasibleError& e) {
    EXPECT_FALSE(e.violated().empty());
  }
}

TEST_F(ReferenceProblem, SeparationDemandBeyondWorkspaceIsInfeasible) {
  OptimizationProblem p = twist_problem(*scenario);
  p.d_thr = 5.0;
  try {
    optimize_twist_configs(p);
    FAIL() << "expected infeasibility";
  } catch (const InfeasibleError& e) {
    ASSERT_FALSE(e.violated().empty());
    bool mentions_distance = false;
    for (const auto& v : e.violated()) mentions_distance |= v.find("d_thr") != std::string::npos;
    EXPECT_TRUE(mentions_distance);
  }
}

TEST_F(ReferenceProblem, BadProblemRejected) {
  OptimizationProblem p = twist_problem(*scenario);
  p.lambda_m = -1.0;
  EXPECT_THROW(optimize_twist_configs(p), InputError);
  p = twist_problem(*scenario);
  p.left.chain = nullptr;
  EXPECT_THROW(optimize_twist_configs(p), InputError);
}
