#include <gtest/gtest.h>

#include <random>

#include <Eigen/Eigenvalues>

#include "dualtwist/chain_io.hpp"
#include "dualtwist/manipulability.hpp"
#include "support/oracles.hpp"
#include "support/paths.hpp"

using namespace dualtwist;

namespace {

AngularJacobian random_angular(std::mt19937_64& rng, int n = 7) {
  std::normal_distribution<double> g(0.0, 1.0);
  AngularJacobian J(3, n);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < n; ++c) J(r, c) = g(rng);
  return J;
}

// Jw with Jw Jw^T = diag(d).
AngularJacobian diag_root(const Vec3& d) {
  AngularJacobian J = AngularJacobian::Zero(3, 3);
  for (int i = 0; i < 3; ++i) J(i, i) = std::sqrt(d[i]);
  return J;
}

}  // namespace

TEST(Manipulability, IsotropicEllipsoidGivesOne) {
  std::mt19937_64 rng(31);
  const AngularJacobian J = diag_root(Vec3(1, 1, 1));
  for (int t = 0; t < 50; ++t) {
    EXPECT_NEAR(directional_manipulability(J, oracle::random_unit(rng)), 1.0, 1e-12);
  }
}

TEST(Manipulability, EigenDirectionsOfDiagonal) {
  const AngularJacobian J = diag_root(Vec3(4, 1, 1));
  EXPECT_NEAR(directional_manipulability(J, Vec3::UnitX()), 4.0, 1e-12);
  EXPECT_NEAR(directional_manipulability(J, Vec3::UnitZ()), 1.0, 1e-12);
}

TEST(Manipulability, EigenvectorGivesEigenvalue) {
  std::mt19937_64 rng(32);
  for (int t = 0; t < 100; ++t) {
    const AngularJacobian J = random_angular(rng);
    const Eigen::Matrix3d A = J * J.transpose();
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(A);
    for (int i = 0; i < 3; ++i) {
      const double lambda = eig.eigenvalues()[i];
      EXPECT_NEAR(directional_manipulability(J, eig.eigenvectors().col(i)), lambda, 1e-8 * std::max(1.0, lambda));
    }
  }
}

TEST(Manipulability, MatchesSvdOracle) {
  std::mt19937_64 rng(33);
  for (int t = 0; t < 100; ++t) {
    const AngularJacobian J = random_angular(rng);
    const Vec3 k = oracle::random_unit(rng);
    const double ref = oracle::manipulability_svd(J, k);
    EXPECT_NEAR(directional_manipulability(J, k), ref, 1e-9 * std::max(1.0, ref));
  }
}

TEST(Manipulability, RotationEquivariant) {
  std::mt19937_64 rng(34);
  for (int t = 0; t < 100; ++t) {
    const AngularJacobian J = random_angular(rng);
    const Vec3 k = oracle::random_unit(rng);
    const Eigen::Matrix3d R = oracle::random_rotation(rng).toRotationMatrix();
    const AngularJacobian RJ = R * J;
    EXPECT_NEAR(directional_manipulability(RJ, R * k), directional_manipulability(J, k), 1e-9);
  }
}

TEST(Manipulability, BoundedByExtremeEigenvalues) {
  std::mt19937_64 rng(35);
  for (int t = 0; t < 200; ++t) {
    const AngularJacobian J = random_angular(rng);
    const Eigen::Vector3d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(J * J.transpose()).eigenvalues();
    const double m = directional_manipulability(J, oracle::random_unit(rng));
    EXPECT_GE(m, ev.minCoeff() * (1 - 1e-12));
    EXPECT_LE(m, ev.maxCoeff() * (1 + 1e-12));
  }
}

TEST(Manipulability, ScalesQuadratically) {
  std::mt19937_64 rng(36);
  for (int t = 0; t < 50; ++t) {
    const AngularJacobian J = random_angular(rng);
    const Vec3 k = oracle::random_unit(rng);
    const double m = directional_manipulability(J, k);
    for (double s : {0.5, 2.0, 3.0}) {
      const AngularJacobian sJ = s * J;
      EXPECT_NEAR(directional_manipulability(sJ, k), s * s * m, 1e-9 * s * s * m);
    }
  }
}

TEST(Manipulability, VelocityAndForceEllipsoidsAreReciprocal) {
  // The direction of largest velocity transmission is the direction of smallest force
  // transmission, with reciprocal magnitude.
  std::mt19937_64 rng(37);
  for (int t = 0; t < 50; ++t) {
    const AngularJacobian J = random_angular(rng);
    const Eigen::Matrix3d A = J * J.transpose();
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> vel(A);
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> force(A.inverse());
    EXPECT_NEAR(std::abs(vel.eigenvectors().col(2).dot(force.eigenvectors().col(0))), 1.0, 1e-8);
    EXPECT_NEAR(vel.eigenvalues()[2] * force.eigenvalues()[0], 1.0, 1e-8);
  }
}

TEST(Manipulability, SingularDirections) {
  AngularJacobian J = AngularJacobian::Zero(3, 2);
  J(0, 0) = 1.0;
  J(1, 1) = 2.0;
  EXPECT_NEAR(directional_manipulability(J, Vec3::UnitY()), 4.0, 1e-12);
  EXPECT_EQ(directional_manipulability(J, Vec3::UnitZ()), 0.0);
  EXPECT_EQ(directional_manipulability(J, Vec3(0, 1, 1).normalized()), 0.0);
}

TEST(Manipulability, NonUnitDirectionRejected) {
  const AngularJacobian J = diag_root(Vec3(1, 1, 1));
  EXPECT_THROW(directional_manipulability(J, Vec3(2, 0, 0)), InputError);
  EXPECT_THROW(directional_manipulability(J, Vec3::Zero()), InputError);
}

TEST(TwistAxis, ToolZInBaseFrame) {
  EXPECT_NEAR((twist_axis_direction(Pose()) - Vec3::UnitZ()).norm(), 0.0, 1e-15);
  const Pose rx(Vec3::Zero(), Eigen::Quaterniond(Eigen::AngleAxisd(M_PI / 2, Vec3::UnitX())));
  EXPECT_NEAR((twist_axis_direction(rx) - Vec3(0, -1, 0)).norm(), 0.0, 1e-15);
  std::mt19937_64 rng(38);
  for (int t = 0; t < 50; ++t) {
    const Pose p(Vec3::Zero(), oracle::random_rotation(rng));
    EXPECT_NEAR((twist_axis_direction(p) - p.rotation().col(2)).norm(), 0.0, 1e-12);
  }
}

TEST(Fitness, Examples) {
  EXPECT_DOUBLE_EQ(manipulability_fitness(1, 1, 1, 1), 2.0);
  EXPECT_DOUBLE_EQ(manipulability_fitness(4, 1, 1, 1), 1.25);
  EXPECT_DOUBLE_EQ(manipulability_fitness(6, 10, 1, 1) / 2.0, manipulability_fitness(12, 20, 1, 1));
}

TEST(Fitness, StrictlyDecreasingInEachManipulability) {
  std::mt19937_64 rng(39);
  std::uniform_real_distribution<double> u(0.01, 5.0);
  for (int t = 0; t < 200; ++t) {
    const double ml = u(rng), mr = u(rng), bl = u(rng), br = u(rng);
    const double f = manipulability_fitness(ml, mr, bl, br);
    EXPECT_LT(manipulability_fitness(ml * 1.1, mr, bl, br), f);
    EXPECT_LT(manipulability_fitness(ml, mr * 1.1, bl, br), f);
  }
}

TEST(Fitness, ZeroManipulabilityRejected) {
  EXPECT_THROW(manipulability_fitness(0.0, 1.0), SingularConfigurationError);
  EXPECT_THROW(manipulability_fitness(1.0, -1.0), SingularConfigurationError);
}

TEST(Singularity, OrthonormalRowsGiveOne) {
  Jacobian J;
  J.linear = Eigen::Matrix<double, 3, Eigen::Dynamic>::Zero(3, 7);
  J.angular = Eigen::Matrix<double, 3, Eigen::Dynamic>::Zero(3, 7);
  for (int i = 0; i < 3; ++i) {
    J.linear(i, i) = 1.0;
    J.angular(i, i + 3) = 1.0;
  }
  EXPECT_NEAR(singularity_measure(J), 1.0, 1e-12);
}

TEST(Singularity, RankDeficientGivesZero) {
  Jacobian J;
  J.linear = Eigen::Matrix<double, 3, Eigen::Dynamic>::Zero(3, 7);
  J.angular = Eigen::Matrix<double, 3, Eigen::Dynamic>::Zero(3, 7);
  for (int i = 0; i < 3; ++i) J.linear(i, i) = 1.0;
  J.angular(0, 3) = 1.0;
  EXPECT_NEAR(singularity_measure(J), 0.0, 1e-12);
}

TEST(Singularity, MatchesSingularValueProduct) {
  std::mt19937_64 rng(40);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    Jacobian J;
    J.linear.resize(3, 7);
    J.angular.resize(3, 7);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 7; ++c) {
        J.linear(r, c) = g(rng);
        J.angular(r, c) = g(rng);
      }
    const double ref = oracle::yoshikawa_svd(J.full());
    EXPECT_NEAR(singularity_measure(J), ref, 1e-8 * std::max(1.0, ref));
  }
}

TEST(Singularity, StraightArmIsSingular) {
  // Fully stretched chain: every axis passes through the tool line, so no linear velocity along it.
  const auto chain = oracle::straight_chain(7, 0.1);
  EXPECT_LT(singularity_measure(jacobian(chain, JointConfig::Zero(7))), 1e-12);
}

TEST(Singularity, DefaultArmsAtInitialConfigAreWellConditioned) {
  const auto L = load_chain(test_data::repo("data/left_arm.json"));
  JointConfig q(7);
  q << 0, 0.3, 0, -1.5, 0, 1.0, 0;
  const double w = singularity_measure(jacobian(L, q));
  EXPECT_GT(w, 1e-3);
  EXPECT_NEAR(w, oracle::yoshikawa_svd(oracle::fd_jacobian(L, q, 1e-6)), 1e-6);
}
