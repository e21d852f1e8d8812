#include "dualtwist/manipulability.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace dualtwist {

namespace {
constexpr double kSingularEigen = 1e-12;
constexpr double kNullComponent = 1e-9;
}  // namespace

double directional_manipulability(const AngularJacobian& angular, const Vec3& k) {
  if (!k.allFinite() || std::abs(k.norm() - 1.0) > 1e-9) {
    throw InputError("manipulability direction must be a unit vector");
  }
  if (!angular.allFinite()) throw InputError("angular Jacobian is not finite");

  const Eigen::Matrix3d A = angular * angular.transpose();
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(A);
  const Eigen::Vector3d& lambda = eig.eigenvalues();
  const Eigen::Matrix3d& V = eig.eigenvectors();

  // k^T A^+ k, summed over the eigenbasis.
  double quad = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double c = V.col(i).dot(k);
    if (lambda[i] <= kSingularEigen) {
      if (std::abs(c) > kNullComponent) return 0.0;
      continue;
    }
    quad += c * c / lambda[i];
  }
  return quad > 0.0 ? 1.0 / quad : 0.0;
}

Vec3 twist_axis_direction(const Pose& ee_pose) {
  return (ee_pose.orientation * Vec3::UnitZ()).normalized();
}

double manipulability_fitness(double m_left, double m_right, double beta_left,
                              double beta_right) {
  if (!(m_left > 0.0) || !(m_right > 0.0)) {
    throw SingularConfigurationError("directional manipulability is zero; configuration rejected");
  }
  return beta_left / m_left + beta_right / m_right;
}

double singularity_measure(const Jacobian& J) {
  const auto full = J.full();
  const Eigen::Matrix<double, 6, 6> JJt = full * full.transpose();
  const double det = JJt.partialPivLu().determinant();
  return det > 0.0 ? std::sqrt(det) : 0.0;
}

}  // namespace dualtwist
