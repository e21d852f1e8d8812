#pragma once

#include "dualtwist/kinematics.hpp"

namespace dualtwist {

using AngularJacobian = Eigen::Matrix<double, 3, Eigen::Dynamic>;

/// Squared radius of the rotational velocity ellipsoid along unit direction k:
/// M = 1 / (k^T (Jw Jw^T)^-1 k). When Jw Jw^T is singular the limit is taken on its
/// range space, and M = 0 if k leans into the null space.
double directional_manipulability(const AngularJacobian& angular, const Vec3& k);

/// Tool z axis expressed in the base frame.
Vec3 twist_axis_direction(const Pose& ee_pose);

/// beta_L / M_L + beta_R / M_R. Throws SingularConfigurationError for M <= 0.
double manipulability_fitness(double m_left, double m_right, double beta_left = 1.0,
                              double beta_right = 1.0);

/// Yoshikawa measure sqrt(det(J J^T)) of the full 6 x n Jacobian.
double singularity_measure(const Jacobian& J);

}  // namespace dualtwist
