#pragma once

#include "fecbf/kinematics.hpp"

#include <Eigen/Dense>

namespace fecbf {

/// Virtual-state horizon zeta [s] and linear class-K gain kappa [1/s].
struct SafetyParams
{
   double zeta = 0.5;
   double kappa = 0.08;

   void validate() const;
};

/// Coefficients of one pairwise barrier constraint
///    k_ij^T u_i + k_ji^T u_j + xi >= 0.
struct PairwiseCbf
{
   Eigen::Vector3d k_ij = Eigen::Vector3d::Zero();
   Eigen::Vector3d k_ji = Eigen::Vector3d::Zero();
   double xi = 0.0;
   double h = 0.0;
   double d = 0.0;
};

struct BarrierValue
{
   double h = 0.0;
   double d = 0.0;
};

/// Columns are the partial derivatives of the unit velocity direction with
/// respect to (speed, pitch, yaw); the third column has norm cos(pitch).
Eigen::Matrix3d rotation_matrix( double pitch, double yaw );

/// W = R diag(1, v, v), so that d/dt velocity = W u. Throws
/// std::invalid_argument when speed <= 0.
Eigen::Matrix3d kinematic_jacobian( const UavState& state );

/// Orthonormal local frame with the directions of W's columns. At
/// pitch = +-pi/2 the third column is the limit direction [-sin psi, cos psi, 0].
Eigen::Matrix3d normalized_frame( const UavState& state );

/// s = p + zeta * velocity. zeta is not checked here.
Eigen::Vector3d virtual_state( const UavState& state, double zeta );
inline Eigen::Vector3d virtual_state( const UavState& state, const SafetyParams& params )
{
   return virtual_state( state, params.zeta );
}

/// h = |s_i - s_j|^2 - d^2 with d = r_i + r_j + zeta (v_i + v_j).
BarrierValue barrier_value( const UavState& state_i, const UavState& state_j, const UavLimits& limits_i,
                            const UavLimits& limits_j, const SafetyParams& params );

/// The velocity part of d is frozen: its derivative is not part of xi.
PairwiseCbf pairwise_coefficients( const UavState& state_i, const UavState& state_j, const UavLimits& limits_i,
                                   const UavLimits& limits_j, const SafetyParams& params );

/// Per-vehicle terms shared by all of its pairwise constraints.
struct Kinematics
{
   double speed = 0.0;
   double radius = 0.0;
   Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
   Eigen::Matrix3d w = Eigen::Matrix3d::Zero();
   Eigen::Vector3d s = Eigen::Vector3d::Zero();
};

Kinematics kinematics( const UavState& state, const SafetyParams& params, double radius = 0.0 );

/// Same result as the state-based overload.
PairwiseCbf pairwise_coefficients( const Kinematics& i, const Kinematics& j, const SafetyParams& params );

}   // namespace fecbf
