#include "fecbf/cbf.hpp"

#include <cmath>
#include <stdexcept>

namespace fecbf {

void SafetyParams::validate() const
{
   if( !( zeta > 0 ) ) throw std::invalid_argument( "SafetyParams: zeta must be positive" );
   if( !( kappa > 0 ) ) throw std::invalid_argument( "SafetyParams: kappa must be positive" );
}

Eigen::Matrix3d rotation_matrix( double pitch, double yaw )
{
   const double ct = std::cos( pitch ), st = std::sin( pitch );
   const double cp = std::cos( yaw ), sp = std::sin( yaw );
   Eigen::Matrix3d r;
   r << ct * cp, -st * cp, -ct * sp,
        ct * sp, -st * sp,  ct * cp,
        st,       ct,       0.0;
   return r;
}

Eigen::Matrix3d kinematic_jacobian( const UavState& state )
{
   if( !( state.speed > 0 ) ) throw std::invalid_argument( "kinematic_jacobian: speed must be positive" );
   Eigen::Matrix3d w = rotation_matrix( state.pitch, state.yaw );
   w.col( 1 ) *= state.speed;
   w.col( 2 ) *= state.speed;
   return w;
}

Eigen::Matrix3d normalized_frame( const UavState& state )
{
   Eigen::Matrix3d frame = rotation_matrix( state.pitch, state.yaw );
   frame.col( 2 ) = Eigen::Vector3d( -std::sin( state.yaw ), std::cos( state.yaw ), 0.0 );
   return frame;
}

Eigen::Vector3d virtual_state( const UavState& state, double zeta )
{
   return state.position + zeta * velocity_vector( state );
}

BarrierValue barrier_value( const UavState& state_i, const UavState& state_j, const UavLimits& limits_i,
                            const UavLimits& limits_j, const SafetyParams& params )
{
   const Eigen::Vector3d diff = virtual_state( state_i, params ) - virtual_state( state_j, params );
   const double d = limits_i.safety_radius + limits_j.safety_radius + params.zeta * ( state_i.speed + state_j.speed );
   return { diff.squaredNorm() - d * d, d };
}

PairwiseCbf pairwise_coefficients( const UavState& state_i, const UavState& state_j, const UavLimits& limits_i,
                                   const UavLimits& limits_j, const SafetyParams& params )
{
   return pairwise_coefficients( kinematics( state_i, params, limits_i.safety_radius ),
                                 kinematics( state_j, params, limits_j.safety_radius ), params );
}

Kinematics kinematics( const UavState& state, const SafetyParams& params, double radius )
{
   Kinematics k;
   k.speed = state.speed;
   k.radius = radius;
   k.w = kinematic_jacobian( state );
   // first column of W is the heading, so this matches velocity_vector()
   k.velocity = state.speed * k.w.col( 0 );
   k.s = state.position + params.zeta * k.velocity;
   return k;
}

PairwiseCbf pairwise_coefficients( const Kinematics& i, const Kinematics& j, const SafetyParams& params )
{
   const Eigen::Vector3d diff = i.s - j.s;
   const double d = i.radius + j.radius + params.zeta * ( i.speed + j.speed );

   PairwiseCbf cbf;
   cbf.h = diff.squaredNorm() - d * d;
   cbf.d = d;
   cbf.k_ij = 2 * params.zeta * i.w.transpose() * diff;
   cbf.k_ji = -2 * params.zeta * j.w.transpose() * diff;
   cbf.xi = 2 * diff.dot( i.velocity - j.velocity ) + params.kappa * cbf.h;
   return cbf;
}

}   // namespace fecbf
