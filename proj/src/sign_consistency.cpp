#include "fecbf/sign_consistency.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fecbf {

NeighborHistory::NeighborHistory( std::size_t capacity )
   : samples_( capacity )
{
   if( capacity < 2 ) throw std::invalid_argument( "NeighborHistory: capacity must be at least 2" );
}

void NeighborHistory::push( double time, const UavState& state )
{
   if( !samples_.empty() && !( time > samples_.back().time ) )
      throw std::invalid_argument( "NeighborHistory: timestamps must be strictly increasing" );
   samples_.push_back( { time, state } );
}

Eigen::Vector3d cone_axis( const UavState& state, const Eigen::Vector3d& goal, double deadband )
{
   const Eigen::Vector3d local = normalized_frame( state ).transpose() * ( goal - state.position );
   const double unit = std::sqrt( 3.0 ) / 3.0;
   // rounding noise on a component that is zero in exact arithmetic counts as zero
   const double zero_tol = std::max( 1e-9, std::sin( std::clamp( deadband, 0.0, M_PI / 2 ) ) ) * local.norm();
   return local.unaryExpr( [unit, zero_tol]( double x ) { return x < -zero_tol ? -unit : unit; } );
}

Eigen::Vector3d estimate_input( const NeighborHistory& history, const UavLimits& limits )
{
   if( history.size() < 2 ) throw std::invalid_argument( "estimate_input: need two samples" );
   const TimedState& newest = history[history.size() - 1];
   const TimedState& prev = history[history.size() - 2];
   const double dt = newest.time - prev.time;
   const ControlInput raw { ( newest.state.speed - prev.state.speed ) / dt,
                            ( newest.state.pitch - prev.state.pitch ) / dt,
                            wrap_pi( newest.state.yaw - prev.state.yaw ) / dt };
   return clamp_input( raw, limits ).as_vector();
}

InputBox admissible_input_box( const NeighborHistory& history, const UavLimits& limits, double u_tol_fraction )
{
   InputBox box { limits.input_lower(), limits.input_upper() };
   if( history.size() < 2 ) return box;
   const Eigen::Vector3d estimate = estimate_input( history, limits );
   const Eigen::Vector3d half_width = u_tol_fraction * ( box.upper - box.lower );
   box.lower = box.lower.cwiseMax( estimate - half_width );
   box.upper = box.upper.cwiseMin( estimate + half_width );
   return box;
}

Eigen::Vector3d worst_case_sdot( const NeighborHistory& history, const Eigen::Vector3d& d_axis,
                                 const Eigen::Matrix3d& frame_i, const UavLimits& limits_j, const SafetyParams& params,
                                 double u_tol_fraction )
{
   if( history.empty() ) throw std::invalid_argument( "worst_case_sdot: empty history" );
   return worst_case_sdot( admissible_input_box( history, limits_j, u_tol_fraction ),
                           kinematics( history.latest().state, params ), frame_i * d_axis, params );
}

Eigen::Vector3d worst_case_sdot( const InputBox& box, const Kinematics& neighbor, const Eigen::Vector3d& axis_world,
                                 const SafetyParams& params )
{
   const Eigen::Vector3d coeff = params.zeta * neighbor.w.transpose() * axis_world;
   Eigen::Vector3d u;
   for( int c = 0; c < 3; c++ ) u( c ) = coeff( c ) < 0 ? box.lower( c ) : box.upper( c );
   return neighbor.velocity + params.zeta * neighbor.w * u;
}

std::optional<ScConstraint> sc_coefficients( const UavState& state_i, const UavState& state_j,
                                             const Eigen::Vector3d& sdot_hat, const Eigen::Vector3d& d_axis,
                                             const SafetyParams& params, double beta, double den_eps )
{
   return sc_coefficients( kinematics( state_i, params ), kinematics( state_j, params ), sdot_hat, d_axis,
                           normalized_frame( state_i ) * d_axis, params, beta, den_eps );
}

std::optional<ScConstraint> sc_coefficients( const Kinematics& self, const Kinematics& other,
                                             const Eigen::Vector3d& sdot_hat, const Eigen::Vector3d& d_axis,
                                             const Eigen::Vector3d& axis_world, const SafetyParams& params,
                                             double beta, double den_eps )
{
   const Eigen::Vector3d gap = self.s + self.velocity - other.s;
   const double den = ( gap - other.velocity ).norm();
   if( !( den > den_eps ) ) return std::nullopt;

   ScConstraint sc;
   sc.l = -params.zeta * self.w.transpose() * axis_world / den;
   sc.delta = axis_world.dot( gap - sdot_hat ) / den - std::cos( beta );
   sc.beta = beta;
   sc.d_axis = d_axis;
   return sc;
}

}   // namespace fecbf
