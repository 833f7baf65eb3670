#include "fecbf/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fecbf {

UavLimits UavLimits::with_max_speed( double v_max, double safety_radius )
{
   UavLimits limits;
   limits.v_max = v_max;
   limits.v_min = v_max / 4;
   limits.safety_radius = safety_radius;
   return limits;
}

void UavLimits::validate() const
{
   auto require = []( bool ok, const char* what ) {
      if( !ok ) throw std::invalid_argument( std::string( "UavLimits: " ) + what );
   };
   require( v_min > 0, "v_min must be positive" );
   require( v_min < v_max, "v_min < v_max" );
   require( a_min < a_max, "a_min < a_max" );
   require( pitch_min < pitch_max, "pitch_min < pitch_max" );
   require( pitch_rate_min < pitch_rate_max, "pitch_rate_min < pitch_rate_max" );
   require( yaw_min < yaw_max, "yaw_min < yaw_max" );
   require( yaw_rate_min < yaw_rate_max, "yaw_rate_min < yaw_rate_max" );
   require( safety_radius >= 0, "safety_radius >= 0" );
}

double wrap_two_pi( double angle )
{
   double wrapped = std::fmod( angle, 2 * M_PI );
   if( wrapped < 0 ) wrapped += 2 * M_PI;
   // fmod of a tiny negative number can round up to exactly 2*pi
   if( wrapped >= 2 * M_PI ) wrapped = 0.0;
   return wrapped;
}

double wrap_pi( double angle )
{
   double wrapped = wrap_two_pi( angle );
   if( wrapped > M_PI ) wrapped -= 2 * M_PI;
   return wrapped;
}

Eigen::Vector3d velocity_vector( const UavState& state )
{
   const double ct = std::cos( state.pitch );
   return state.speed * Eigen::Vector3d( ct * std::cos( state.yaw ), ct * std::sin( state.yaw ), std::sin( state.pitch ) );
}

ControlInput clamp_input( const ControlInput& u, const UavLimits& limits )
{
   return { std::clamp( u.accel, limits.a_min, limits.a_max ),
            std::clamp( u.pitch_rate, limits.pitch_rate_min, limits.pitch_rate_max ),
            std::clamp( u.yaw_rate, limits.yaw_rate_min, limits.yaw_rate_max ) };
}

UavState step( const UavState& state, const ControlInput& u, const UavLimits& limits, double dt )
{
   UavState next;
   next.position = state.position + dt * velocity_vector( state );
   next.speed = std::clamp( state.speed + dt * u.accel, limits.v_min, limits.v_max );
   next.pitch = std::clamp( state.pitch + dt * u.pitch_rate, limits.pitch_min, limits.pitch_max );
   next.yaw = wrap_two_pi( state.yaw + dt * u.yaw_rate );
   return next;
}

}   // namespace fecbf
