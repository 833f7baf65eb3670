#pragma once

#include <Eigen/Dense>

namespace fecbf {

/// Integrated state of one vehicle: position, speed, pitch, yaw.
struct UavState
{
   Eigen::Vector3d position = Eigen::Vector3d::Zero();
   double speed = 0.0;
   double pitch = 0.0;
   double yaw = 0.0;
};

/// Local control input [a, gamma, omega].
struct ControlInput
{
   double accel = 0.0;
   double pitch_rate = 0.0;
   double yaw_rate = 0.0;

   Eigen::Vector3d as_vector() const { return { accel, pitch_rate, yaw_rate }; }
   static ControlInput from_vector( const Eigen::Vector3d& u ) { return { u( 0 ), u( 1 ), u( 2 ) }; }
};

/// State and input bounds of one vehicle plus its safety radius.
struct UavLimits
{
   double v_min = 0.5;
   double v_max = 2.0;
   double a_min = -1.0;
   double a_max = 1.0;
   double pitch_min = -M_PI / 2;
   double pitch_max = M_PI / 2;
   double pitch_rate_min = -M_PI / 36;
   double pitch_rate_max = M_PI / 36;
   double yaw_min = 0.0;
   double yaw_max = 2 * M_PI;
   double yaw_rate_min = -M_PI / 18;
   double yaw_rate_max = M_PI / 18;
   double safety_radius = 2.0;

   /// Default limits for a vehicle with the given top speed (v_min = v_max / 4).
   static UavLimits with_max_speed( double v_max, double safety_radius = 2.0 );

   Eigen::Vector3d input_lower() const { return { a_min, pitch_rate_min, yaw_rate_min }; }
   Eigen::Vector3d input_upper() const { return { a_max, pitch_rate_max, yaw_rate_max }; }

   /// Throws std::invalid_argument unless every min < max and v_min > 0.
   void validate() const;
};

/// Wraps an angle into [0, 2*pi).
double wrap_two_pi( double angle );
/// Wraps an angle difference into (-pi, pi].
double wrap_pi( double angle );

/// [v cos(theta) cos(psi), v cos(theta) sin(psi), v sin(theta)]
Eigen::Vector3d velocity_vector( const UavState& state );

ControlInput clamp_input( const ControlInput& u, const UavLimits& limits );

/// Explicit Euler step. Position advances with the pre-step velocity, then
/// speed and pitch are integrated and clamped and yaw is wrapped.
UavState step( const UavState& state, const ControlInput& u, const UavLimits& limits, double dt );

}   // namespace fecbf
