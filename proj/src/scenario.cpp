#include "fecbf/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <stdexcept>

namespace fecbf {

const char* to_string( ScenarioKind kind )
{
   switch( kind )
   {
   case ScenarioKind::Convergence: return "Convergence";
   case ScenarioKind::DualCircle: return "DualCircle";
   case ScenarioKind::HeadOn: return "HeadOn";
   }
   return "?";
}

ScenarioKind parse_scenario_kind( const std::string& text )
{
   std::string key;
   for( unsigned char c : text )
      if( c != '-' && c != '_' ) key.push_back( static_cast<char>( std::tolower( c ) ) );
   if( key == "convergence" ) return ScenarioKind::Convergence;
   if( key == "dualcircle" ) return ScenarioKind::DualCircle;
   if( key == "headon" ) return ScenarioKind::HeadOn;
   throw std::invalid_argument( "unknown scenario kind '" + text + "'" );
}

void ScenarioSpec::validate( bool allow_single ) const
{
   if( n < ( allow_single ? 1 : 2 ) ) throw std::invalid_argument( "scenario: n too small" );
   if( kind != ScenarioKind::Convergence && n % 2 != 0 )
      throw std::invalid_argument( std::string( "scenario: " ) + to_string( kind ) + " needs an even n" );
   if( !( dt > 0 ) ) throw std::invalid_argument( "scenario: dt must be positive" );
   if( !( t_max > 0 ) ) throw std::invalid_argument( "scenario: t_max must be positive" );
   if( !( delay >= 0 ) ) throw std::invalid_argument( "scenario: delay must be non-negative" );
   if( !( safety_radius > 0 ) ) throw std::invalid_argument( "scenario: safety_radius must be positive" );
   if( !( arrival_tol > 0 ) ) throw std::invalid_argument( "scenario: arrival_tol must be positive" );
}

namespace {

constexpr double kMissionTime = 300.0;
constexpr double kConvergenceTime = 150.0;

struct Placement
{
   Eigen::Vector3d position;
   double pitch;
   double yaw;
   double v_max;
};

void add_vehicle( Scenario& out, const Placement& p, double radius )
{
   UavState s;
   s.position = p.position;
   s.speed = p.v_max;
   s.pitch = p.pitch;
   s.yaw = wrap_two_pi( p.yaw );
   out.states.push_back( s );
   out.limits.push_back( UavLimits::with_max_speed( p.v_max, radius ) );
   out.goals.push_back( p.position + kMissionTime * velocity_vector( s ) );
}

// Start clear of everyone placed so far, with room for the velocity-dependent
// part of the safety distance.
bool clear_of( const Scenario& out, const Placement& p, double radius )
{
   for( std::size_t j = 0; j < out.states.size(); j++ )
   {
      const double need = radius + out.limits[j].safety_radius + p.v_max + out.states[j].speed;
      if( ( p.position - out.states[j].position ).norm() < need ) return false;
   }
   return true;
}

}   // namespace

Scenario generate_scenario( const ScenarioSpec& spec )
{
   spec.validate( true );
   std::mt19937_64 rng( spec.seed );
   std::uniform_real_distribution<double> speed_dist( 2.0, 3.0 );
   std::uniform_real_distribution<double> unit( -1.0, 1.0 );
   const double degree = M_PI / 180.0;
   const int n = spec.n;
   const int half = n / 2;

   // vehicle k of the layout; random parts are redrawn on overlap
   auto draw = [&]( int k ) -> Placement {
      const double v_max = speed_dist( rng );
      switch( spec.kind )
      {
      case ScenarioKind::Convergence:
      {
         const double azimuth = 2 * M_PI * k / n + unit( rng ) * M_PI / n;
         const double elevation = unit( rng ) * M_PI / 6;
         const Eigen::Vector3d dir( std::cos( elevation ) * std::cos( azimuth ),
                                    std::cos( elevation ) * std::sin( azimuth ), std::sin( elevation ) );
         // fly along -dir, straight through the meeting point
         return { kConvergencePoint + kConvergenceTime * v_max * dir, -elevation, azimuth + M_PI, v_max };
      }
      case ScenarioKind::DualCircle:
      {
         const int ring = k / half, slot = k % half;
         const double angle = 2 * M_PI * slot / half + unit( rng ) * degree;
         const double radius = ring == 0 ? 400.0 : 600.0;
         return { kArenaCentre + radius * Eigen::Vector3d( std::cos( angle ), std::sin( angle ), 0.0 ), 0.0,
                  ring == 0 ? angle : angle + M_PI, v_max };
      }
      case ScenarioKind::HeadOn:
      {
         const int group = k / half, slot = k % half;
         const double lateral = -100.0 + 200.0 * ( slot + 0.5 ) / half + unit( rng ) * 50.0 / half;
         const double sign = group == 0 ? -1.0 : 1.0;
         return { Eigen::Vector3d( kArenaCentre.x() + sign * kConvergenceTime * v_max, kArenaCentre.y() + lateral,
                                   kArenaCentre.z() ),
                  0.0, group == 0 ? 0.0 : M_PI, v_max };
      }
      }
      throw std::logic_error( "generate_scenario: unknown kind" );
   };

   Scenario out;
   for( int k = 0; k < n; k++ )
   {
      Placement p = draw( k );
      for( int attempt = 1; !clear_of( out, p, spec.safety_radius ); attempt++ )
      {
         if( attempt >= 1000 ) throw std::invalid_argument( "scenario: too crowded to place vehicles apart" );
         p = draw( k );
      }
      add_vehicle( out, p, spec.safety_radius );
   }
   return out;
}

}   // namespace fecbf
