#include "fecbf/controllers.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace fecbf {

const char* to_string( ControllerKind kind )
{
   switch( kind )
   {
   case ControllerKind::Fecbf: return "FECBF";
   case ControllerKind::Drcbf: return "DRCBF";
   case ControllerKind::Vocbf: return "VOCBF";
   case ControllerKind::Centralized: return "Centralized";
   }
   return "?";
}

ControllerKind parse_controller_kind( const std::string& text )
{
   std::string lower = text;
   std::transform( lower.begin(), lower.end(), lower.begin(), []( unsigned char c ) { return std::tolower( c ); } );
   if( lower == "fecbf" ) return ControllerKind::Fecbf;
   if( lower == "drcbf" ) return ControllerKind::Drcbf;
   if( lower == "vocbf" ) return ControllerKind::Vocbf;
   if( lower == "centralized" ) return ControllerKind::Centralized;
   throw std::invalid_argument( "unknown controller kind '" + text + "'" );
}

void ControllerConfig::validate() const
{
   if( !( lambda > 0 ) ) throw std::invalid_argument( "controller: lambda must be positive" );
   if( !( beta > 0 && beta < M_PI / 2 ) ) throw std::invalid_argument( "controller: beta must lie in (0, pi/2)" );
   if( !( neighbor_radius > 0 ) ) throw std::invalid_argument( "controller: neighbor_radius must be positive" );
   if( !( u_tol_fraction >= 0 ) ) throw std::invalid_argument( "controller: u_tol_fraction must be non-negative" );
   if( !( axis_deadband >= 0 && axis_deadband <= M_PI / 2 ) )
      throw std::invalid_argument( "controller: axis_deadband must lie in [0, pi/2]" );
   if( !( den_eps > 0 ) ) throw std::invalid_argument( "controller: den_eps must be positive" );
   if( !( dt > 0 ) ) throw std::invalid_argument( "controller: dt must be positive" );
   if( !( vo_gain >= 0 ) ) throw std::invalid_argument( "controller: vo_gain must be non-negative" );
   if( qp_max_iterations < 1 ) throw std::invalid_argument( "controller: qp_max_iterations must be positive" );
}

ControlInput nominal_input( const UavState& state, const Eigen::Vector3d& goal, const UavLimits& limits,
                            const NominalGains& gains )
{
   const Eigen::Vector3d los = goal - state.position;
   const double yaw_des = std::atan2( los.y(), los.x() );
   const double pitch_des =
      std::clamp( std::atan2( los.z(), std::hypot( los.x(), los.y() ) ), limits.pitch_min, limits.pitch_max );

   // Slow down when the goal sits inside the current turning circle, otherwise
   // the vehicle can orbit it forever. rho is the radius of the circle tangent
   // to the velocity that passes through the goal.
   double v_des = limits.v_max;
   const double dist = los.norm();
   const Eigen::Vector3d heading = velocity_vector( state ) / state.speed;
   const double sin_off = heading.cross( los ).norm() / std::max( dist, 1e-12 );
   const double turn_radius = state.speed / limits.yaw_rate_max;
   if( dist > 0 && ( heading.dot( los ) < 0 || dist < 2 * turn_radius * sin_off ) ) v_des = limits.v_min;

   const ControlInput raw { gains.k_speed * ( v_des - state.speed ), gains.k_pitch * ( pitch_des - state.pitch ),
                            gains.k_yaw * wrap_pi( yaw_des - state.yaw ) };
   return clamp_input( raw, limits );
}

ControlInput fallback_input( const std::optional<ControlInput>& last_feasible, const UavLimits& limits,
                             FallbackMode mode )
{
   if( mode == FallbackMode::HoldLast && last_feasible ) return *last_feasible;
   return { limits.a_min, 0.0, 0.0 };
}

namespace {

using Clock = std::chrono::steady_clock;

bool in_range( const UavState& self, const Neighbor& other, double radius )
{
   return std::isinf( radius ) || ( other.state.position - self.position ).norm() <= radius;
}

// Rows of the input QP accumulated before the slack columns are known.
struct RowBuilder
{
   std::vector<Eigen::Vector3d> a;
   std::vector<double> b;
   std::vector<int> slack;   // -1 for hard rows

   void add( const Eigen::Vector3d& row, double rhs, int slack_index = -1 )
   {
      a.push_back( row );
      b.push_back( rhs );
      slack.push_back( slack_index );
   }

   void reserve( std::size_t count )
   {
      a.reserve( count );
      b.reserve( count );
      slack.reserve( count );
   }
};

bool same_state( const UavState& a, const UavState& b )
{
   return a.position == b.position && a.speed == b.speed && a.pitch == b.pitch && a.yaw == b.yaw;
}

// Kinematics of the neighbors inside the sensing radius.
struct NearSet
{
   std::vector<const Neighbor*> who;
   std::vector<Kinematics> kin;
};

NearSet near_set( const UavState& self, std::span<const Neighbor> neighbors, const ControllerConfig& config,
                  const SafetyParams& params )
{
   NearSet near;
   near.who.reserve( neighbors.size() );
   near.kin.reserve( neighbors.size() );
   for( const Neighbor& other : neighbors )
   {
      if( !in_range( self, other, config.neighbor_radius ) ) continue;
      near.who.push_back( &other );
      near.kin.push_back( kinematics( other.state, params, other.limits.safety_radius ) );
   }
   return near;
}

void add_cbf_rows( RowBuilder& rows, const Kinematics& self, const NearSet& near, const SafetyParams& params )
{
   for( const Kinematics& other : near.kin )
   {
      const PairwiseCbf cbf = pairwise_coefficients( self, other, params );
      rows.add( -cbf.k_ij, cbf.xi / 2 );
   }
}

ControlDecision solve_filter( const RowBuilder& rows, int slack_count, const ControlInput& nominal,
                              const ControllerConfig& config, const UavLimits& limits,
                              const std::optional<ControlInput>& last_feasible, Clock::time_point start )
{
   const int dim = 3 + slack_count;
   const int m = static_cast<int>( rows.a.size() );
   const double inf = std::numeric_limits<double>::infinity();

   QpProblem problem;
   problem.dim = dim;
   problem.target = Eigen::VectorXd::Zero( dim );
   problem.target.head<3>() = nominal.as_vector();
   problem.weights = Eigen::VectorXd::Constant( dim, config.lambda );
   problem.weights.head<3>().setOnes();
   problem.lower = Eigen::VectorXd::Zero( dim );
   problem.upper = Eigen::VectorXd::Constant( dim, inf );
   problem.lower.head<3>() = limits.input_lower();
   problem.upper.head<3>() = limits.input_upper();
   problem.ineq_A = Eigen::MatrixXd::Zero( m, dim );
   problem.ineq_b.resize( m );
   for( int r = 0; r < m; r++ )
   {
      problem.ineq_A.block<1, 3>( r, 0 ) = rows.a[r].transpose();
      if( rows.slack[r] >= 0 ) problem.ineq_A( r, 3 + rows.slack[r] ) = -1.0;
      problem.ineq_b( r ) = rows.b[r];
   }

   const QpOutcome outcome = solve( problem, { config.qp_max_iterations, 1e-9 } );

   ControlDecision decision;
   decision.status = outcome.status;
   if( outcome.status == QpStatus::Optimal )
   {
      const Eigen::VectorXd& x = *outcome.solution;
      decision.input = ControlInput::from_vector( x.head<3>() );
      decision.slack_norm = slack_count > 0 ? x.tail( slack_count ).norm() : 0.0;
   }
   else
   {
      decision.feasible = false;
      decision.input = fallback_input( last_feasible, limits, config.fallback );
   }
   decision.solve_time = std::chrono::duration<double>( Clock::now() - start ).count();
   return decision;
}

}   // namespace

ControlDecision fecbf_control( const UavState& self, const Eigen::Vector3d& goal, std::span<const Neighbor> neighbors,
                               const ControllerConfig& config, const SafetyParams& params, const UavLimits& limits,
                               const std::optional<ControlInput>& last_feasible )
{
   const auto start = Clock::now();
   const ControlInput nominal = nominal_input( self, goal, limits, config.gains );
   const Kinematics own = kinematics( self, params, limits.safety_radius );
   const NearSet near = near_set( self, neighbors, config, params );

   RowBuilder rows;
   rows.reserve( 2 * near.kin.size() );
   add_cbf_rows( rows, own, near, params );

   const Eigen::Vector3d axis = cone_axis( self, goal, config.axis_deadband );
   const Eigen::Vector3d axis_world = normalized_frame( self ) * axis;
   int slack_count = 0;
   int omitted = 0;
   for( std::size_t k = 0; k < near.kin.size(); k++ )
   {
      const Neighbor& other = *near.who[k];
      InputBox box { other.limits.input_lower(), other.limits.input_upper() };
      Eigen::Vector3d sdot_hat;
      if( other.history && !other.history->empty() )
      {
         box = admissible_input_box( *other.history, other.limits, config.u_tol_fraction );
         const UavState& latest = other.history->latest().state;
         sdot_hat = same_state( latest, other.state )
                       ? worst_case_sdot( box, near.kin[k], axis_world, params )
                       : worst_case_sdot( box, kinematics( latest, params ), axis_world, params );
      }
      else
         sdot_hat = worst_case_sdot( box, near.kin[k], axis_world, params );
      const auto sc = sc_coefficients( own, near.kin[k], sdot_hat, axis, axis_world, params, config.beta, config.den_eps );
      if( !sc )
      {
         omitted++;
         continue;
      }
      rows.add( sc->l, sc->delta, slack_count++ );
   }

   ControlDecision decision = solve_filter( rows, slack_count, nominal, config, limits, last_feasible, start );
   decision.sc_omitted = omitted;
   return decision;
}

ControlDecision drcbf_control( const UavState& self, const Eigen::Vector3d& goal, std::span<const Neighbor> neighbors,
                               const ControllerConfig& config, const SafetyParams& params, const UavLimits& limits,
                               const std::optional<ControlInput>& last_feasible )
{
   const auto start = Clock::now();
   const ControlInput nominal = nominal_input( self, goal, limits, config.gains );
   const NearSet near = near_set( self, neighbors, config, params );
   RowBuilder rows;
   add_cbf_rows( rows, kinematics( self, params, limits.safety_radius ), near, params );
   return solve_filter( rows, 0, nominal, config, limits, last_feasible, start );
}

std::optional<VelocityObstacleRow> velocity_obstacle_row( const UavState& self, const UavLimits& limits_i,
                                                          const UavState& other, const UavLimits& limits_j, double dt,
                                                          double gain )
{
   const Eigen::Vector3d offset = other.position - self.position;
   const double dist = offset.norm();
   const double combined = limits_i.safety_radius + limits_j.safety_radius;
   const Eigen::Vector3d v_rel = velocity_vector( self ) - velocity_vector( other );

   Eigen::Vector3d normal;
   if( dist <= combined )
   {
      // Overlapping: the cone fills a half-space, keep the separation rate up.
      normal = dist > 0 ? Eigen::Vector3d( -offset / dist ) : Eigen::Vector3d( 0, 0, 1 );
   }
   else
   {
      const Eigen::Vector3d axis = offset / dist;
      const double half_angle = std::asin( std::min( 1.0, combined / dist ) );
      const double along = v_rel.dot( axis );
      const Eigen::Vector3d perp = v_rel - along * axis;
      const double speed = v_rel.norm();
      if( speed == 0.0 || along <= 0.0 || std::atan2( perp.norm(), along ) >= half_angle ) return std::nullopt;

      Eigen::Vector3d lateral;
      if( perp.norm() > 1e-9 * speed )
         lateral = perp.normalized();
      else
      {
         // On the axis every face is equally near; prefer the one tilted upward.
         lateral = Eigen::Vector3d::UnitZ() - axis.z() * axis;
         if( lateral.norm() < 1e-9 ) lateral = Eigen::Vector3d::UnitX() - axis.x() * axis;
         lateral.normalize();
      }
      normal = -std::sin( half_angle ) * axis + std::cos( half_angle ) * lateral;
   }

   VelocityObstacleRow row;
   row.normal = normal;
   row.depth = normal.dot( v_rel );
   // n^T (v_rel + dt W u) >= (1 - gain dt) min(depth, 0)
   row.a = -dt * kinematic_jacobian( self ).transpose() * normal;
   row.b = row.depth - ( 1.0 - gain * dt ) * std::min( row.depth, 0.0 );
   return row;
}

ControlDecision vocbf_control( const UavState& self, const Eigen::Vector3d& goal, std::span<const Neighbor> neighbors,
                               const ControllerConfig& config, const SafetyParams& params, const UavLimits& limits,
                               const std::optional<ControlInput>& last_feasible )
{
   const auto start = Clock::now();
   const ControlInput nominal = nominal_input( self, goal, limits, config.gains );
   const NearSet near = near_set( self, neighbors, config, params );
   RowBuilder rows;
   add_cbf_rows( rows, kinematics( self, params, limits.safety_radius ), near, params );
   for( const Neighbor* other_ptr : near.who )
   {
      const Neighbor& other = *other_ptr;
      if( auto vo = velocity_obstacle_row( self, limits, other.state, other.limits, config.dt, config.vo_gain ) )
         rows.add( vo->a, vo->b );
   }
   return solve_filter( rows, 0, nominal, config, limits, last_feasible, start );
}

ControlDecision decentralized_control( const UavState& self, const Eigen::Vector3d& goal,
                                       std::span<const Neighbor> neighbors, const ControllerConfig& config,
                                       const SafetyParams& params, const UavLimits& limits,
                                       const std::optional<ControlInput>& last_feasible )
{
   switch( config.kind )
   {
   case ControllerKind::Fecbf: return fecbf_control( self, goal, neighbors, config, params, limits, last_feasible );
   case ControllerKind::Drcbf: return drcbf_control( self, goal, neighbors, config, params, limits, last_feasible );
   case ControllerKind::Vocbf: return vocbf_control( self, goal, neighbors, config, params, limits, last_feasible );
   case ControllerKind::Centralized: break;
   }
   throw std::invalid_argument( "decentralized_control: centralized controller needs the joint problem" );
}

}   // namespace fecbf
