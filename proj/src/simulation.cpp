#include "fecbf/simulation.hpp"

#include "fecbf/compatibility.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fecbf {

SnapshotBuffer::SnapshotBuffer( std::vector<UavState> initial, double horizon )
   : initial_( std::move( initial ) )
   , horizon_( horizon )
{
}

void SnapshotBuffer::push( double t, std::vector<UavState> states )
{
   if( !frames_.empty() && !( t > frames_.back().time ) )
      throw std::invalid_argument( "SnapshotBuffer: times must increase" );
   frames_.push_back( { t, std::move( states ) } );
   // keep the newest frame that is at least horizon old, drop anything older
   while( frames_.size() > 1 && frames_[1].time <= t - horizon_ + 1e-9 ) frames_.pop_front();
}

const SnapshotBuffer::Frame* SnapshotBuffer::latest_at_or_before( double t ) const
{
   for( auto it = frames_.rbegin(); it != frames_.rend(); ++it )
      if( it->time <= t + 1e-9 ) return &*it;
   return nullptr;
}

DelayedView delayed_snapshot( const SnapshotBuffer& buffer, double t, double tau )
{
   if( const auto* frame = buffer.latest_at_or_before( t - tau ) ) return { frame->time, &frame->states };
   return { 0.0, &buffer.initial() };
}

int TrialResult::reached_count() const
{
   int count = 0;
   for( const auto& u : uavs ) count += u.reached;
   return count;
}

int TrialResult::collided_count() const
{
   int count = 0;
   for( const auto& u : uavs ) count += u.collided;
   return count;
}

int TrialResult::timed_out_count() const
{
   return static_cast<int>( uavs.size() ) - reached_count() - collided_count();
}

int TrialResult::total_infeasible() const
{
   int count = 0;
   for( const auto& u : uavs ) count += u.infeasible_steps;
   return count;
}

namespace {

using Clock = std::chrono::steady_clock;

// Removes collided pairs and arrived vehicles and tracks pairwise barrier minima.
void bookkeeping( const Scenario& scenario, const ScenarioSpec& spec, const SafetyParams& params,
                  const std::vector<UavState>& states, std::vector<char>& active, TrialResult& result, double t )
{
   const int n = static_cast<int>( states.size() );
   std::vector<Eigen::Vector3d> virt( n );
   for( int i = 0; i < n; i++ )
      if( active[i] ) virt[i] = virtual_state( states[i], params );

   std::vector<char> hit( n, 0 );
   for( int i = 0; i < n; i++ )
   {
      if( !active[i] ) continue;
      for( int j = i + 1; j < n; j++ )
      {
         if( !active[j] ) continue;
         const double d = scenario.limits[i].safety_radius + scenario.limits[j].safety_radius +
                          params.zeta * ( states[i].speed + states[j].speed );
         const double h = ( virt[i] - virt[j] ).squaredNorm() - d * d;
         double& slot = result.pair_min_h( i, j );
         if( h < slot )
         {
            slot = h;
            result.pair_min_h( j, i ) = h;
         }
         const double sep = scenario.limits[i].safety_radius + scenario.limits[j].safety_radius;
         if( ( states[i].position - states[j].position ).norm() < sep ) hit[i] = hit[j] = 1;
      }
   }
   for( int i = 0; i < n; i++ )
   {
      if( !active[i] ) continue;
      if( hit[i] )
      {
         result.uavs[i].collided = true;
         result.uavs[i].collision_time = t;
         active[i] = 0;
      }
      else if( ( states[i].position - scenario.goals[i] ).norm() <= spec.arrival_tol )
      {
         result.uavs[i].reached = true;
         result.uavs[i].arrival_time = t;
         active[i] = 0;
      }
   }
}

void centralized_step( const Scenario& scenario, const ControllerConfig& controller, const SafetyParams& params,
                       const std::vector<UavState>& states, const std::vector<int>& ids,
                       const std::vector<std::optional<ControlInput>>& last_feasible,
                       std::vector<ControlDecision>& decisions )
{
   const auto start = Clock::now();
   const int m = static_cast<int>( ids.size() );
   std::vector<ControlDecision> out( m );
   if( m == 1 )
   {
      const int i = ids[0];
      out[0].input = nominal_input( states[i], scenario.goals[i], scenario.limits[i], controller.gains );
   }
   else
   {
      // The coordinator sees the exact joint state; delay does not apply.
      std::vector<UavState> joint_states;
      std::vector<UavLimits> joint_limits;
      Eigen::VectorXd u_nominal( 3 * m );
      for( int k = 0; k < m; k++ )
      {
         const int i = ids[k];
         joint_states.push_back( states[i] );
         joint_limits.push_back( scenario.limits[i] );
         u_nominal.segment<3>( 3 * k ) =
            nominal_input( states[i], scenario.goals[i], scenario.limits[i], controller.gains ).as_vector();
      }
      const QpOutcome qp =
         solve_centralized_qp( joint_states, joint_limits, params, u_nominal, { controller.qp_max_iterations, 1e-9 } );
      for( int k = 0; k < m; k++ )
      {
         const int i = ids[k];
         out[k].status = qp.status;
         if( qp.status == QpStatus::Optimal )
            out[k].input = ControlInput::from_vector( qp.solution->segment<3>( 3 * k ) );
         else
         {
            out[k].feasible = false;
            out[k].input = fallback_input( last_feasible[i], scenario.limits[i], controller.fallback );
         }
      }
   }
   const double share = std::chrono::duration<double>( Clock::now() - start ).count() / m;
   for( int k = 0; k < m; k++ )
   {
      out[k].solve_time = share;
      decisions[ids[k]] = out[k];
   }
}

}   // namespace

TrialResult run_trial( const Scenario& scenario, const ScenarioSpec& spec, const ControllerConfig& controller,
                       const SafetyParams& params, const TrialOptions& options )
{
   spec.validate( true );
   controller.validate();
   params.validate();
   const int n = static_cast<int>( scenario.states.size() );
   if( n == 0 || scenario.limits.size() != scenario.states.size() || scenario.goals.size() != scenario.states.size() )
      throw std::invalid_argument( "run_trial: inconsistent scenario" );

   TrialResult result;
   result.seed = spec.seed;
   result.uavs.assign( n, {} );
   result.pair_min_h = Eigen::MatrixXd::Constant( n, n, std::numeric_limits<double>::infinity() );

   std::vector<UavState> states = scenario.states;
   std::vector<char> active( n, 1 );
   std::vector<std::optional<ControlInput>> last_feasible( n );
   std::vector<NeighborHistory> histories( n, NeighborHistory( std::max<std::size_t>( 2, options.history_length ) ) );
   std::vector<double> history_time( n, -std::numeric_limits<double>::infinity() );
   SnapshotBuffer buffer( scenario.states, spec.delay );
   std::vector<ControlDecision> decisions( n );

   const long max_steps = std::lround( spec.t_max / spec.dt );
   long k = 0;
   for( ;; k++ )
   {
      const double t = k * spec.dt;
      bookkeeping( scenario, spec, params, states, active, result, t );

      std::vector<int> ids;
      for( int i = 0; i < n; i++ )
         if( active[i] ) ids.push_back( i );
      if( ids.empty() || k >= max_steps ) break;

      buffer.push( t, states );
      const DelayedView view = delayed_snapshot( buffer, t, spec.delay );
      const std::vector<UavState>& observed = *view.states;
      for( int j : ids )
         if( view.time > history_time[j] )
         {
            histories[j].push( view.time, observed[j] );
            history_time[j] = view.time;
         }

      const int m = static_cast<int>( ids.size() );
      if( controller.kind == ControllerKind::Centralized )
         centralized_step( scenario, controller, params, states, ids, last_feasible, decisions );
      else
      {
#pragma omp parallel for schedule( dynamic, 1 ) if( options.parallel )
         for( int a = 0; a < m; a++ )
         {
            const int i = ids[a];
            std::vector<Neighbor> neighbors;
            neighbors.reserve( m - 1 );
            for( int j : ids )
               if( j != i ) neighbors.push_back( { observed[j], &histories[j], scenario.limits[j] } );
            decisions[i] = decentralized_control( states[i], scenario.goals[i], neighbors, controller, params,
                                                  scenario.limits[i], last_feasible[i] );
         }
      }

      for( int i : ids )
      {
         const ControlDecision& dec = decisions[i];
         UavOutcome& out = result.uavs[i];
         out.decisions++;
         out.solve_time_total += dec.solve_time;
         out.sc_omitted += dec.sc_omitted;
         if( dec.feasible )
            last_feasible[i] = dec.input;
         else
         {
            out.infeasible_steps++;
            if( dec.status == QpStatus::IterLimit ) out.iter_limit_steps++;
         }
         if( options.record_trajectory ) result.trajectory.push_back( { t, i, states[i], dec.input, dec.feasible } );
         states[i] = step( states[i], dec.input, scenario.limits[i], spec.dt );
      }
   }
   result.steps = static_cast<int>( k );
   result.end_time = k * spec.dt;
   result.final_states = std::move( states );
   result.final_active = std::move( active );
   return result;
}

}   // namespace fecbf
