#include "fecbf/metrics.hpp"
#include "fecbf/scenario.hpp"
#include "fecbf/simulation.hpp"

#include "../support/generators.hpp"

#include <gtest/gtest.h>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <sstream>

using namespace fecbf;

namespace {

ScenarioSpec spec_of( ScenarioKind kind, int n, std::uint64_t seed = 1 )
{
   ScenarioSpec s;
   s.kind = kind;
   s.n = n;
   s.seed = seed;
   return s;
}

ControllerConfig controller_of( ControllerKind kind )
{
   ControllerConfig c;
   c.kind = kind;
   return c;
}

UavState flying( Eigen::Vector3d p, double yaw, double speed )
{
   UavState s;
   s.position = p;
   s.yaw = yaw;
   s.speed = speed;
   return s;
}

bool same_bits( const UavState& a, const UavState& b )
{
   return a.position == b.position && a.speed == b.speed && a.pitch == b.pitch && a.yaw == b.yaw;
}

}   // namespace

TEST( Scenario, ConvergenceStartsOnSphereAroundMeetingPoint )
{
   const Scenario sc = generate_scenario( spec_of( ScenarioKind::Convergence, 50, 3 ) );
   ASSERT_EQ( sc.states.size(), 50u );
   for( std::size_t i = 0; i < sc.states.size(); i++ )
   {
      const double v_max = sc.limits[i].v_max;
      EXPECT_GE( v_max, 2.0 );
      EXPECT_LE( v_max, 3.0 );
      EXPECT_EQ( sc.states[i].speed, v_max );
      EXPECT_NEAR( ( sc.states[i].position - kConvergencePoint ).norm(), 150 * v_max, 1e-9 );
      // heading straight at the meeting point
      const Eigen::Vector3d to_centre = ( kConvergencePoint - sc.states[i].position ).normalized();
      EXPECT_NEAR( to_centre.dot( velocity_vector( sc.states[i] ) / v_max ), 1.0, 1e-12 );
      EXPECT_NEAR( ( sc.goals[i] - sc.states[i].position ).norm(), 300 * v_max, 1e-9 );
   }
}

TEST( Scenario, DualCircleRings )
{
   const Scenario sc = generate_scenario( spec_of( ScenarioKind::DualCircle, 50, 4 ) );
   int inner = 0, outer = 0;
   for( std::size_t i = 0; i < sc.states.size(); i++ )
   {
      const Eigen::Vector3d rel = sc.states[i].position - kArenaCentre;
      EXPECT_EQ( sc.states[i].position.z(), 200.0 );
      const double r = rel.norm();
      const double radial = rel.normalized().dot( velocity_vector( sc.states[i] ) ) / sc.states[i].speed;
      if( std::abs( r - 400 ) < 1e-9 )
      {
         inner++;
         EXPECT_NEAR( radial, 1.0, 1e-12 );
      }
      else if( std::abs( r - 600 ) < 1e-9 )
      {
         outer++;
         EXPECT_NEAR( radial, -1.0, 1e-12 );
      }
      EXPECT_NEAR( ( sc.goals[i] - sc.states[i].position ).norm(), 300 * sc.limits[i].v_max, 1e-9 );
   }
   EXPECT_EQ( inner, 25 );
   EXPECT_EQ( outer, 25 );
}

TEST( Scenario, HeadOnGroupsFaceEachOther )
{
   const Scenario sc = generate_scenario( spec_of( ScenarioKind::HeadOn, 20, 5 ) );
   double lo = INFINITY, hi = -INFINITY;
   int west = 0;
   for( std::size_t i = 0; i < sc.states.size(); i++ )
   {
      const UavState& s = sc.states[i];
      lo = std::min( lo, s.position.y() );
      hi = std::max( hi, s.position.y() );
      const double vx = velocity_vector( s ).x() / s.speed;
      if( s.position.x() < kArenaCentre.x() )
      {
         west++;
         EXPECT_NEAR( vx, 1.0, 1e-12 );
      }
      else
         EXPECT_NEAR( vx, -1.0, 1e-12 );
      EXPECT_NEAR( std::abs( s.position.x() - kArenaCentre.x() ), 150 * sc.limits[i].v_max, 1e-9 );
   }
   EXPECT_EQ( west, 10 );
   EXPECT_LE( hi - lo, 200.0 );
}

TEST( Scenario, StartsInsideSafeSet )
{
   const SafetyParams params;
   for( ScenarioKind kind : { ScenarioKind::Convergence, ScenarioKind::DualCircle, ScenarioKind::HeadOn } )
      for( std::uint64_t seed = 1; seed <= 20; seed++ )
      {
         const Scenario sc = generate_scenario( spec_of( kind, 50, seed ) );
         for( std::size_t i = 0; i < sc.states.size(); i++ )
            for( std::size_t j = i + 1; j < sc.states.size(); j++ )
            {
               const double d = sc.limits[i].safety_radius + sc.limits[j].safety_radius +
                                params.zeta * ( sc.states[i].speed + sc.states[j].speed );
               const double gap = ( virtual_state( sc.states[i], params ) - virtual_state( sc.states[j], params ) ).norm();
               ASSERT_GT( gap, d ) << to_string( kind ) << " seed " << seed << " pair " << i << "," << j;
            }
      }
}

TEST( Scenario, ValidationAndParsing )
{
   EXPECT_THROW( generate_scenario( spec_of( ScenarioKind::DualCircle, 7 ) ), std::invalid_argument );
   EXPECT_THROW( generate_scenario( spec_of( ScenarioKind::HeadOn, 9 ) ), std::invalid_argument );
   EXPECT_NO_THROW( generate_scenario( spec_of( ScenarioKind::Convergence, 7 ) ) );
   EXPECT_THROW( spec_of( ScenarioKind::Convergence, 1 ).validate(), std::invalid_argument );
   EXPECT_EQ( parse_scenario_kind( "Dual-Circle" ), ScenarioKind::DualCircle );
   EXPECT_EQ( parse_scenario_kind( "head_on" ), ScenarioKind::HeadOn );
   EXPECT_THROW( parse_scenario_kind( "swirl" ), std::invalid_argument );
}

TEST( Scenario, DeterministicInSeed )
{
   for( ScenarioKind kind : { ScenarioKind::Convergence, ScenarioKind::DualCircle, ScenarioKind::HeadOn } )
   {
      const Scenario a = generate_scenario( spec_of( kind, 30, 11 ) );
      const Scenario b = generate_scenario( spec_of( kind, 30, 11 ) );
      const Scenario c = generate_scenario( spec_of( kind, 30, 12 ) );
      bool differs = false;
      for( std::size_t i = 0; i < a.states.size(); i++ )
      {
         EXPECT_TRUE( same_bits( a.states[i], b.states[i] ) );
         EXPECT_EQ( a.goals[i], b.goals[i] );
         EXPECT_EQ( a.limits[i].v_max, b.limits[i].v_max );
         differs = differs || !same_bits( a.states[i], c.states[i] );
      }
      EXPECT_TRUE( differs );
   }
}

TEST( DelayedSnapshot, PicksFrameAtOrBeforeDelayedTime )
{
   std::vector<UavState> initial { flying( { 0, 0, 0 }, 0, 2 ) };
   SnapshotBuffer buffer( initial, 1.0 );
   for( int k = 0; k <= 30; k++ ) buffer.push( k * 0.1, { flying( { double( k ), 0, 0 }, 0, 2 ) } );
   const double t = 3.0;
   EXPECT_EQ( ( *delayed_snapshot( buffer, t, 0.0 ).states )[0].position.x(), 30.0 );
   const DelayedView one = delayed_snapshot( buffer, t, 1.0 );
   EXPECT_EQ( ( *one.states )[0].position.x(), 20.0 );
   EXPECT_NEAR( one.time, 2.0, 1e-12 );
   // older frames were dropped but the startup rule still applies
   const DelayedView early = delayed_snapshot( buffer, 0.5, 1.0 );
   EXPECT_EQ( early.states, &buffer.initial() );
   EXPECT_EQ( early.time, 0.0 );
   EXPECT_THROW( buffer.push( 3.0, initial ), std::invalid_argument );
}

TEST( RunTrial, LoneVehicleArrivesOnSchedule )
{
   ScenarioSpec spec = spec_of( ScenarioKind::Convergence, 1, 2 );
   for( ControllerKind kind : { ControllerKind::Fecbf, ControllerKind::Drcbf, ControllerKind::Vocbf,
                                ControllerKind::Centralized } )
   {
      const TrialResult r = run_trial( spec, controller_of( kind ), {} );
      ASSERT_EQ( r.uavs.size(), 1u );
      EXPECT_TRUE( r.uavs[0].reached );
      EXPECT_EQ( r.uavs[0].infeasible_steps, 0 );
      ASSERT_TRUE( r.uavs[0].arrival_time );
      EXPECT_NEAR( *r.uavs[0].arrival_time, 300.0, 3.0 );
   }
}

TEST( RunTrial, OverlappingPairCollidesImmediately )
{
   Scenario sc;
   sc.states = { flying( { 0, 0, 0 }, 0, 2 ), flying( { 1, 0, 0 }, M_PI, 2 ) };
   sc.limits = { UavLimits::with_max_speed( 2.5 ), UavLimits::with_max_speed( 2.5 ) };
   sc.goals = { Eigen::Vector3d( 600, 0, 0 ), Eigen::Vector3d( -600, 0, 0 ) };
   const TrialResult r = run_trial( sc, spec_of( ScenarioKind::Convergence, 2 ), controller_of( ControllerKind::Fecbf ), {} );
   for( const UavOutcome& u : r.uavs )
   {
      EXPECT_TRUE( u.collided );
      EXPECT_FALSE( u.reached );
      ASSERT_TRUE( u.collision_time );
      EXPECT_EQ( *u.collision_time, 0.0 );
      EXPECT_EQ( u.decisions, 0 );
   }
   EXPECT_EQ( r.steps, 0 );
}

TEST( RunTrial, DelayOfFrozenNeighborsIsInvisible )
{
   // Snapshots that never change look the same at any delay, so the decision is too.
   const SafetyParams params;
   const UavLimits lim = UavLimits::with_max_speed( 2.5 );
   const std::vector<UavState> world { flying( { 0, 0, 0 }, 0, 2 ), flying( { 30, 4, 1 }, M_PI, 2 ) };
   SnapshotBuffer buffer( world, 1.0 );
   buffer.push( 0.0, world );
   buffer.push( 0.1, world );
   NeighborHistory history;
   history.push( 0.0, world[1] );
   history.push( 0.1, world[1] );
   for( ControllerKind kind : { ControllerKind::Fecbf, ControllerKind::Drcbf, ControllerKind::Vocbf } )
   {
      ControlInput out[2];
      int slot = 0;
      for( double tau : { 0.0, 0.1 } )
      {
         const DelayedView view = delayed_snapshot( buffer, 0.1, tau );
         const std::vector<Neighbor> nb { { ( *view.states )[1], &history, lim } };
         out[slot++] = decentralized_control( world[0], { 500, 0, 0 }, nb, controller_of( kind ), params, lim ).input;
      }
      EXPECT_EQ( out[0].as_vector(), out[1].as_vector() ) << to_string( kind );
   }
}

TEST( RunTrial, AccountingIsConserved )
{
   for( ControllerKind kind : { ControllerKind::Fecbf, ControllerKind::Drcbf, ControllerKind::Vocbf,
                                ControllerKind::Centralized } )
      for( ScenarioKind sk : { ScenarioKind::Convergence, ScenarioKind::HeadOn } )
      {
         ScenarioSpec spec = spec_of( sk, 6, 9 );
         spec.t_max = 330;
         const TrialResult r = run_trial( spec, controller_of( kind ), {} );
         EXPECT_EQ( r.reached_count() + r.collided_count() + r.timed_out_count(), 6 );
         for( const UavOutcome& u : r.uavs )
         {
            EXPECT_FALSE( u.reached && u.collided );
            EXPECT_EQ( u.reached, u.arrival_time.has_value() );
            EXPECT_EQ( u.collided, u.collision_time.has_value() );
            EXPECT_LE( u.iter_limit_steps, u.infeasible_steps );
            EXPECT_LE( u.infeasible_steps, u.decisions );
         }
      }
}

TEST( RunTrial, CleanRunsStayCollisionFree )
{
   for( std::uint64_t seed = 1; seed <= 3; seed++ )
   {
      ScenarioSpec spec = spec_of( ScenarioKind::HeadOn, 8, seed );
      spec.t_max = 400;
      const TrialResult r = run_trial( spec, controller_of( ControllerKind::Fecbf ), {} );
      for( const UavOutcome& u : r.uavs )
         if( u.always_feasible() ) EXPECT_FALSE( u.collided ) << "seed " << seed;
   }
}

TEST( RunTrial, ParallelStepsMatchSerialBitForBit )
{
   ScenarioSpec spec = spec_of( ScenarioKind::DualCircle, 12, 4 );
   spec.t_max = 120;
   spec.delay = 0.3;
#ifdef _OPENMP
   // oversubscribe on purpose so the threads really interleave even on one core
   const int saved = omp_get_max_threads();
   omp_set_num_threads( 4 );
#endif
   for( ControllerKind kind : { ControllerKind::Fecbf, ControllerKind::Vocbf } )
   {
      TrialOptions serial, parallel;
      parallel.parallel = true;
      serial.record_trajectory = parallel.record_trajectory = true;
      const TrialResult a = run_trial( spec, controller_of( kind ), {}, serial );
      const TrialResult b = run_trial( spec, controller_of( kind ), {}, parallel );
      ASSERT_EQ( a.trajectory.size(), b.trajectory.size() );
      for( std::size_t k = 0; k < a.trajectory.size(); k++ )
      {
         ASSERT_TRUE( same_bits( a.trajectory[k].state, b.trajectory[k].state ) ) << k;
         ASSERT_EQ( a.trajectory[k].input.as_vector(), b.trajectory[k].input.as_vector() ) << k;
      }
      EXPECT_EQ( a.pair_min_h, b.pair_min_h );
   }
#ifdef _OPENMP
   omp_set_num_threads( saved );
#endif
}

TEST( Metrics, SingleTrialTableMatchesTrial )
{
   ScenarioSpec spec = spec_of( ScenarioKind::HeadOn, 6, 3 );
   const TrialResult r = run_trial( spec, controller_of( ControllerKind::Drcbf ), {} );
   const MetricsTable t = aggregate( { r }, "DRCBF" );
   EXPECT_EQ( t.trials, 1 );
   EXPECT_DOUBLE_EQ( t.sr, r.reached_count() / 6.0 );
   EXPECT_DOUBLE_EQ( t.ic_mean, r.total_infeasible() / 6.0 );
   double at = 0;
   int arrivals = 0;
   for( const UavOutcome& u : r.uavs )
      if( u.arrival_time )
      {
         at += *u.arrival_time;
         arrivals++;
      }
   ASSERT_GT( arrivals, 0 );
   ASSERT_TRUE( t.at_mean );
   EXPECT_NEAR( *t.at_mean, at / arrivals, 1e-9 );
   const TrialSummary s = summarize( r );
   EXPECT_EQ( s.reached, r.reached_count() );
   EXPECT_EQ( s.uavs, 6 );
   EXPECT_EQ( t.per_trial.size(), 1u );
}

TEST( Metrics, NoArrivalsMeansNoArrivalTime )
{
   ScenarioSpec spec = spec_of( ScenarioKind::HeadOn, 2, 3 );
   spec.t_max = 5;
   const MetricsTable t = aggregate( { run_trial( spec, controller_of( ControllerKind::Fecbf ), {} ) }, "x" );
   EXPECT_FALSE( t.at_mean );
   EXPECT_EQ( t.sr, 0.0 );
   EXPECT_TRUE( to_json( t, false )["at_mean"].is_null() );
}

TEST( Metrics, TableAndCsvLayout )
{
   ScenarioSpec spec = spec_of( ScenarioKind::HeadOn, 2, 3 );
   spec.t_max = 1;
   TrialOptions opt;
   opt.record_trajectory = true;
   const TrialResult r = run_trial( spec, controller_of( ControllerKind::Fecbf ), {}, opt );
   std::ostringstream csv;
   write_trajectory_csv( csv, r );
   std::istringstream lines( csv.str() );
   std::string header;
   std::getline( lines, header );
   EXPECT_EQ( header, "t,uav_id,x,y,z,v,theta,psi,a,gamma,omega,feasible" );
   int rows = 0;
   for( std::string line; std::getline( lines, line ); ) rows++;
   EXPECT_EQ( rows, 2 * 10 );

   std::ostringstream table;
   write_table( table, { aggregate( { r }, "FECBF" ) } );
   EXPECT_NE( table.str().find( "SR" ), std::string::npos );
   EXPECT_NE( table.str().find( "FECBF" ), std::string::npos );
}

TEST( MonteCarlo, PairedSeedsAndReproducibleJson )
{
   ScenarioSpec spec = spec_of( ScenarioKind::Convergence, 6, 20 );
   spec.t_max = 200;
   MonteCarloOptions opt;
   opt.trials = 3;
   opt.keep_trials = true;
   const std::vector<ControllerConfig> controllers { controller_of( ControllerKind::Fecbf ),
                                                     controller_of( ControllerKind::Drcbf ) };
   const auto first = monte_carlo( spec, controllers, {}, opt );
   ASSERT_EQ( first.size(), 2u );
   for( const BatchResult& b : first )
   {
      ASSERT_EQ( b.trials.size(), 3u );
      for( int t = 0; t < 3; t++ ) EXPECT_EQ( b.trials[t].seed, 20u + t );
      EXPECT_EQ( b.metrics.trials, 3 );
   }
   opt.parallel = false;
   const auto second = monte_carlo( spec, controllers, {}, opt );
   for( std::size_t c = 0; c < first.size(); c++ )
   {
      EXPECT_EQ( to_json( first[c].metrics, false ).dump(), to_json( second[c].metrics, false ).dump() );
      EXPECT_FALSE( to_json( first[c].metrics, false ).contains( "ct_mean_ms" ) );
      EXPECT_TRUE( to_json( first[c].metrics, true ).contains( "ct_mean_ms" ) );
   }
}
