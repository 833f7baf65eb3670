#include "fecbf/metrics.hpp"

#include <cstdio>
#include <iomanip>
#include <ostream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fecbf {

TrialSummary summarize( const TrialResult& trial )
{
   TrialSummary s;
   s.seed = trial.seed;
   s.uavs = static_cast<int>( trial.uavs.size() );
   s.reached = trial.reached_count();
   s.collided = trial.collided_count();
   s.timed_out = trial.timed_out_count();
   s.infeasible_steps = trial.total_infeasible();

   double at_sum = 0.0;
   double ct_sum = 0.0;
   long decisions = 0;
   for( const auto& u : trial.uavs )
   {
      if( u.arrival_time ) at_sum += *u.arrival_time;
      ct_sum += u.solve_time_total;
      decisions += u.decisions;
   }
   if( s.reached > 0 ) s.at_mean = at_sum / s.reached;
   s.ct_mean_ms = decisions > 0 ? 1e3 * ct_sum / decisions : 0.0;
   return s;
}

MetricsTable aggregate( const std::vector<TrialResult>& trials, const std::string& label )
{
   MetricsTable table;
   table.label = label;
   table.trials = static_cast<int>( trials.size() );

   long uavs = 0, reached = 0, infeasible = 0, decisions = 0;
   double at_sum = 0.0, ct_sum = 0.0;
   for( const auto& trial : trials )
   {
      table.per_trial.push_back( summarize( trial ) );
      for( const auto& u : trial.uavs )
      {
         uavs++;
         reached += u.reached;
         infeasible += u.infeasible_steps;
         decisions += u.decisions;
         ct_sum += u.solve_time_total;
         if( u.arrival_time ) at_sum += *u.arrival_time;
      }
   }
   if( uavs > 0 )
   {
      table.sr = static_cast<double>( reached ) / uavs;
      table.ic_mean = static_cast<double>( infeasible ) / uavs;
   }
   if( reached > 0 ) table.at_mean = at_sum / reached;
   table.ct_mean_ms = decisions > 0 ? 1e3 * ct_sum / decisions : 0.0;
   return table;
}

std::vector<BatchResult> monte_carlo( const ScenarioSpec& spec, const std::vector<ControllerConfig>& controllers,
                                      const SafetyParams& params, const MonteCarloOptions& options )
{
   if( options.trials < 1 ) throw std::invalid_argument( "monte_carlo: trials must be at least 1" );
   spec.validate();
   for( const auto& c : controllers ) c.validate();

   const int nc = static_cast<int>( controllers.size() );
   const int nt = options.trials;
   std::vector<std::vector<TrialResult>> results( nc, std::vector<TrialResult>( nt ) );

   std::vector<Scenario> scenarios( nt );
   std::vector<ScenarioSpec> specs( nt, spec );
   for( int t = 0; t < nt; t++ )
   {
      specs[t].seed = spec.seed + static_cast<std::uint64_t>( t );
      scenarios[t] = generate_scenario( specs[t] );
   }

   const int jobs = nc * nt;
#ifdef _OPENMP
   const int threads = options.jobs > 0 ? options.jobs : omp_get_max_threads();
#else
   const int threads = 1;
#endif
#pragma omp parallel for schedule( dynamic, 1 ) num_threads( threads ) if( options.parallel )
   for( int job = 0; job < jobs; job++ )
   {
      const int c = job / nt;
      const int t = job % nt;
      results[c][t] = run_trial( scenarios[t], specs[t], controllers[c], params );
   }
   (void)threads;

   std::vector<BatchResult> out( nc );
   for( int c = 0; c < nc; c++ )
   {
      out[c].controller = controllers[c];
      out[c].metrics = aggregate( results[c], to_string( controllers[c].kind ) );
      if( options.keep_trials ) out[c].trials = std::move( results[c] );
   }
   return out;
}

namespace {

nlohmann::json optional_number( const std::optional<double>& value )
{
   return value ? nlohmann::json( *value ) : nlohmann::json( nullptr );
}

}   // namespace

nlohmann::json to_json( const MetricsTable& table, bool include_timing )
{
   nlohmann::json j;
   j["label"] = table.label;
   j["trials"] = table.trials;
   j["sr"] = table.sr;
   j["ic_mean"] = table.ic_mean;
   j["at_mean"] = optional_number( table.at_mean );
   if( include_timing ) j["ct_mean_ms"] = table.ct_mean_ms;
   nlohmann::json rows = nlohmann::json::array();
   for( const auto& s : table.per_trial )
   {
      nlohmann::json r;
      r["seed"] = s.seed;
      r["uavs"] = s.uavs;
      r["reached"] = s.reached;
      r["collided"] = s.collided;
      r["timed_out"] = s.timed_out;
      r["infeasible_steps"] = s.infeasible_steps;
      r["at_mean"] = optional_number( s.at_mean );
      if( include_timing ) r["ct_mean_ms"] = s.ct_mean_ms;
      rows.push_back( r );
   }
   j["per_trial"] = rows;
   return j;
}

void write_table( std::ostream& os, const std::vector<MetricsTable>& tables )
{
   char line[160];
   std::snprintf( line, sizeof line, "%-12s %8s %10s %10s %10s %7s\n", "controller", "SR[%]", "IC", "AT[s]", "CT[ms]",
                  "trials" );
   os << line;
   for( const auto& t : tables )
   {
      char at[32];
      if( t.at_mean )
         std::snprintf( at, sizeof at, "%.2f", *t.at_mean );
      else
         std::snprintf( at, sizeof at, "-" );
      std::snprintf( line, sizeof line, "%-12s %8.2f %10.2f %10s %10.3f %7d\n", t.label.c_str(), 100.0 * t.sr,
                     t.ic_mean, at, t.ct_mean_ms, t.trials );
      os << line;
   }
}

void write_trajectory_csv( std::ostream& os, const TrialResult& trial )
{
   const auto precision = os.precision();
   os << std::setprecision( 10 );
   os << "t,uav_id,x,y,z,v,theta,psi,a,gamma,omega,feasible\n";
   for( const auto& s : trial.trajectory )
   {
      os << s.t << ',' << s.uav << ',' << s.state.position.x() << ',' << s.state.position.y() << ','
         << s.state.position.z() << ',' << s.state.speed << ',' << s.state.pitch << ',' << s.state.yaw << ','
         << s.input.accel << ',' << s.input.pitch_rate << ',' << s.input.yaw_rate << ',' << ( s.feasible ? 1 : 0 )
         << '\n';
   }
   os.precision( precision );
}

}   // namespace fecbf
