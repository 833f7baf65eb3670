#include "fecbf/compatibility.hpp"
#include "fecbf/config.hpp"
#include "fecbf/metrics.hpp"
#include "fecbf/simulation.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;
using namespace fecbf;

namespace {

struct Overrides
{
   std::string config_path;
   std::optional<std::string> scenario;
   std::optional<int> n;
   std::optional<long long> seed;
   std::optional<int> trials;
   std::optional<double> delay;
   std::optional<double> t_max;
   std::optional<std::string> controllers;
   std::optional<std::string> delays;
   std::optional<double> compat_time;
   std::optional<double> radius;
   std::optional<double> lambda;
   std::optional<double> beta;
   std::optional<std::string> out;
   bool no_trajectory = false;
   bool no_diagnostics = false;
   int jobs = 0;
};

void add_common_flags( CLI::App* cmd, Overrides& o )
{
   cmd->add_option( "-c,--config", o.config_path, "INI configuration file" );
   cmd->add_option( "--scenario", o.scenario, "convergence | dual-circle | head-on" );
   cmd->add_option( "-n,--uavs", o.n, "number of vehicles" );
   cmd->add_option( "--seed", o.seed, "first scenario seed" );
   cmd->add_option( "--trials", o.trials, "Monte-Carlo trials" );
   cmd->add_option( "--delay", o.delay, "communication delay [s]" );
   cmd->add_option( "--t-max", o.t_max, "simulated horizon [s]" );
   cmd->add_option( "--controllers", o.controllers, "comma list: fecbf, drcbf, vocbf, centralized" );
   cmd->add_option( "--delays", o.delays, "comma list of delays for delay-sweep [s]" );
   cmd->add_option( "--compat-time", o.compat_time, "snapshot time for compat [s]" );
   cmd->add_option( "--radius", o.radius, "safety radius [m]" );
   cmd->add_option( "--lambda", o.lambda, "slack weight" );
   cmd->add_option( "--beta", o.beta, "cone half-angle [rad]" );
   cmd->add_option( "-o,--out", o.out, "output directory" );
   cmd->add_flag( "--no-trajectory", o.no_trajectory, "skip the trajectory CSV" );
   cmd->add_flag( "--no-diagnostics", o.no_diagnostics, "skip diagnostic dumps" );
   cmd->add_option( "-j,--jobs", o.jobs, "worker threads (default: all cores)" );
}

RunConfig effective_config( const Overrides& o )
{
   std::ostringstream ini;
   if( !o.config_path.empty() )
   {
      std::ifstream in( o.config_path );
      if( !in ) throw ConfigError( "cannot open config '" + o.config_path + "'" );
      ini << in.rdbuf() << '\n';
   }
   std::istringstream base( ini.str() );
   RunConfig config = parse_config( base );
   if( o.scenario ) config.scenario.kind = parse_scenario_kind( *o.scenario );
   if( o.n ) config.scenario.n = *o.n;
   if( o.seed ) config.scenario.seed = static_cast<std::uint64_t>( *o.seed );
   if( o.trials ) config.trials = *o.trials;
   if( o.delay ) config.scenario.delay = *o.delay;
   if( o.t_max ) config.scenario.t_max = *o.t_max;
   if( o.controllers || o.delays )
   {
      // list flags go through the INI parser so they share its validation
      std::ostringstream lists;
      if( o.controllers ) lists << "[controller]\nkinds = " << *o.controllers << '\n';
      if( o.delays ) lists << "[scenario]\ndelays = " << *o.delays << '\n';
      std::istringstream in( lists.str() );
      const RunConfig parsed = parse_config( in );
      if( o.controllers ) config.controllers = parsed.controllers;
      if( o.delays ) config.delays = parsed.delays;
   }
   if( o.compat_time ) config.compat_time = *o.compat_time;
   if( o.radius ) config.scenario.safety_radius = *o.radius;
   if( o.lambda ) config.controller.lambda = *o.lambda;
   if( o.beta ) config.controller.beta = *o.beta;
   if( o.out ) config.output.directory = *o.out;
   if( o.no_trajectory ) config.output.trajectory = false;
   if( o.no_diagnostics ) config.output.diagnostics = false;
   config.validate();
   return config;
}

fs::path prepare_output( const RunConfig& config )
{
   const fs::path dir( config.output.directory );
   fs::create_directories( dir );
   std::ofstream echo( dir / "effective_config.ini" );
   write_config( echo, config );
   return dir;
}

void write_json( const fs::path& path, const nlohmann::json& j )
{
   std::ofstream out( path );
   out << j.dump( 2 ) << '\n';
}

nlohmann::json scenario_json( const RunConfig& c )
{
   return { { "kind", to_string( c.scenario.kind ) }, { "n", c.scenario.n },       { "seed", c.scenario.seed },
            { "dt", c.scenario.dt },                  { "t_max", c.scenario.t_max }, { "delay", c.scenario.delay },
            { "trials", c.trials } };
}

std::vector<ControllerConfig> controller_list( const RunConfig& c )
{
   std::vector<ControllerConfig> out;
   for( ControllerKind k : c.controllers ) out.push_back( c.controller_for( k ) );
   return out;
}

int cmd_trial( const RunConfig& config, int jobs )
{
   const fs::path dir = prepare_output( config );
   const ControllerConfig controller = config.controller_for( config.controllers.front() );
   TrialOptions options;
   options.record_trajectory = config.output.trajectory;
   options.parallel = jobs != 1;
   const TrialResult trial = run_trial( config.scenario, controller, config.safety, options );
   const MetricsTable table = aggregate( { trial }, to_string( controller.kind ) );

   nlohmann::json j;
   j["scenario"] = scenario_json( config );
   j["controllers"] = nlohmann::json::array( { to_json( table ) } );
   write_json( dir / "metrics.json", j );
   if( config.output.trajectory )
   {
      std::ofstream csv( dir / ( "trial_" + std::to_string( config.scenario.seed ) + ".csv" ) );
      write_trajectory_csv( csv, trial );
   }
   write_table( std::cout, { table } );
   return 0;
}

int cmd_bench( const RunConfig& config, int jobs )
{
   const fs::path dir = prepare_output( config );
   MonteCarloOptions options;
   options.trials = config.trials;
   options.jobs = jobs;
   options.parallel = jobs != 1;
   const auto batches = monte_carlo( config.scenario, controller_list( config ), config.safety, options );

   nlohmann::json j;
   j["scenario"] = scenario_json( config );
   j["controllers"] = nlohmann::json::array();
   std::vector<MetricsTable> tables;
   for( const auto& b : batches )
   {
      j["controllers"].push_back( to_json( b.metrics ) );
      tables.push_back( b.metrics );
   }
   write_json( dir / "metrics.json", j );
   std::ofstream table_file( dir / "table.txt" );
   write_table( table_file, tables );
   write_table( std::cout, tables );
   return 0;
}

int cmd_delay_sweep( const RunConfig& config, int jobs )
{
   const fs::path dir = prepare_output( config );
   MonteCarloOptions options;
   options.trials = config.trials;
   options.jobs = jobs;
   options.parallel = jobs != 1;

   nlohmann::json j;
   j["scenario"] = scenario_json( config );
   j["sweep"] = nlohmann::json::array();
   std::ofstream table_file( dir / "table.txt" );
   for( double tau : config.delays )
   {
      ScenarioSpec spec = config.scenario;
      spec.delay = tau;
      const auto batches = monte_carlo( spec, controller_list( config ), config.safety, options );
      nlohmann::json entry;
      entry["delay"] = tau;
      entry["controllers"] = nlohmann::json::array();
      std::vector<MetricsTable> tables;
      for( const auto& b : batches )
      {
         entry["controllers"].push_back( to_json( b.metrics ) );
         tables.push_back( b.metrics );
      }
      j["sweep"].push_back( entry );
      char header[64];
      std::snprintf( header, sizeof header, "delay = %g s\n", tau );
      table_file << header;
      write_table( table_file, tables );
      table_file << '\n';
      std::cout << header;
      write_table( std::cout, tables );
   }
   write_json( dir / "metrics.json", j );
   return 0;
}

int cmd_compat( const RunConfig& config, int jobs )
{
   const fs::path dir = prepare_output( config );
   const Scenario scenario = generate_scenario( config.scenario );
   std::vector<UavState> states = scenario.states;
   std::vector<char> active( states.size(), 1 );
   if( config.compat_time > 0 )
   {
      ScenarioSpec spec = config.scenario;
      spec.t_max = config.compat_time;
      TrialOptions options;
      options.parallel = jobs != 1;
      const TrialResult run =
         run_trial( scenario, spec, config.controller_for( config.controllers.front() ), config.safety, options );
      states = run.final_states;
      active = run.final_active;
   }

   std::vector<UavState> snap_states;
   std::vector<UavLimits> snap_limits;
   std::vector<int> ids;
   for( std::size_t i = 0; i < states.size(); i++ )
      if( active[i] )
      {
         snap_states.push_back( states[i] );
         snap_limits.push_back( scenario.limits[i] );
         ids.push_back( static_cast<int>( i ) );
      }
   if( snap_states.size() < 2 ) throw std::runtime_error( "compat: fewer than two vehicles active at the snapshot" );

   const ConstraintSystem sys = build_centralized_system( snap_states, snap_limits, config.safety );
   const FarkasOutcome outcome = farkas_check( sys );
   const SignConsistency sc = sign_consistency_holds( sys );

   const bool compatible = outcome.verdict == Compatibility::Compatible;
   std::cout << "vehicles: " << ids.size() << "\nverdict: " << ( compatible ? "compatible" : "incompatible" )
             << "\nsign consistency: " << ( sc.overall ? "holds" : "violated" ) << '\n';

   nlohmann::json j;
   j["scenario"] = scenario_json( config );
   j["time"] = config.compat_time;
   j["vehicles"] = ids;
   j["verdict"] = compatible ? "compatible" : "incompatible";
   j["max_violation"] = outcome.max_violation;
   j["sign_consistency"] = sc.overall;
   write_json( dir / "metrics.json", j );

   if( config.output.diagnostics )
   {
      std::ofstream dump( dir / "compat_dump.txt" );
      dump << "% vehicles:";
      for( int id : ids ) dump << ' ' << id;
      dump << "\n% sign_consistency: " << ( sc.overall ? "holds" : "violated" ) << '\n';
      write_compat_dump( dump, sys, outcome );
   }
   return 0;
}

}   // namespace

int main( int argc, char** argv )
{
   CLI::App app { "Multi-UAV collision avoidance with feasibility-enhanced control barrier functions" };
   app.require_subcommand( 1 );
   Overrides overrides;
   auto* trial = app.add_subcommand( "trial", "run one trial and export its trajectory" );
   auto* bench = app.add_subcommand( "bench", "Monte-Carlo comparison of controllers" );
   auto* sweep = app.add_subcommand( "delay-sweep", "Monte-Carlo runs over a grid of delays" );
   auto* compat = app.add_subcommand( "compat", "compatibility diagnostics of a scenario snapshot" );
   for( auto* cmd : { trial, bench, sweep, compat } ) add_common_flags( cmd, overrides );

   try
   {
      app.parse( argc, argv );
   }
   catch( const CLI::CallForHelp& e )
   {
      return app.exit( e );
   }
   catch( const CLI::ParseError& e )
   {
      app.exit( e );
      return 1;
   }

   RunConfig config;
   try
   {
      config = effective_config( overrides );
   }
   catch( const ConfigError& e )
   {
      std::cerr << "configuration error: " << e.what() << '\n';
      return 1;
   }
   catch( const std::invalid_argument& e )
   {
      std::cerr << "configuration error: " << e.what() << '\n';
      return 1;
   }

   int jobs = overrides.jobs;
#ifdef _OPENMP
   if( jobs <= 0 ) jobs = omp_get_num_procs();
   omp_set_num_threads( jobs );
#else
   jobs = 1;
#endif

   try
   {
      if( *trial ) return cmd_trial( config, jobs );
      if( *bench ) return cmd_bench( config, jobs );
      if( *sweep ) return cmd_delay_sweep( config, jobs );
      if( *compat ) return cmd_compat( config, jobs );
   }
   catch( const std::exception& e )
   {
      std::cerr << "error: " << e.what() << '\n';
      return 2;
   }
   return 2;
}
