#include "fecbf/config.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace fecbf {

namespace pt = boost::property_tree;

void RunConfig::validate() const
{
   try
   {
      scenario.validate();
      controller.validate();
      safety.validate();
   }
   catch( const std::invalid_argument& e )
   {
      throw ConfigError( e.what() );
   }
   if( trials < 1 ) throw ConfigError( "scenario.trials must be at least 1" );
   if( controllers.empty() ) throw ConfigError( "controller.kinds must name at least one controller" );
   for( double d : delays )
      if( !( d >= 0 ) ) throw ConfigError( "scenario.delays must be non-negative" );
   if( !( compat_time >= 0 ) ) throw ConfigError( "scenario.compat_time must be non-negative" );
   if( output.directory.empty() ) throw ConfigError( "output.directory must not be empty" );
}

ControllerConfig RunConfig::controller_for( ControllerKind kind ) const
{
   ControllerConfig c = controller;
   c.kind = kind;
   c.dt = scenario.dt;
   return c;
}

namespace {

const std::map<std::string, std::set<std::string>> kSchema {
   { "scenario", { "kind", "n", "dt", "t_max", "delay", "seed", "trials", "delays", "compat_time" } },
   { "controller",
     { "kinds", "lambda", "beta", "neighbor_radius", "fallback", "k_yaw", "k_pitch", "k_speed", "u_tol", "vo_gain",
       "qp_max_iterations", "axis_deadband" } },
   { "safety", { "zeta", "kappa", "radius", "arrival_tol" } },
   { "output", { "directory", "trajectory", "diagnostics" } },
};

double to_double( const std::string& key, const std::string& text )
{
   std::size_t used = 0;
   double value = 0.0;
   try
   {
      value = std::stod( text, &used );
   }
   catch( const std::exception& )
   {
      throw ConfigError( key + ": expected a number, got '" + text + "'" );
   }
   if( used != text.size() ) throw ConfigError( key + ": expected a number, got '" + text + "'" );
   return value;
}

long long to_integer( const std::string& key, const std::string& text )
{
   std::size_t used = 0;
   long long value = 0;
   try
   {
      value = std::stoll( text, &used );
   }
   catch( const std::exception& )
   {
      throw ConfigError( key + ": expected an integer, got '" + text + "'" );
   }
   if( used != text.size() ) throw ConfigError( key + ": expected an integer, got '" + text + "'" );
   return value;
}

bool to_bool( const std::string& key, const std::string& text )
{
   const std::string v = boost::algorithm::to_lower_copy( text );
   if( v == "true" || v == "on" || v == "yes" || v == "1" ) return true;
   if( v == "false" || v == "off" || v == "no" || v == "0" ) return false;
   throw ConfigError( key + ": expected a boolean, got '" + text + "'" );
}

std::vector<std::string> split_list( const std::string& text )
{
   std::vector<std::string> parts;
   boost::algorithm::split( parts, text, boost::algorithm::is_any_of( "," ) );
   std::vector<std::string> out;
   for( auto& p : parts )
   {
      boost::algorithm::trim( p );
      if( !p.empty() ) out.push_back( p );
   }
   return out;
}

void apply( RunConfig& c, const std::string& section, const std::string& key, const std::string& raw )
{
   const std::string name = section + "." + key;
   const std::string value = boost::algorithm::trim_copy( raw );
   try
   {
      if( section == "scenario" )
      {
         if( key == "kind" ) c.scenario.kind = parse_scenario_kind( value );
         else if( key == "n" ) c.scenario.n = static_cast<int>( to_integer( name, value ) );
         else if( key == "dt" ) c.scenario.dt = to_double( name, value );
         else if( key == "t_max" ) c.scenario.t_max = to_double( name, value );
         else if( key == "delay" ) c.scenario.delay = to_double( name, value );
         else if( key == "seed" ) c.scenario.seed = static_cast<std::uint64_t>( to_integer( name, value ) );
         else if( key == "trials" ) c.trials = static_cast<int>( to_integer( name, value ) );
         else if( key == "delays" )
         {
            c.delays.clear();
            for( const auto& item : split_list( value ) ) c.delays.push_back( to_double( name, item ) );
         }
         else if( key == "compat_time" ) c.compat_time = to_double( name, value );
      }
      else if( section == "controller" )
      {
         if( key == "kinds" )
         {
            c.controllers.clear();
            for( const auto& item : split_list( value ) ) c.controllers.push_back( parse_controller_kind( item ) );
         }
         else if( key == "lambda" ) c.controller.lambda = to_double( name, value );
         else if( key == "beta" ) c.controller.beta = to_double( name, value );
         else if( key == "neighbor_radius" )
            c.controller.neighbor_radius = boost::algorithm::iequals( value, "unlimited" )
                                              ? std::numeric_limits<double>::infinity()
                                              : to_double( name, value );
         else if( key == "fallback" )
         {
            const std::string v = boost::algorithm::to_lower_copy( value );
            if( v == "brake" ) c.controller.fallback = FallbackMode::Brake;
            else if( v == "hold_last" || v == "hold-last" ) c.controller.fallback = FallbackMode::HoldLast;
            else throw ConfigError( name + ": expected brake or hold_last, got '" + value + "'" );
         }
         else if( key == "k_yaw" ) c.controller.gains.k_yaw = to_double( name, value );
         else if( key == "k_pitch" ) c.controller.gains.k_pitch = to_double( name, value );
         else if( key == "k_speed" ) c.controller.gains.k_speed = to_double( name, value );
         else if( key == "u_tol" ) c.controller.u_tol_fraction = to_double( name, value );
         else if( key == "vo_gain" ) c.controller.vo_gain = to_double( name, value );
         else if( key == "axis_deadband" ) c.controller.axis_deadband = to_double( name, value );
         else if( key == "qp_max_iterations" )
            c.controller.qp_max_iterations = static_cast<int>( to_integer( name, value ) );
      }
      else if( section == "safety" )
      {
         if( key == "zeta" ) c.safety.zeta = to_double( name, value );
         else if( key == "kappa" ) c.safety.kappa = to_double( name, value );
         else if( key == "radius" ) c.scenario.safety_radius = to_double( name, value );
         else if( key == "arrival_tol" ) c.scenario.arrival_tol = to_double( name, value );
      }
      else if( section == "output" )
      {
         if( key == "directory" ) c.output.directory = value;
         else if( key == "trajectory" ) c.output.trajectory = to_bool( name, value );
         else if( key == "diagnostics" ) c.output.diagnostics = to_bool( name, value );
      }
   }
   catch( const std::invalid_argument& e )
   {
      throw ConfigError( name + ": " + e.what() );
   }
}

std::string format_double( double v )
{
   if( std::isinf( v ) ) return "unlimited";
   std::ostringstream os;
   os << std::setprecision( 17 ) << v;
   return os.str();
}

}   // namespace

RunConfig parse_config( std::istream& is )
{
   pt::ptree tree;
   try
   {
      pt::read_ini( is, tree );
   }
   catch( const pt::ini_parser_error& e )
   {
      throw ConfigError( std::string( "config: " ) + e.what() );
   }

   RunConfig config;
   for( const auto& [section, body] : tree )
   {
      const auto schema = kSchema.find( section );
      if( schema == kSchema.end() )
      {
         if( body.empty() && !body.data().empty() ) throw ConfigError( "config: key '" + section + "' outside any section" );
         throw ConfigError( "config: unknown section [" + section + "]" );
      }
      for( const auto& [key, value] : body )
      {
         if( !schema->second.count( key ) ) throw ConfigError( "config: unknown key " + section + "." + key );
         apply( config, section, key, value.data() );
      }
   }
   config.validate();
   return config;
}

RunConfig load_config( const std::string& path )
{
   std::ifstream in( path );
   if( !in ) throw ConfigError( "config: cannot open '" + path + "'" );
   return parse_config( in );
}

void write_config( std::ostream& os, const RunConfig& c )
{
   auto join = []( const auto& items, auto fmt ) {
      std::string out;
      for( const auto& item : items )
      {
         if( !out.empty() ) out += ", ";
         out += fmt( item );
      }
      return out;
   };

   os << "[scenario]\n";
   os << "kind = " << to_string( c.scenario.kind ) << '\n';
   os << "n = " << c.scenario.n << '\n';
   os << "dt = " << format_double( c.scenario.dt ) << '\n';
   os << "t_max = " << format_double( c.scenario.t_max ) << '\n';
   os << "delay = " << format_double( c.scenario.delay ) << '\n';
   os << "seed = " << c.scenario.seed << '\n';
   os << "trials = " << c.trials << '\n';
   os << "delays = " << join( c.delays, format_double ) << '\n';
   os << "compat_time = " << format_double( c.compat_time ) << "\n\n";

   os << "[controller]\n";
   os << "kinds = " << join( c.controllers, []( ControllerKind k ) { return std::string( to_string( k ) ); } ) << '\n';
   os << "lambda = " << format_double( c.controller.lambda ) << '\n';
   os << "beta = " << format_double( c.controller.beta ) << '\n';
   os << "neighbor_radius = " << format_double( c.controller.neighbor_radius ) << '\n';
   os << "fallback = " << ( c.controller.fallback == FallbackMode::Brake ? "brake" : "hold_last" ) << '\n';
   os << "k_yaw = " << format_double( c.controller.gains.k_yaw ) << '\n';
   os << "k_pitch = " << format_double( c.controller.gains.k_pitch ) << '\n';
   os << "k_speed = " << format_double( c.controller.gains.k_speed ) << '\n';
   os << "u_tol = " << format_double( c.controller.u_tol_fraction ) << '\n';
   os << "vo_gain = " << format_double( c.controller.vo_gain ) << '\n';
   os << "axis_deadband = " << format_double( c.controller.axis_deadband ) << '\n';
   os << "qp_max_iterations = " << c.controller.qp_max_iterations << "\n\n";

   os << "[safety]\n";
   os << "zeta = " << format_double( c.safety.zeta ) << '\n';
   os << "kappa = " << format_double( c.safety.kappa ) << '\n';
   os << "radius = " << format_double( c.scenario.safety_radius ) << '\n';
   os << "arrival_tol = " << format_double( c.scenario.arrival_tol ) << "\n\n";

   os << "[output]\n";
   os << "directory = " << c.output.directory << '\n';
   os << "trajectory = " << ( c.output.trajectory ? "true" : "false" ) << '\n';
   os << "diagnostics = " << ( c.output.diagnostics ? "true" : "false" ) << '\n';
}

}   // namespace fecbf
