#pragma once

#include "fecbf/cbf.hpp"
#include "fecbf/controllers.hpp"
#include "fecbf/scenario.hpp"

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace fecbf {

/// Malformed file, unknown key or out-of-range value.
class ConfigError : public std::runtime_error
{
public:
   using std::runtime_error::runtime_error;
};

struct OutputConfig
{
   std::string directory = "out";
   bool trajectory = true;
   bool diagnostics = true;
};

struct RunConfig
{
   /// delay, safety radius and arrival tolerance live here too.
   ScenarioSpec scenario;
   int trials = 1;
   std::vector<ControllerKind> controllers { ControllerKind::Fecbf };
   /// Shared by every controller in `controllers` (kind is overwritten).
   ControllerConfig controller;
   SafetyParams safety;
   OutputConfig output;
   /// Delay grid of the delay sweep [s].
   std::vector<double> delays { 1.0, 3.0, 5.0 };
   /// Scenario time at which the compatibility snapshot is taken [s].
   double compat_time = 0.0;

   /// Throws ConfigError.
   void validate() const;
   ControllerConfig controller_for( ControllerKind kind ) const;
};

/// INI text with sections [scenario], [controller], [safety], [output].
/// Missing keys keep their defaults; unknown sections or keys are rejected.
RunConfig parse_config( std::istream& is );
RunConfig load_config( const std::string& path );

/// Writes every effective value in the same format parse_config reads.
void write_config( std::ostream& os, const RunConfig& config );

}   // namespace fecbf
