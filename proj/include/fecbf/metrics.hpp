#pragma once

#include "fecbf/simulation.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fecbf {

struct TrialSummary
{
   std::uint64_t seed = 0;
   int uavs = 0;
   int reached = 0;
   int collided = 0;
   int timed_out = 0;
   int infeasible_steps = 0;
   std::optional<double> at_mean;
   double ct_mean_ms = 0.0;
};

/// Success rate, mean infeasibility count per vehicle, mean arrival time over
/// arrivals and mean solve time per decision.
struct MetricsTable
{
   std::string label;
   double sr = 0.0;
   double ic_mean = 0.0;
   std::optional<double> at_mean;
   double ct_mean_ms = 0.0;
   int trials = 0;
   std::vector<TrialSummary> per_trial;
};

TrialSummary summarize( const TrialResult& trial );
MetricsTable aggregate( const std::vector<TrialResult>& trials, const std::string& label );

struct BatchResult
{
   ControllerConfig controller;
   MetricsTable metrics;
   std::vector<TrialResult> trials;
};

struct MonteCarloOptions
{
   int trials = 1;
   /// Run trials concurrently with OpenMP.
   bool parallel = true;
   /// Worker threads; 0 means the OpenMP default.
   int jobs = 0;
   /// Keep the full per-trial results (pairwise barrier minima) in the output.
   bool keep_trials = false;
};

/// Trial t of every controller uses seed spec.seed + t, so all controllers
/// face identical scenarios.
std::vector<BatchResult> monte_carlo( const ScenarioSpec& spec, const std::vector<ControllerConfig>& controllers,
                                      const SafetyParams& params, const MonteCarloOptions& options );

/// include_timing=false drops the wall-clock fields so the output is reproducible.
nlohmann::json to_json( const MetricsTable& table, bool include_timing = true );

/// SR [%] | IC | AT [s] | CT [ms], one row per controller.
void write_table( std::ostream& os, const std::vector<MetricsTable>& tables );

/// Header t,uav_id,x,y,z,v,theta,psi,a,gamma,omega,feasible.
void write_trajectory_csv( std::ostream& os, const TrialResult& trial );

}   // namespace fecbf
