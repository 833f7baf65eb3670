#pragma once

#include "fecbf/cbf.hpp"
#include "fecbf/controllers.hpp"
#include "fecbf/scenario.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

namespace fecbf {

/// World states recorded at each step time, oldest first.
class SnapshotBuffer
{
public:
   /// horizon: how far back (in seconds) snapshots must stay available.
   explicit SnapshotBuffer( std::vector<UavState> initial, double horizon = 0.0 );

   void push( double t, std::vector<UavState> states );

   const std::vector<UavState>& initial() const { return initial_; }
   std::size_t size() const { return frames_.size(); }

   struct Frame
   {
      double time;
      std::vector<UavState> states;
   };

   /// Latest frame with time <= t (within 1e-9), or nullptr.
   const Frame* latest_at_or_before( double t ) const;

private:
   std::vector<UavState> initial_;
   double horizon_;
   std::deque<Frame> frames_;
};

struct DelayedView
{
   /// Time stamp of the returned states (0 when falling back to the initial states).
   double time = 0.0;
   const std::vector<UavState>* states = nullptr;
};

/// States recorded at the latest step time <= t - tau, or the initial states
/// when no such step exists.
DelayedView delayed_snapshot( const SnapshotBuffer& buffer, double t, double tau );

struct UavOutcome
{
   bool reached = false;
   bool collided = false;
   std::optional<double> arrival_time;
   std::optional<double> collision_time;
   int infeasible_steps = 0;
   /// Infeasible steps where the solver stopped on its iteration cap.
   int iter_limit_steps = 0;
   int decisions = 0;
   double solve_time_total = 0.0;
   int sc_omitted = 0;
   bool always_feasible() const { return infeasible_steps == 0; }
};

struct TrajectorySample
{
   double t = 0.0;
   int uav = 0;
   UavState state;
   ControlInput input;
   bool feasible = true;
};

struct TrialResult
{
   std::uint64_t seed = 0;
   std::vector<UavOutcome> uavs;
   /// Smallest barrier value over time for each pair while both were active
   /// (+inf on the diagonal and for pairs never simultaneously active).
   Eigen::MatrixXd pair_min_h;
   std::vector<TrajectorySample> trajectory;
   int steps = 0;
   double end_time = 0.0;
   /// World at end_time and which vehicles were still flying.
   std::vector<UavState> final_states;
   std::vector<char> final_active;

   int reached_count() const;
   int collided_count() const;
   int timed_out_count() const;
   int total_infeasible() const;
};

struct TrialOptions
{
   bool record_trajectory = false;
   /// Evaluate the vehicles' decisions of one step with OpenMP threads.
   bool parallel = false;
   /// History length used for input estimation.
   std::size_t history_length = 3;
};

TrialResult run_trial( const Scenario& scenario, const ScenarioSpec& spec, const ControllerConfig& controller,
                       const SafetyParams& params, const TrialOptions& options = {} );

inline TrialResult run_trial( const ScenarioSpec& spec, const ControllerConfig& controller, const SafetyParams& params,
                              const TrialOptions& options = {} )
{
   return run_trial( generate_scenario( spec ), spec, controller, params, options );
}

}   // namespace fecbf
