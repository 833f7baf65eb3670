#pragma once

#include "fecbf/kinematics.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace fecbf {

enum class ScenarioKind
{
   Convergence,
   DualCircle,
   HeadOn,
};

const char* to_string( ScenarioKind kind );
/// Accepts "convergence", "dualcircle"/"dual-circle"/"dual_circle", "headon"/"head-on"/"head_on".
ScenarioKind parse_scenario_kind( const std::string& text );

struct ScenarioSpec
{
   ScenarioKind kind = ScenarioKind::DualCircle;
   int n = 50;
   std::uint64_t seed = 1;
   double dt = 0.1;
   double t_max = 600.0;
   /// Communication delay tau [s].
   double delay = 0.0;
   double safety_radius = 2.0;
   double arrival_tol = 5.0;

   /// Throws std::invalid_argument. allow_single admits n = 1.
   void validate( bool allow_single = false ) const;
};

struct Scenario
{
   std::vector<UavState> states;
   std::vector<UavLimits> limits;
   std::vector<Eigen::Vector3d> goals;
};

/// Meeting point of the convergence scenario.
inline const Eigen::Vector3d kConvergencePoint { 1000.0, 1000.0, 250.0 };
/// Centre of the dual-circle scenario and midpoint of the head-on one.
inline const Eigen::Vector3d kArenaCentre { 1000.0, 1000.0, 200.0 };

/// Every vehicle starts at top speed and its goal lies 300 s of top-speed
/// flight ahead along the initial heading. Deterministic in spec.seed.
Scenario generate_scenario( const ScenarioSpec& spec );

}   // namespace fecbf
