#pragma once

#include "fecbf/cbf.hpp"
#include "fecbf/kinematics.hpp"
#include "fecbf/qp.hpp"
#include "fecbf/sign_consistency.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>

namespace fecbf {

enum class ControllerKind
{
   Fecbf,
   Drcbf,
   Vocbf,
   Centralized,
};

const char* to_string( ControllerKind kind );
/// Accepts "fecbf", "drcbf", "vocbf", "centralized" (case-insensitive).
ControllerKind parse_controller_kind( const std::string& text );

enum class FallbackMode
{
   Brake,
   HoldLast,
};

struct NominalGains
{
   double k_yaw = 1.0;
   double k_pitch = 1.0;
   double k_speed = 0.5;
};

struct ControllerConfig
{
   ControllerKind kind = ControllerKind::Fecbf;
   double lambda = 3.0;
   double beta = 7 * M_PI / 24;
   double neighbor_radius = std::numeric_limits<double>::infinity();
   NominalGains gains;
   FallbackMode fallback = FallbackMode::Brake;
   /// Half-width of the worst-case input box as a fraction of each input range.
   double u_tol_fraction = 0.5;
   double den_eps = 1e-6;
   /// Angle [rad] within which a goal-direction component counts as zero
   /// when picking the cone axis. Keeps the axis from flipping every step
   /// when the goal is almost dead ahead.
   double axis_deadband = M_PI / 12;
   /// Control period, used by the velocity-obstacle rows.
   double dt = 0.1;
   /// Outward push rate of the velocity-obstacle rows [1/s].
   double vo_gain = 0.08;
   int qp_max_iterations = 5000;

   void validate() const;
};

struct ControlDecision
{
   ControlInput input;
   bool feasible = true;
   QpStatus status = QpStatus::Optimal;
   double slack_norm = 0.0;
   /// Wall-clock seconds spent building and solving.
   double solve_time = 0.0;
   /// Sign-consistency rows dropped for a degenerate denominator.
   int sc_omitted = 0;
};

/// What vehicle i knows about neighbor j: its (possibly delayed) state, the
/// history of such observations and its limits.
struct Neighbor
{
   UavState state;
   const NeighborHistory* history = nullptr;
   UavLimits limits;
};

/// Proportional line-of-sight law toward the goal. Targets top speed, or the
/// minimum speed while the goal is behind or inside the turning circle.
ControlInput nominal_input( const UavState& state, const Eigen::Vector3d& goal, const UavLimits& limits,
                            const NominalGains& gains = {} );

/// [a_min, 0, 0] unless mode is HoldLast and a previous input exists.
ControlInput fallback_input( const std::optional<ControlInput>& last_feasible, const UavLimits& limits,
                             FallbackMode mode = FallbackMode::Brake );

/// Decentralized barrier rows -k_ij^T u_i <= xi_ij / 2 plus slacked
/// sign-consistency rows, objective |u - u_p|^2 + lambda |eps|^2.
ControlDecision fecbf_control( const UavState& self, const Eigen::Vector3d& goal, std::span<const Neighbor> neighbors,
                               const ControllerConfig& config, const SafetyParams& params, const UavLimits& limits,
                               const std::optional<ControlInput>& last_feasible = std::nullopt );

/// Decentralized barrier rows only.
ControlDecision drcbf_control( const UavState& self, const Eigen::Vector3d& goal, std::span<const Neighbor> neighbors,
                               const ControllerConfig& config, const SafetyParams& params, const UavLimits& limits,
                               const std::optional<ControlInput>& last_feasible = std::nullopt );

/// Decentralized barrier rows plus one velocity-obstacle row per neighbor
/// whose collision cone contains the relative velocity.
ControlDecision vocbf_control( const UavState& self, const Eigen::Vector3d& goal, std::span<const Neighbor> neighbors,
                               const ControllerConfig& config, const SafetyParams& params, const UavLimits& limits,
                               const std::optional<ControlInput>& last_feasible = std::nullopt );

/// Half-space on the one-step input, a^T u <= b.
struct VelocityObstacleRow
{
   Eigen::Vector3d a = Eigen::Vector3d::Zero();
   double b = 0.0;
   /// Outward normal of the face (or separation direction when overlapping).
   Eigen::Vector3d normal = Eigen::Vector3d::Zero();
   /// Signed distance of the relative velocity to that face (negative inside).
   double depth = 0.0;
};

/// Row for neighbor j, or nullopt when the relative velocity is outside the
/// collision cone.
std::optional<VelocityObstacleRow> velocity_obstacle_row( const UavState& self, const UavLimits& limits_i,
                                                          const UavState& other, const UavLimits& limits_j, double dt,
                                                          double gain );

/// Dispatches on config.kind (Centralized is handled by the simulator).
ControlDecision decentralized_control( const UavState& self, const Eigen::Vector3d& goal,
                                       std::span<const Neighbor> neighbors, const ControllerConfig& config,
                                       const SafetyParams& params, const UavLimits& limits,
                                       const std::optional<ControlInput>& last_feasible = std::nullopt );

}   // namespace fecbf
