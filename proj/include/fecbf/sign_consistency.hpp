#pragma once

#include "fecbf/cbf.hpp"
#include "fecbf/kinematics.hpp"

#include <boost/circular_buffer.hpp>

#include <Eigen/Dense>

#include <optional>

namespace fecbf {

struct TimedState
{
   double time = 0.0;
   UavState state;
};

/// Last K observed states of one neighbor, oldest first.
class NeighborHistory
{
public:
   explicit NeighborHistory( std::size_t capacity = 3 );

   /// Throws std::invalid_argument unless time is strictly after the latest sample.
   void push( double time, const UavState& state );

   std::size_t size() const { return samples_.size(); }
   std::size_t capacity() const { return samples_.capacity(); }
   bool empty() const { return samples_.empty(); }
   const TimedState& latest() const { return samples_.back(); }
   const TimedState& operator[]( std::size_t i ) const { return samples_[i]; }
   void clear() { samples_.clear(); }

private:
   boost::circular_buffer<TimedState> samples_;
};

/// Linearized cone constraint  l^T u_i - eps <= delta.
struct ScConstraint
{
   Eigen::Vector3d l = Eigen::Vector3d::Zero();
   double delta = 0.0;
   double beta = 0.0;
   Eigen::Vector3d d_axis = Eigen::Vector3d::Zero();
};

/// (sqrt(3)/3) sign(W~^T (goal - p)) with sign(0) = +1. A component counts
/// as zero when it is within sin(deadband) of the goal distance.
Eigen::Vector3d cone_axis( const UavState& state, const Eigen::Vector3d& goal, double deadband = 0.0 );

struct InputBox
{
   Eigen::Vector3d lower;
   Eigen::Vector3d upper;
};

/// Backward difference of (v, pitch, yaw) over the two newest samples,
/// clamped to the limits. Requires at least two samples.
Eigen::Vector3d estimate_input( const NeighborHistory& history, const UavLimits& limits );

/// Inputs consistent with the observed history: the estimate widened by
/// u_tol_fraction of each channel's range, intersected with the limits. The
/// full input box when fewer than two samples exist.
InputBox admissible_input_box( const NeighborHistory& history, const UavLimits& limits, double u_tol_fraction = 0.5 );

/// Neighbor virtual-state derivative v_j + zeta W_j u that maximizes
/// d^T W~_i^T sdot_j over the admissible box (a corner chosen by signs).
Eigen::Vector3d worst_case_sdot( const NeighborHistory& history, const Eigen::Vector3d& d_axis,
                                 const Eigen::Matrix3d& frame_i, const UavLimits& limits_j, const SafetyParams& params,
                                 double u_tol_fraction = 0.5 );

/// Corner maximization over a given box; axis_world is W~_i d.
Eigen::Vector3d worst_case_sdot( const InputBox& box, const Kinematics& neighbor, const Eigen::Vector3d& axis_world,
                                 const SafetyParams& params );

/// Returns nullopt when |s_i + v_i - s_j - v_j| <= den_eps.
std::optional<ScConstraint> sc_coefficients( const UavState& state_i, const UavState& state_j,
                                             const Eigen::Vector3d& sdot_hat, const Eigen::Vector3d& d_axis,
                                             const SafetyParams& params, double beta, double den_eps = 1e-6 );

std::optional<ScConstraint> sc_coefficients( const Kinematics& self, const Kinematics& other,
                                             const Eigen::Vector3d& sdot_hat, const Eigen::Vector3d& d_axis,
                                             const Eigen::Vector3d& axis_world, const SafetyParams& params,
                                             double beta, double den_eps = 1e-6 );

}   // namespace fecbf
