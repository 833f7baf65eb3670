#pragma once

// Reference implementations used only by the tests. They favour being
// obviously correct over being fast, and share no code with the library's
// solvers.

#include "fecbf/cbf.hpp"
#include "fecbf/kinematics.hpp"
#include "fecbf/qp.hpp"
#include "fecbf/sign_consistency.hpp"

#include <Eigen/Dense>

#include <optional>
#include <random>

namespace fecbf::oracle {

/// Is {x : A x <= b, lower <= x <= upper} nonempty? Primal phase-I simplex
/// on x = x+ - x-, with Bland's rule throughout.
struct SimplexVerdict
{
   bool feasible = false;
   /// Sum of artificial variables at the phase-I optimum.
   double infeasibility = 0.0;
   Eigen::VectorXd point;
};

SimplexVerdict primal_phase1( const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& lower,
                              const Eigen::VectorXd& upper, double tol = 1e-9 );

/// Solution of a QpProblem by enumerating candidate active sets of size up to
/// dim, smallest first, and returning the first KKT point found.
struct KktVerdict
{
   bool feasible = false;
   Eigen::VectorXd x;
   double objective = 0.0;
   long subsets_tried = 0;
};

KktVerdict kkt_enumeration( const QpProblem& p, double tol = 1e-9 );

/// Time derivative of h with d frozen, by central differences of the exact
/// flow under constant inputs (RK4 sub-steps).
double finite_difference_hdot( const UavState& si, const ControlInput& ui, const UavLimits& li, const UavState& sj,
                               const ControlInput& uj, const UavLimits& lj, const SafetyParams& params,
                               double delta = 1e-4 );

/// Largest value of axis_world^T (v_j + zeta W_j u) over `samples` uniform
/// draws from the box, plus its eight corners.
double sampled_sdot_max( const InputBox& box, const UavState& neighbor, const Eigen::Vector3d& axis_world,
                         const SafetyParams& params, int samples, std::mt19937_64& rng );

}   // namespace fecbf::oracle
