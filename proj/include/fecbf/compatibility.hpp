#pragma once

#include "fecbf/cbf.hpp"
#include "fecbf/qp.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace fecbf {

/// Stacked pairwise constraints C u <= b over the joint input of n vehicles.
///
/// Row for pair (i, j), i < j, holds -k_ij^T in block column i and -k_ji^T in
/// block column j with b = xi_ij, so that C u <= b is exactly
/// k_ij^T u_i + k_ji^T u_j + xi_ij >= 0.
struct ConstraintSystem
{
   Eigen::MatrixXd C;
   Eigen::VectorXd b;
   std::vector<std::pair<int, int>> pair_index;

   int uav_count() const { return static_cast<int>( C.cols() / 3 ); }
};

/// Pairs in lexicographic order (0,1), (0,2), ..., (n-2,n-1). Throws
/// std::invalid_argument for fewer than two vehicles.
ConstraintSystem build_centralized_system( std::span<const UavState> states, std::span<const UavLimits> limits,
                                           const SafetyParams& params );

enum class Compatibility
{
   Compatible,
   Incompatible,
};

struct FarkasOutcome
{
   Compatibility verdict = Compatibility::Compatible;
   /// q >= 0, |q|_1 = 1, q^T C ~ 0, q^T b < 0. Present iff Incompatible.
   std::optional<Eigen::VectorXd> certificate;
   /// C u <= b + 1e-8. Present iff Compatible.
   std::optional<Eigen::VectorXd> witness;
   /// Optimum of the phase-I LP (largest normalized violation).
   double max_violation = 0.0;
};

/// Decides nonemptiness of {u : C u <= b}. Throws LpUndecided when the LP
/// does not finish or its answer fails arithmetic re-verification.
FarkasOutcome farkas_check( const Eigen::MatrixXd& C, const Eigen::VectorXd& b );
inline FarkasOutcome farkas_check( const ConstraintSystem& sys ) { return farkas_check( sys.C, sys.b ); }

struct NullspaceBounds
{
   long long lower = 0;
   long long upper = 0;
};

/// max(0, n(n-7)/2) <= dim N(C^T) <= n(n-1)/2
NullspaceBounds nullspace_dim_bounds( int n );

/// Singular values above rel_tol * sigma_max.
int numerical_rank( const Eigen::MatrixXd& matrix, double rel_tol = 1e-10 );

/// (n-1) x 3 matrix of the nonzero blocks of C that belong to vehicle i.
Eigen::MatrixXd uav_block( const ConstraintSystem& sys, int i );

struct SignConsistency
{
   std::vector<bool> per_uav;
   bool overall = false;
};

/// True for vehicle i iff every column of its block has entries of one
/// strict sign (magnitude above 1e-12).
SignConsistency sign_consistency_holds( const ConstraintSystem& sys );

/// min |u - u_nominal|^2 over the joint input subject to every vehicle's
/// input box and C u <= b.
QpOutcome solve_centralized_qp( std::span<const UavState> states, std::span<const UavLimits> limits,
                                const SafetyParams& params, const Eigen::VectorXd& u_nominal,
                                const QpOptions& options = { 2000, 1e-9 } );

/// Writes C, b and (when present) the certificate as matrix-market sections.
void write_compat_dump( std::ostream& os, const ConstraintSystem& sys, const FarkasOutcome& outcome );

}   // namespace fecbf
