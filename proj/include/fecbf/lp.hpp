#pragma once

#include <Eigen/Dense>

namespace fecbf {

enum class LpStatus
{
   Optimal,
   Infeasible,
   Unbounded,
   IterLimit,
};

/// min c^T x  s.t.  A x = b, x >= 0
struct StandardFormLp
{
   Eigen::MatrixXd A;
   Eigen::VectorXd b;
   Eigen::VectorXd c;
};

struct LpResult
{
   LpStatus status = LpStatus::IterLimit;
   Eigen::VectorXd x;
   /// Optimal: dual solution y with A^T y <= c and b^T y = c^T x.
   /// Infeasible: Farkas ray y with A^T y <= 0 and b^T y > 0.
   Eigen::VectorXd duals;
   double objective = 0.0;
   int iterations = 0;
};

/// Two-phase dense tableau simplex. Dantzig pricing, switching to Bland's
/// rule after a run of degenerate pivots.
LpResult solve_standard_form( const StandardFormLp& lp, int max_iterations = 20000 );

}   // namespace fecbf
