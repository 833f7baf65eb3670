#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <vector>

namespace fecbf {

/// min  sum_k weights_k (x_k - target_k)^2
/// s.t. ineq_A x <= ineq_b,  lower <= x <= upper
///
/// Infinite entries in lower/upper mean the bound is absent.
struct QpProblem
{
   int dim = 0;
   Eigen::VectorXd target;
   Eigen::VectorXd weights;
   Eigen::MatrixXd ineq_A;
   Eigen::VectorXd ineq_b;
   Eigen::VectorXd lower;
   Eigen::VectorXd upper;

   /// Unit weights, no rows, unbounded box.
   static QpProblem projection( const Eigen::VectorXd& target );

   void validate() const;
};

enum class QpStatus
{
   Optimal,
   Infeasible,
   IterLimit,
};

const char* to_string( QpStatus status );

/// Constraint ids used in active_set: [0, m) are rows of ineq_A,
/// [m, m + dim) upper bounds, [m + dim, m + 2 dim) lower bounds.
struct QpOutcome
{
   QpStatus status = QpStatus::IterLimit;
   std::optional<Eigen::VectorXd> solution;
   std::optional<double> objective;
   std::optional<std::vector<int>> active_set;
   /// Multipliers of ineq_A rows (zero for inactive rows). Optimal only.
   Eigen::VectorXd multipliers;
   double kkt_residual = 0.0;
   int iterations = 0;
};

struct QpOptions
{
   int max_iterations = 200;
   double feasibility_tol = 1e-9;
};

/// Dual active-set method (Goldfarb-Idnani) specialized to diagonal
/// Hessians. Columns that appear in a single active row are eliminated
/// analytically, so problems of the form "few shared variables plus one slack
/// per soft row" cost O(rows) per iteration.
QpOutcome solve( const QpProblem& problem, const QpOptions& options = {} );

/// Thrown when the feasibility LP stops on its iteration limit or produces a
/// certificate that fails re-verification.
class LpUndecided : public std::runtime_error
{
public:
   using std::runtime_error::runtime_error;
};

struct Phase1Result
{
   bool feasible = false;
   /// Optimal value of min t s.t. a_r^T x / |a_r| <= b_r / |a_r| + t over the
   /// rows and box. Negative when the system is strictly feasible.
   double max_violation = 0.0;
   Eigen::VectorXd witness;
   /// Farkas multipliers (present iff !feasible), normalized to unit l1 norm
   /// over rows and box bounds together.
   Eigen::VectorXd row_certificate;
   Eigen::VectorXd upper_certificate;
   Eigen::VectorXd lower_certificate;
};

/// Phase-I LP: minimizes the largest normalized constraint violation. The LP
/// is solved in its dual form, whose optimal vertex is the certificate.
Phase1Result phase1_feasibility( const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& lower,
                                 const Eigen::VectorXd& upper, double tol = 1e-9 );

}   // namespace fecbf
