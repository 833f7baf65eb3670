#include "fecbf/lp.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace fecbf {

namespace {

constexpr double kPivotTol = 1e-10;
constexpr double kReducedCostTol = 1e-10;
constexpr int kDegenerateRunBeforeBland = 50;
constexpr double kPerturbation = 1e-7;

class Tableau
{
public:
   Tableau( const StandardFormLp& lp )
      : m_( static_cast<int>( lp.A.rows() ) )
      , n_( static_cast<int>( lp.A.cols() ) )
      , t_( m_, n_ + m_ )
      , rhs_( m_ )
      , sign_( m_ )
      , basis_( m_ )
   {
      t_.setZero();
      for( int i = 0; i < m_; i++ )
      {
         sign_( i ) = lp.b( i ) < 0 ? -1.0 : 1.0;
         t_.row( i ).head( n_ ) = sign_( i ) * lp.A.row( i );
         t_( i, n_ + i ) = 1.0;
         rhs_( i ) = sign_( i ) * lp.b( i );
         basis_[i] = n_ + i;
      }
      rhs0_ = rhs_;
   }

   // Small distinct offsets on the right-hand side break the ties that make
   // long degenerate pivot runs; restore() recomputes the exact B^-1 b.
   void perturb()
   {
      const double scale = std::max( 1.0, rhs0_.cwiseAbs().maxCoeff() );
      for( int i = 0; i < m_; i++ )
      {
         const double frac = std::fmod( 0.6180339887498949 * ( i + 1 ), 1.0 );
         rhs_( i ) += kPerturbation * scale * ( 1.0 + frac );
      }
   }

   // False when the basis is not primal feasible for the unperturbed data.
   bool restore()
   {
      rhs_ = t_.rightCols( m_ ) * rhs0_;
      const double scale = std::max( 1.0, rhs0_.cwiseAbs().maxCoeff() );
      bool ok = true;
      for( int i = 0; i < m_; i++ )
      {
         if( rhs_( i ) >= 0 ) continue;
         if( rhs_( i ) > -1e-9 * scale )
            rhs_( i ) = 0.0;
         else
            ok = false;
      }
      return ok;
   }

   // Runs simplex iterations on the cost vector `cost` (length n+m) using
   // columns [0, allowed_cols) as entering candidates.
   LpStatus optimize( const Eigen::VectorXd& cost, int allowed_cols, int& iterations, int max_iterations )
   {
      reduced_ = cost;
      for( int i = 0; i < m_; i++ )
      {
         const double cb = cost( basis_[i] );
         if( cb != 0.0 ) reduced_ -= cb * t_.row( i ).transpose();
      }

      int degenerate_run = 0;
      while( true )
      {
         const bool bland = degenerate_run >= kDegenerateRunBeforeBland;
         int enter = -1;
         double best = -kReducedCostTol;
         for( int j = 0; j < allowed_cols; j++ )
         {
            if( reduced_( j ) < best )
            {
               enter = j;
               if( bland ) break;
               best = reduced_( j );
            }
         }
         if( enter < 0 ) return LpStatus::Optimal;

         int leave = -1;
         double best_ratio = std::numeric_limits<double>::infinity();
         for( int i = 0; i < m_; i++ )
         {
            const double a = t_( i, enter );
            if( a <= kPivotTol ) continue;
            const double ratio = rhs_( i ) / a;
            if( leave < 0 || ratio < best_ratio - 1e-12 )
            {
               best_ratio = ratio;
               leave = i;
            }
            else if( ratio <= best_ratio + 1e-12 && basis_[i] < basis_[leave] )
            {
               // lowest basic index among ties
               best_ratio = std::min( ratio, best_ratio );
               leave = i;
            }
         }
         if( leave < 0 ) return LpStatus::Unbounded;
         if( ++iterations > max_iterations ) return LpStatus::IterLimit;

         degenerate_run = best_ratio <= 1e-12 ? degenerate_run + 1 : 0;
         pivot( leave, enter );
      }
   }

   void pivot( int row, int col )
   {
      const double piv = t_( row, col );
      t_.row( row ) /= piv;
      rhs_( row ) /= piv;
      for( int i = 0; i < m_; i++ )
      {
         if( i == row ) continue;
         const double f = t_( i, col );
         if( f == 0.0 ) continue;
         t_.row( i ) -= f * t_.row( row );
         rhs_( i ) -= f * rhs_( row );
         if( rhs_( i ) < 0 && rhs_( i ) > -1e-13 ) rhs_( i ) = 0.0;
      }
      const double rc = reduced_( col );
      if( rc != 0.0 ) reduced_ -= rc * t_.row( row ).transpose();
      basis_[row] = col;
   }

   // Pivots basic artificial variables (at level zero) out of the basis where
   // a structural column allows it. Rows that cannot be pivoted are redundant.
   void drive_out_artificials()
   {
      for( int i = 0; i < m_; i++ )
      {
         if( basis_[i] < n_ ) continue;
         int col = -1;
         double best = 1e-9;
         for( int j = 0; j < n_; j++ )
         {
            if( std::abs( t_( i, j ) ) > best )
            {
               best = std::abs( t_( i, j ) );
               col = j;
            }
         }
         if( col >= 0 )
         {
            rhs_( i ) = 0.0;
            reduced_.setZero();   // recomputed by the next optimize()
            pivot( i, col );
         }
      }
   }

   Eigen::VectorXd primal() const
   {
      Eigen::VectorXd x = Eigen::VectorXd::Zero( n_ );
      for( int i = 0; i < m_; i++ )
         if( basis_[i] < n_ ) x( basis_[i] ) = std::max( 0.0, rhs_( i ) );
      return x;
   }

   // y_k = cost(art_k) - reduced(art_k), mapped back through the row signs.
   Eigen::VectorXd duals( const Eigen::VectorXd& cost ) const
   {
      Eigen::VectorXd y( m_ );
      for( int k = 0; k < m_; k++ ) y( k ) = sign_( k ) * ( cost( n_ + k ) - reduced_( n_ + k ) );
      return y;
   }

   double artificial_sum() const
   {
      double sum = 0.0;
      for( int i = 0; i < m_; i++ )
         if( basis_[i] >= n_ ) sum += rhs_( i );
      return sum;
   }

   int m() const { return m_; }
   int n() const { return n_; }

private:
   int m_, n_;
   Eigen::MatrixXd t_;
   Eigen::VectorXd rhs_;
   Eigen::VectorXd rhs0_;
   Eigen::VectorXd sign_;
   Eigen::VectorXd reduced_;
   std::vector<int> basis_;
};

}   // namespace

namespace {

// nullopt when a perturbed run ends on a basis that is infeasible for the
// original right-hand side.
std::optional<LpResult> run_simplex( const StandardFormLp& lp, int max_iterations, bool perturbed )
{
   LpResult result;
   const int m = static_cast<int>( lp.A.rows() );
   const int n = static_cast<int>( lp.A.cols() );
   Tableau tableau( lp );

   auto run = [&]( const Eigen::VectorXd& cost ) -> std::optional<LpStatus> {
      if( perturbed ) tableau.perturb();
      const LpStatus status = tableau.optimize( cost, n, result.iterations, max_iterations );
      if( perturbed && status != LpStatus::IterLimit && !tableau.restore() ) return std::nullopt;
      return status;
   };

   Eigen::VectorXd phase1_cost = Eigen::VectorXd::Zero( n + m );
   phase1_cost.tail( m ).setOnes();
   std::optional<LpStatus> status = run( phase1_cost );
   if( !status ) return std::nullopt;
   if( *status == LpStatus::IterLimit )
   {
      result.status = *status;
      return result;
   }

   const double scale = std::max( 1.0, lp.b.cwiseAbs().maxCoeff() );
   if( tableau.artificial_sum() > 1e-9 * scale )
   {
      result.status = LpStatus::Infeasible;
      result.duals = tableau.duals( phase1_cost );
      result.x = tableau.primal();
      return result;
   }

   tableau.drive_out_artificials();

   Eigen::VectorXd phase2_cost = Eigen::VectorXd::Zero( n + m );
   phase2_cost.head( n ) = lp.c;
   status = run( phase2_cost );
   if( !status ) return std::nullopt;
   result.status = *status;
   result.x = tableau.primal();
   result.objective = lp.c.dot( result.x );
   if( *status == LpStatus::Optimal ) result.duals = tableau.duals( phase2_cost );
   return result;
}

}   // namespace

LpResult solve_standard_form( const StandardFormLp& lp, int max_iterations )
{
   if( lp.A.rows() == 0 )
   {
      // x = 0 is optimal unless some cost is negative
      LpResult result;
      result.x = Eigen::VectorXd::Zero( lp.A.cols() );
      result.duals = Eigen::VectorXd::Zero( 0 );
      result.status = ( lp.c.array() < 0 ).any() ? LpStatus::Unbounded : LpStatus::Optimal;
      return result;
   }
   if( auto result = run_simplex( lp, max_iterations, true ) ) return *result;
   return *run_simplex( lp, max_iterations, false );
}

}   // namespace fecbf
