#include "fecbf/qp.hpp"

#include "fecbf/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace fecbf {

QpProblem QpProblem::projection( const Eigen::VectorXd& target )
{
   QpProblem p;
   p.dim = static_cast<int>( target.size() );
   p.target = target;
   p.weights = Eigen::VectorXd::Ones( p.dim );
   p.ineq_A = Eigen::MatrixXd::Zero( 0, p.dim );
   p.ineq_b = Eigen::VectorXd::Zero( 0 );
   p.lower = Eigen::VectorXd::Constant( p.dim, -std::numeric_limits<double>::infinity() );
   p.upper = Eigen::VectorXd::Constant( p.dim, std::numeric_limits<double>::infinity() );
   return p;
}

void QpProblem::validate() const
{
   auto require = []( bool ok, const char* what ) {
      if( !ok ) throw std::invalid_argument( std::string( "QpProblem: " ) + what );
   };
   require( dim >= 0, "dim >= 0" );
   require( target.size() == dim && weights.size() == dim, "target/weights size" );
   require( lower.size() == dim && upper.size() == dim, "bound size" );
   require( ineq_A.cols() == dim && ineq_A.rows() == ineq_b.size(), "ineq shape" );
   require( ( weights.array() > 0 ).all(), "weights must be positive" );
   require( ( lower.array() <= upper.array() ).all(), "lower <= upper" );
}

const char* to_string( QpStatus status )
{
   switch( status )
   {
   case QpStatus::Optimal: return "optimal";
   case QpStatus::Infeasible: return "infeasible";
   case QpStatus::IterLimit: return "iter_limit";
   }
   return "?";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// All constraints as sparse rows a^T x <= rhs, indexed by constraint id.
struct RowSet
{
   std::vector<int> start;
   std::vector<int> col;
   std::vector<double> val;
   std::vector<double> rhs;
   std::vector<double> norm;
   std::vector<char> present;

   int size() const { return static_cast<int>( rhs.size() ); }

   double dot( int r, const Eigen::VectorXd& x ) const
   {
      double s = 0.0;
      for( int e = start[r]; e < start[r + 1]; e++ ) s += val[e] * x( col[e] );
      return s;
   }

   void add( int r, double scale, Eigen::VectorXd& out ) const
   {
      for( int e = start[r]; e < start[r + 1]; e++ ) out( col[e] ) += scale * val[e];
   }
};

RowSet build_rows( const QpProblem& p )
{
   const int m = static_cast<int>( p.ineq_A.rows() );
   RowSet rows;
   rows.start.reserve( m + 2 * p.dim + 1 );
   rows.start.push_back( 0 );
   for( int r = 0; r < m; r++ )
   {
      double sq = 0.0;
      for( int c = 0; c < p.dim; c++ )
      {
         const double v = p.ineq_A( r, c );
         if( v == 0.0 ) continue;
         rows.col.push_back( c );
         rows.val.push_back( v );
         sq += v * v;
      }
      rows.start.push_back( static_cast<int>( rows.col.size() ) );
      rows.rhs.push_back( p.ineq_b( r ) );
      rows.norm.push_back( std::sqrt( sq ) );
      rows.present.push_back( 1 );
   }
   for( int side = 0; side < 2; side++ )
   {
      for( int c = 0; c < p.dim; c++ )
      {
         const double bound = side == 0 ? p.upper( c ) : p.lower( c );
         const bool finite = std::isfinite( bound );
         if( finite )
         {
            rows.col.push_back( c );
            rows.val.push_back( side == 0 ? 1.0 : -1.0 );
         }
         rows.start.push_back( static_cast<int>( rows.col.size() ) );
         rows.rhs.push_back( finite ? ( side == 0 ? bound : -bound ) : 0.0 );
         rows.norm.push_back( 1.0 );
         rows.present.push_back( finite ? 1 : 0 );
      }
   }
   return rows;
}

// Solves M y = r for M = A_S H^{-1} A_S^T. Columns touched by exactly one
// active row contribute a diagonal term D; the remaining (shared) columns are
// handled through the k x k matrix K = V^{-1} + B_P^T D_P^{-1} B_P and the
// Schur complement of the rows without private columns.
class ActiveFactor
{
public:
   explicit ActiveFactor( int dim )
      : count_( dim, 0 )
      , col_pos_( dim, -1 )
   {
   }

   void build( const RowSet& rows, const std::vector<int>& active, const Eigen::VectorXd& hinv )
   {
      const int s = static_cast<int>( active.size() );
      touched_.clear();
      for( int a : active )
         for( int e = rows.start[a]; e < rows.start[a + 1]; e++ )
         {
            if( count_[rows.col[e]]++ == 0 ) touched_.push_back( rows.col[e] );
         }

      diag_.assign( s, 0.0 );
      for( int idx = 0; idx < s; idx++ )
      {
         const int a = active[idx];
         double priv = 0.0, shared = 0.0;
         for( int e = rows.start[a]; e < rows.start[a + 1]; e++ )
         {
            const double w = rows.val[e] * rows.val[e] * hinv( rows.col[e] );
            ( count_[rows.col[e]] == 1 ? priv : shared ) += w;
         }
         if( priv > 0 && priv < 1e-8 * shared )
         {
            // negligible private part: treat those columns as shared
            for( int e = rows.start[a]; e < rows.start[a + 1]; e++ )
               if( count_[rows.col[e]] == 1 ) count_[rows.col[e]] = 2;
            priv = 0.0;
         }
         diag_[idx] = priv;
      }

      shared_cols_.clear();
      for( int c : touched_ )
         if( count_[c] >= 2 )
         {
            col_pos_[c] = static_cast<int>( shared_cols_.size() );
            shared_cols_.push_back( c );
         }
      const int k = static_cast<int>( shared_cols_.size() );

      b_.setZero( s, k );
      for( int idx = 0; idx < s; idx++ )
      {
         const int a = active[idx];
         for( int e = rows.start[a]; e < rows.start[a + 1]; e++ )
         {
            const int pos = col_pos_[rows.col[e]];
            if( pos >= 0 ) b_( idx, pos ) = rows.val[e];
         }
      }
      soft_.clear();
      hard_.clear();
      for( int idx = 0; idx < s; idx++ ) ( diag_[idx] > 0 ? soft_ : hard_ ).push_back( idx );

      vinv_.resize( k );
      for( int j = 0; j < k; j++ ) vinv_( j ) = 1.0 / hinv( shared_cols_[j] );
      diagonal_k_ = soft_.empty();
      if( !diagonal_k_ )
      {
         // lower triangle only, which is all LLT reads
         kmat_.setZero( k, k );
         kmat_.diagonal() = vinv_;
         for( int idx : soft_ )
         {
            const double w = 1.0 / diag_[idx];
            for( int a = 0; a < k; a++ )
            {
               const double ba = w * b_( idx, a );
               if( ba == 0.0 ) continue;
               for( int c = 0; c <= a; c++ ) kmat_( a, c ) += ba * b_( idx, c );
            }
         }
         kfactor_.compute( kmat_ );
      }

      const int q = static_cast<int>( hard_.size() );
      kinv_bq_.resize( k, q );
      for( int j = 0; j < q; j++ ) kinv_bq_.col( j ) = apply_kinv( b_.row( hard_[j] ).transpose() );
      if( q > 0 )
      {
         Eigen::MatrixXd schur( q, q );
         for( int i = 0; i < q; i++ )
            for( int j = 0; j < q; j++ ) schur( i, j ) = b_.row( hard_[i] ).dot( kinv_bq_.col( j ) );
         sfactor_.compute( schur );
      }

      for( int c : touched_ )
      {
         count_[c] = 0;
         col_pos_[c] = -1;
      }
   }

   void solve( const Eigen::VectorXd& r, Eigen::VectorXd& y )
   {
      const int k = static_cast<int>( shared_cols_.size() );
      f_.setZero( k );
      for( int idx : soft_ ) f_ += ( r( idx ) / diag_[idx] ) * b_.row( idx ).transpose();
      z_ = apply_kinv( f_ );

      y.resize( r.size() );
      if( !hard_.empty() )
      {
         const int q = static_cast<int>( hard_.size() );
         rq_.resize( q );
         for( int j = 0; j < q; j++ ) rq_( j ) = r( hard_[j] ) - b_.row( hard_[j] ).dot( z_ );
         const Eigen::VectorXd yq = sfactor_.solve( rq_ );
         z_ += kinv_bq_ * yq;
         for( int j = 0; j < q; j++ ) y( hard_[j] ) = yq( j );
      }
      for( int idx : soft_ ) y( idx ) = ( r( idx ) - b_.row( idx ).dot( z_ ) ) / diag_[idx];
   }

private:
   Eigen::VectorXd apply_kinv( const Eigen::VectorXd& v ) const
   {
      if( diagonal_k_ ) return v.cwiseQuotient( vinv_ );
      return kfactor_.solve( v );
   }

   std::vector<int> count_;
   std::vector<int> col_pos_;
   std::vector<int> touched_;
   std::vector<int> shared_cols_;
   std::vector<double> diag_;
   std::vector<int> soft_;
   std::vector<int> hard_;
   Eigen::MatrixXd b_;
   Eigen::MatrixXd kmat_;
   Eigen::VectorXd vinv_;
   Eigen::VectorXd f_, z_, rq_;
   bool diagonal_k_ = true;
   Eigen::LLT<Eigen::MatrixXd> kfactor_;
   Eigen::MatrixXd kinv_bq_;
   Eigen::LLT<Eigen::MatrixXd> sfactor_;
};

// y >= 0 over constraint ids with y^T A ~ 0 and y^T b < 0.
bool verify_certificate( const RowSet& rows, const std::vector<std::pair<int, double>>& y, int dim )
{
   Eigen::VectorXd resid = Eigen::VectorXd::Zero( dim );
   double yb = 0.0, l1 = 0.0, amax = 0.0, bmax = 0.0;
   for( const auto& [id, weight] : y )
   {
      if( weight < 0 ) return false;
      rows.add( id, weight, resid );
      yb += weight * rows.rhs[id];
      l1 += weight;
      for( int e = rows.start[id]; e < rows.start[id + 1]; e++ ) amax = std::max( amax, std::abs( rows.val[e] ) );
      bmax = std::max( bmax, std::abs( rows.rhs[id] ) );
   }
   if( l1 <= 0 ) return false;
   const double resid_norm = dim > 0 ? resid.cwiseAbs().maxCoeff() : 0.0;
   return resid_norm <= 1e-8 * l1 * std::max( 1.0, amax ) && yb < -1e-12 * l1 * ( 1.0 + bmax );
}

QpOutcome infeasible_or_undecided( const QpProblem& p, const RowSet& rows, const std::vector<std::pair<int, double>>& y,
                                   int iterations )
{
   QpOutcome out;
   out.iterations = iterations;
   if( verify_certificate( rows, y, p.dim ) )
   {
      out.status = QpStatus::Infeasible;
      return out;
   }
   // the dual certificate did not survive re-verification: let the phase-I LP decide
   const Phase1Result phase1 = phase1_feasibility( p.ineq_A, p.ineq_b, p.lower, p.upper );
   out.status = phase1.feasible ? QpStatus::IterLimit : QpStatus::Infeasible;
   return out;
}

}   // namespace

QpOutcome solve( const QpProblem& p, const QpOptions& options )
{
   p.validate();
   const int m = static_cast<int>( p.ineq_A.rows() );
   const int dim = p.dim;
   RowSet rows = build_rows( p );
   const int total = rows.size();

   const Eigen::VectorXd hinv = ( 2.0 * p.weights ).cwiseInverse();
   Eigen::VectorXd x = p.target;

   std::vector<double> tol( total );
   for( int r = 0; r < total; r++ )
   {
      tol[r] = options.feasibility_tol * ( rows.norm[r] + std::abs( rows.rhs[r] ) );
      if( rows.present[r] && rows.norm[r] == 0.0 )
      {
         rows.present[r] = 0;
         if( rows.rhs[r] < -tol[r] ) return infeasible_or_undecided( p, rows, { { r, 1.0 } }, 0 );
      }
   }

   std::vector<int> active;
   std::vector<double> mu;
   std::vector<char> is_active( total, 0 );
   ActiveFactor factor( dim );
   Eigen::VectorXd ap( dim ), v( dim ), z( dim ), hap( dim ), r, g;
   int iterations = 0;

   auto drop = [&]( int idx ) {
      is_active[active[idx]] = 0;
      active.erase( active.begin() + idx );
      mu.erase( mu.begin() + idx );
   };

   while( true )
   {
      int p_id = -1;
      double worst = 0.0;
      for( int r = 0; r < total; r++ )
      {
         if( !rows.present[r] || is_active[r] ) continue;
         const double viol = rows.dot( r, x ) - rows.rhs[r];
         if( viol <= tol[r] ) continue;
         const double scaled = viol / rows.norm[r];
         if( scaled > worst )
         {
            worst = scaled;
            p_id = r;
         }
      }
      if( p_id < 0 ) break;

      double mu_p = 0.0;
      ap.setZero();
      rows.add( p_id, 1.0, ap );
      const double ap_norm = ap.cwiseAbs2().dot( hinv );

      while( true )
      {
         if( ++iterations > options.max_iterations )
         {
            QpOutcome out;
            out.status = QpStatus::IterLimit;
            out.iterations = iterations;
            return out;
         }

         const int s = static_cast<int>( active.size() );
         r.setZero( s );
         if( s > 0 )
         {
            factor.build( rows, active, hinv );
            hap = hinv.cwiseProduct( ap );
            g.resize( s );
            for( int idx = 0; idx < s; idx++ ) g( idx ) = rows.dot( active[idx], hap );
            factor.solve( g, r );
         }

         v = ap;
         for( int idx = 0; idx < s; idx++ ) rows.add( active[idx], -r( idx ), v );
         const double curvature = v.cwiseAbs2().dot( hinv );
         z = -hinv.cwiseProduct( v );

         double t_partial = kInf;
         int block = -1;
         const double r_eps = 1e-12 * std::max( 1.0, s > 0 ? r.cwiseAbs().maxCoeff() : 0.0 );
         for( int idx = 0; idx < s; idx++ )
         {
            if( r( idx ) <= r_eps ) continue;
            const double ratio = mu[idx] / r( idx );
            if( ratio < t_partial )
            {
               t_partial = ratio;
               block = idx;
            }
         }

         // Below this ratio the update is dominated by rounding in r.
         if( !( curvature > 1e-9 * ap_norm ) )
         {
            // a_p lies in the span of the active rows
            if( block < 0 )
            {
               std::vector<std::pair<int, double>> y { { p_id, 1.0 } };
               for( int idx = 0; idx < s; idx++ ) y.emplace_back( active[idx], std::max( 0.0, -r( idx ) ) );
               return infeasible_or_undecided( p, rows, y, iterations );
            }
            for( int idx = 0; idx < s; idx++ ) mu[idx] = std::max( 0.0, mu[idx] - t_partial * r( idx ) );
            mu_p += t_partial;
            drop( block );
            continue;
         }

         const double t_full = std::max( 0.0, rows.dot( p_id, x ) - rows.rhs[p_id] ) / curvature;
         const double step = std::min( t_full, t_partial );
         x += step * z;
         for( int idx = 0; idx < s; idx++ ) mu[idx] = std::max( 0.0, mu[idx] - step * r( idx ) );
         mu_p += step;
         if( t_full <= t_partial )
         {
            active.push_back( p_id );
            mu.push_back( mu_p );
            is_active[p_id] = 1;
            break;
         }
         mu[block] = 0.0;
         drop( block );
      }
   }

   QpOutcome out;
   out.status = QpStatus::Optimal;
   out.iterations = iterations;

   Eigen::VectorXd grad = 2.0 * p.weights.cwiseProduct( x - p.target );
   out.multipliers = Eigen::VectorXd::Zero( m );
   std::vector<int> ids = active;
   for( size_t idx = 0; idx < active.size(); idx++ )
   {
      rows.add( active[idx], mu[idx], grad );
      if( active[idx] < m ) out.multipliers( active[idx] ) = mu[idx];
   }
   std::sort( ids.begin(), ids.end() );
   out.kkt_residual = dim > 0 ? grad.cwiseAbs().maxCoeff() : 0.0;

   x = x.cwiseMax( p.lower ).cwiseMin( p.upper );
   out.objective = p.weights.dot( ( x - p.target ).cwiseAbs2() );
   out.solution = std::move( x );
   out.active_set = std::move( ids );
   return out;
}

Phase1Result phase1_feasibility( const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& lower,
                                 const Eigen::VectorXd& upper, double tol )
{
   const int m = static_cast<int>( A.rows() );
   const int dim = static_cast<int>( A.cols() );
   if( b.size() != m || lower.size() != dim || upper.size() != dim )
      throw std::invalid_argument( "phase1_feasibility: inconsistent shapes" );

   Phase1Result result;
   result.row_certificate = Eigen::VectorXd::Zero( m );
   result.upper_certificate = Eigen::VectorXd::Zero( dim );
   result.lower_certificate = Eigen::VectorXd::Zero( dim );

   // stacked normalized rows g_j^T x <= h_j; kind 0 = A row, 1 = upper, 2 = lower
   struct Source
   {
      int kind;
      int index;
      double norm;
   };
   std::vector<Source> sources;
   std::vector<Eigen::VectorXd> g;
   std::vector<double> h;
   for( int r = 0; r < m; r++ )
   {
      const double norm = A.row( r ).norm();
      if( norm == 0.0 )
      {
         if( b( r ) < -tol )
         {
            result.feasible = false;
            result.max_violation = -b( r );
            result.row_certificate( r ) = 1.0;
            return result;
         }
         continue;
      }
      sources.push_back( { 0, r, norm } );
      g.push_back( A.row( r ).transpose() / norm );
      h.push_back( b( r ) / norm );
   }
   for( int c = 0; c < dim; c++ )
   {
      if( std::isfinite( upper( c ) ) )
      {
         sources.push_back( { 1, c, 1.0 } );
         g.push_back( Eigen::VectorXd::Unit( dim, c ) );
         h.push_back( upper( c ) );
      }
      if( std::isfinite( lower( c ) ) )
      {
         sources.push_back( { 2, c, 1.0 } );
         g.push_back( -Eigen::VectorXd::Unit( dim, c ) );
         h.push_back( -lower( c ) );
      }
   }

   const int rows = static_cast<int>( g.size() );
   auto violation_of = [&]( const Eigen::VectorXd& x ) {
      double worst = -kInf;
      for( int j = 0; j < rows; j++ ) worst = std::max( worst, g[j].dot( x ) - h[j] );
      return worst;
   };

   if( rows == 0 )
   {
      result.feasible = true;
      result.max_violation = -kInf;
      result.witness = Eigen::VectorXd::Zero( dim );
      return result;
   }

   // dual of  min t  s.t.  g_j^T x - t <= h_j :
   //    min h^T q  s.t.  G^T q = 0,  1^T q = 1,  q >= 0
   StandardFormLp lp;
   lp.A.resize( dim + 1, rows );
   for( int j = 0; j < rows; j++ )
   {
      lp.A.col( j ).head( dim ) = g[j];
      lp.A( dim, j ) = 1.0;
   }
   lp.b = Eigen::VectorXd::Zero( dim + 1 );
   lp.b( dim ) = 1.0;
   lp.c = Eigen::Map<const Eigen::VectorXd>( h.data(), rows );

   const LpResult lp_result = solve_standard_form( lp );
   switch( lp_result.status )
   {
   case LpStatus::IterLimit: throw LpUndecided( "phase-I LP hit its iteration limit" );
   case LpStatus::Unbounded: throw LpUndecided( "phase-I dual LP reported unbounded" );
   case LpStatus::Infeasible:
   {
      // no q: the system is strictly feasible along the Farkas ray of the dual
      const Eigen::VectorXd y_u = lp_result.duals.head( dim );
      const double y_tau = lp_result.duals( dim );
      if( !( y_tau > 0 ) ) throw LpUndecided( "phase-I ray has non-positive scale" );
      double need = 0.0;
      for( int j = 0; j < rows; j++ ) need = std::max( need, -h[j] );
      result.witness = ( ( need + 1.0 ) / y_tau ) * y_u;
      result.max_violation = violation_of( result.witness );
      result.feasible = result.max_violation <= tol;
      if( !result.feasible ) throw LpUndecided( "phase-I ray failed re-verification" );
      return result;
   }
   case LpStatus::Optimal: break;
   }

   const double t_star = -lp_result.objective;
   result.max_violation = t_star;
   if( t_star <= tol )
   {
      result.feasible = true;
      result.witness = lp_result.duals.head( dim );
      return result;
   }

   result.feasible = false;
   double l1 = 0.0;
   for( int j = 0; j < rows; j++ )
   {
      const double q = lp_result.x( j ) / sources[j].norm;
      l1 += q;
      switch( sources[j].kind )
      {
      case 0: result.row_certificate( sources[j].index ) = q; break;
      case 1: result.upper_certificate( sources[j].index ) = q; break;
      default: result.lower_certificate( sources[j].index ) = q; break;
      }
   }
   result.row_certificate /= l1;
   result.upper_certificate /= l1;
   result.lower_certificate /= l1;
   return result;
}

}   // namespace fecbf
