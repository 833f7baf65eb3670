#include "fecbf/compatibility.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace fecbf {

ConstraintSystem build_centralized_system( std::span<const UavState> states, std::span<const UavLimits> limits,
                                           const SafetyParams& params )
{
   const int n = static_cast<int>( states.size() );
   if( n < 2 ) throw std::invalid_argument( "build_centralized_system: need at least two UAVs" );
   if( static_cast<int>( limits.size() ) != n ) throw std::invalid_argument( "build_centralized_system: limits size" );

   const int rows = n * ( n - 1 ) / 2;
   ConstraintSystem sys;
   sys.C = Eigen::MatrixXd::Zero( rows, 3 * n );
   sys.b.resize( rows );
   sys.pair_index.reserve( rows );

   int row = 0;
   for( int i = 0; i < n; i++ )
      for( int j = i + 1; j < n; j++ )
      {
         const PairwiseCbf cbf = pairwise_coefficients( states[i], states[j], limits[i], limits[j], params );
         sys.C.block<1, 3>( row, 3 * i ) = -cbf.k_ij.transpose();
         sys.C.block<1, 3>( row, 3 * j ) = -cbf.k_ji.transpose();
         sys.b( row ) = cbf.xi;
         sys.pair_index.emplace_back( i, j );
         row++;
      }
   return sys;
}

FarkasOutcome farkas_check( const Eigen::MatrixXd& C, const Eigen::VectorXd& b )
{
   const int cols = static_cast<int>( C.cols() );
   const Eigen::VectorXd free_bound = Eigen::VectorXd::Constant( cols, std::numeric_limits<double>::infinity() );
   const Phase1Result phase1 = phase1_feasibility( C, b, -free_bound, free_bound );

   FarkasOutcome outcome;
   outcome.max_violation = phase1.max_violation;
   if( phase1.feasible )
   {
      const Eigen::VectorXd& u = phase1.witness;
      if( C.rows() > 0 && ( C * u - b ).maxCoeff() > 1e-8 )
         throw LpUndecided( "farkas_check: witness failed re-verification" );
      outcome.verdict = Compatibility::Compatible;
      outcome.witness = u;
      return outcome;
   }

   const Eigen::VectorXd& q = phase1.row_certificate;
   const double q_l1 = q.lpNorm<1>();
   const double c_inf = C.rows() > 0 ? C.cwiseAbs().maxCoeff() : 0.0;
   const bool valid = ( q.array() >= 0 ).all() && q_l1 > 0 &&
                      ( q.transpose() * C ).cwiseAbs().maxCoeff() <= 1e-8 * q_l1 * std::max( c_inf, 1e-300 ) &&
                      q.dot( b ) < -1e-8;
   if( !valid ) throw LpUndecided( "farkas_check: certificate failed re-verification" );
   outcome.verdict = Compatibility::Incompatible;
   outcome.certificate = q;
   return outcome;
}

NullspaceBounds nullspace_dim_bounds( int n )
{
   if( n < 2 ) throw std::invalid_argument( "nullspace_dim_bounds: n >= 2" );
   const long long nn = n;
   return { std::max( 0LL, nn * ( nn - 7 ) / 2 ), nn * ( nn - 1 ) / 2 };
}

int numerical_rank( const Eigen::MatrixXd& matrix, double rel_tol )
{
   if( matrix.size() == 0 ) return 0;
   Eigen::JacobiSVD<Eigen::MatrixXd> svd( matrix );
   const Eigen::VectorXd& sv = svd.singularValues();
   if( sv.size() == 0 || sv( 0 ) == 0.0 ) return 0;
   return static_cast<int>( ( sv.array() > rel_tol * sv( 0 ) ).count() );
}

Eigen::MatrixXd uav_block( const ConstraintSystem& sys, int i )
{
   const int n = sys.uav_count();
   Eigen::MatrixXd block( n - 1, 3 );
   int out = 0;
   for( size_t row = 0; row < sys.pair_index.size(); row++ )
   {
      const auto [a, b] = sys.pair_index[row];
      if( a == i || b == i ) block.row( out++ ) = sys.C.block<1, 3>( row, 3 * i );
   }
   return block;
}

SignConsistency sign_consistency_holds( const ConstraintSystem& sys )
{
   constexpr double kStrict = 1e-12;
   const int n = sys.uav_count();
   SignConsistency result;
   result.per_uav.assign( n, false );
   result.overall = true;
   for( int i = 0; i < n; i++ )
   {
      const Eigen::MatrixXd block = uav_block( sys, i );
      bool ok = true;
      for( int c = 0; c < 3 && ok; c++ )
      {
         const auto col = block.col( c ).array();
         ok = ( col > kStrict ).all() || ( col < -kStrict ).all();
      }
      result.per_uav[i] = ok;
      result.overall = result.overall && ok;
   }
   return result;
}

QpOutcome solve_centralized_qp( std::span<const UavState> states, std::span<const UavLimits> limits,
                                const SafetyParams& params, const Eigen::VectorXd& u_nominal, const QpOptions& options )
{
   const ConstraintSystem sys = build_centralized_system( states, limits, params );
   const int n = sys.uav_count();
   if( u_nominal.size() != 3 * n ) throw std::invalid_argument( "solve_centralized_qp: u_nominal size" );

   QpProblem problem;
   problem.dim = 3 * n;
   problem.target = u_nominal;
   problem.weights = Eigen::VectorXd::Ones( 3 * n );
   problem.ineq_A = sys.C;
   problem.ineq_b = sys.b;
   problem.lower.resize( 3 * n );
   problem.upper.resize( 3 * n );
   for( int i = 0; i < n; i++ )
   {
      problem.lower.segment<3>( 3 * i ) = limits[i].input_lower();
      problem.upper.segment<3>( 3 * i ) = limits[i].input_upper();
   }
   return solve( problem, options );
}

namespace {

void write_dense_array( std::ostream& os, const Eigen::VectorXd& v )
{
   os << "%%MatrixMarket matrix array real general\n";
   os << v.size() << " 1\n";
   for( Eigen::Index i = 0; i < v.size(); i++ ) os << v( i ) << '\n';
}

}   // namespace

void write_compat_dump( std::ostream& os, const ConstraintSystem& sys, const FarkasOutcome& outcome )
{
   const auto precision = os.precision();
   os << std::setprecision( 17 );

   long long nnz = 0;
   for( Eigen::Index r = 0; r < sys.C.rows(); r++ )
      for( Eigen::Index c = 0; c < sys.C.cols(); c++ )
         if( sys.C( r, c ) != 0.0 ) nnz++;

   os << "% section: C\n";
   os << "%%MatrixMarket matrix coordinate real general\n";
   os << sys.C.rows() << ' ' << sys.C.cols() << ' ' << nnz << '\n';
   for( Eigen::Index r = 0; r < sys.C.rows(); r++ )
      for( Eigen::Index c = 0; c < sys.C.cols(); c++ )
         if( sys.C( r, c ) != 0.0 ) os << r + 1 << ' ' << c + 1 << ' ' << sys.C( r, c ) << '\n';

   os << "% section: b\n";
   write_dense_array( os, sys.b );

   os << "% verdict: " << ( outcome.verdict == Compatibility::Compatible ? "compatible" : "incompatible" ) << '\n';
   os << "% max_violation: " << outcome.max_violation << '\n';
   if( outcome.certificate )
   {
      os << "% section: certificate\n";
      write_dense_array( os, *outcome.certificate );
   }
   if( outcome.witness )
   {
      os << "% section: witness\n";
      write_dense_array( os, *outcome.witness );
   }
   os.precision( precision );
}

}   // namespace fecbf
