#include "fecbf/compatibility.hpp"

#include "../support/formations.hpp"
#include "../support/generators.hpp"
#include "oracles/oracles.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace fecbf;

namespace {

struct Swarm
{
   std::vector<UavState> states;
   std::vector<UavLimits> limits;
};

Swarm random_swarm( testkit::Gen& gen, int n, double box )
{
   Swarm s;
   for( int i = 0; i < n; i++ )
   {
      s.limits.push_back( gen.limits() );
      s.states.push_back( gen.state( s.limits.back(), box ) );
   }
   return s;
}

UavState at( Eigen::Vector3d p, double yaw, double speed = 2.0 )
{
   UavState s;
   s.position = p;
   s.yaw = yaw;
   s.speed = speed;
   return s;
}

}   // namespace

TEST( CentralizedSystem, ShapesAndPairOrder )
{
   testkit::Gen gen( 41 );
   const Swarm two = random_swarm( gen, 2, 50 );
   const ConstraintSystem s2 = build_centralized_system( two.states, two.limits, {} );
   EXPECT_EQ( s2.C.rows(), 1 );
   EXPECT_EQ( s2.C.cols(), 6 );
   EXPECT_EQ( s2.b.size(), 1 );

   const Swarm seven = random_swarm( gen, 7, 50 );
   const ConstraintSystem s7 = build_centralized_system( seven.states, seven.limits, {} );
   EXPECT_EQ( s7.C.rows(), 21 );
   EXPECT_EQ( s7.C.cols(), 21 );
   EXPECT_EQ( s7.uav_count(), 7 );
   ASSERT_EQ( s7.pair_index.size(), 21u );
   EXPECT_EQ( s7.pair_index.front(), std::make_pair( 0, 1 ) );
   EXPECT_EQ( s7.pair_index[6], std::make_pair( 1, 2 ) );
   EXPECT_EQ( s7.pair_index.back(), std::make_pair( 5, 6 ) );
   for( int r = 0; r < 21; r++ )
   {
      const auto [i, j] = s7.pair_index[r];
      for( int k = 0; k < 7; k++ )
      {
         const double blk = s7.C.block<1, 3>( r, 3 * k ).norm();
         if( k == i || k == j )
            EXPECT_GT( blk, 0.0 );
         else
            EXPECT_EQ( blk, 0.0 );
      }
   }
}

TEST( CentralizedSystem, RejectsSingleVehicle )
{
   const std::vector<UavState> one( 1, at( { 0, 0, 0 }, 0 ) );
   const std::vector<UavLimits> lim( 1, UavLimits::with_max_speed( 2.5 ) );
   EXPECT_THROW( build_centralized_system( one, lim, {} ), std::invalid_argument );
}

TEST( CentralizedSystem, RowsAreNegatedBarrierCondition )
{
   testkit::Gen gen( 42 );
   const SafetyParams params;
   for( int trial = 0; trial < 30; trial++ )
   {
      const int n = gen.integer( 2, 6 );
      const Swarm sw = random_swarm( gen, n, 20 );
      const ConstraintSystem sys = build_centralized_system( sw.states, sw.limits, params );
      std::vector<ControlInput> inputs;
      Eigen::VectorXd u( 3 * n );
      for( int i = 0; i < n; i++ )
      {
         inputs.push_back( gen.input( sw.limits[i] ) );
         u.segment<3>( 3 * i ) = inputs.back().as_vector();
      }
      const Eigen::VectorXd lhs = sys.C * u - sys.b;
      for( int r = 0; r < sys.C.rows(); r++ )
      {
         const auto [i, j] = sys.pair_index[r];
         const PairwiseCbf cbf = pairwise_coefficients( sw.states[i], sw.states[j], sw.limits[i], sw.limits[j], params );
         const double cond = cbf.k_ij.dot( u.segment<3>( 3 * i ) ) + cbf.k_ji.dot( u.segment<3>( 3 * j ) ) + cbf.xi;
         EXPECT_NEAR( lhs( r ), -cond, 1e-10 * ( 1 + std::abs( cond ) ) );

         // and cond really is hdot + kappa h along the flow
         const double hdot = oracle::finite_difference_hdot( sw.states[i], inputs[i], sw.limits[i], sw.states[j],
                                                             inputs[j], sw.limits[j], params );
         EXPECT_NEAR( cond, hdot + params.kappa * cbf.h, 1e-3 * std::max( 1.0, std::abs( hdot ) ) );
      }
   }
}

TEST( FarkasCheck, ContradictoryHalfLines )
{
   Eigen::MatrixXd C( 2, 1 );
   C << 1, -1;
   const FarkasOutcome out = farkas_check( C, Eigen::Vector2d( -1, -1 ) );
   ASSERT_EQ( out.verdict, Compatibility::Incompatible );
   ASSERT_TRUE( out.certificate.has_value() );
   EXPECT_FALSE( out.witness.has_value() );
   // q is reported with unit l1 norm, so [1, 1] appears as [0.5, 0.5]
   EXPECT_NEAR( ( *out.certificate )( 0 ), 0.5, 1e-12 );
   EXPECT_NEAR( ( *out.certificate )( 1 ), 0.5, 1e-12 );
   EXPECT_NEAR( out.certificate->dot( Eigen::Vector2d( -1, -1 ) ), -1.0, 1e-12 );
}

TEST( FarkasCheck, SingleRowAtOrigin )
{
   const FarkasOutcome out = farkas_check( Eigen::MatrixXd::Ones( 1, 1 ), Eigen::VectorXd::Zero( 1 ) );
   ASSERT_EQ( out.verdict, Compatibility::Compatible );
   ASSERT_TRUE( out.witness.has_value() );
   EXPECT_FALSE( out.certificate.has_value() );
   EXPECT_LE( ( *out.witness )( 0 ), 1e-8 );
}

TEST( FarkasCheck, EmptySystemIsCompatible )
{
   const FarkasOutcome out = farkas_check( Eigen::MatrixXd( 0, 3 ), Eigen::VectorXd( 0 ) );
   EXPECT_EQ( out.verdict, Compatibility::Compatible );
}

TEST( FarkasCheck, ExactlyOneValidAlternative )
{
   testkit::Gen gen( 43 );
   int incompatible = 0;
   for( int k = 0; k < 300; k++ )
   {
      const int rows = gen.integer( 5, 40 ), cols = gen.integer( 3, 12 );
      const Eigen::MatrixXd C = gen.gaussian( rows, cols );
      Eigen::VectorXd b = gen.gaussian( rows );
      if( gen.coin() ) b.array() -= 1.0;
      const FarkasOutcome out = farkas_check( C, b );
      ASSERT_NE( out.witness.has_value(), out.certificate.has_value() );
      const oracle::SimplexVerdict ref = oracle::primal_phase1(
         C, b, Eigen::VectorXd::Constant( cols, -INFINITY ), Eigen::VectorXd::Constant( cols, INFINITY ) );
      ASSERT_EQ( out.verdict == Compatibility::Compatible, ref.feasible ) << "case " << k;
      if( out.witness )
         EXPECT_LE( ( C * *out.witness - b ).maxCoeff(), 1e-8 );
      else
      {
         incompatible++;
         const Eigen::VectorXd& q = *out.certificate;
         EXPECT_GE( q.minCoeff(), 0.0 );
         EXPECT_NEAR( q.lpNorm<1>(), 1.0, 1e-9 );
         EXPECT_LE( ( q.transpose() * C ).cwiseAbs().maxCoeff(), 1e-8 * C.cwiseAbs().maxCoeff() );
         EXPECT_LT( q.dot( b ), -1e-8 );
      }
   }
   EXPECT_GT( incompatible, 20 );
}

TEST( FarkasCheck, LargeSwarmSystemsAreDecided )
{
   // hundreds of rows against few columns: the LP is heavily degenerate
   testkit::Gen gen( 46 );
   for( int n : { 20, 30 } )
      for( int trial = 0; trial < 4; trial++ )
      {
         const Swarm sw = random_swarm( gen, n, 10.0 * n );
         const ConstraintSystem sys = build_centralized_system( sw.states, sw.limits, {} );
         FarkasOutcome out;
         ASSERT_NO_THROW( out = farkas_check( sys ) ) << "n=" << n << " trial " << trial;
         const oracle::SimplexVerdict ref = oracle::primal_phase1(
            sys.C, sys.b, Eigen::VectorXd::Constant( 3 * n, -INFINITY ), Eigen::VectorXd::Constant( 3 * n, INFINITY ) );
         EXPECT_EQ( out.verdict == Compatibility::Compatible, ref.feasible );
      }
}

TEST( FarkasCheck, DumpHasEverySection )
{
   Eigen::MatrixXd C( 2, 1 );
   C << 1, -1;
   ConstraintSystem sys { C, Eigen::Vector2d( -1, -1 ), { { 0, 1 }, { 0, 1 } } };
   std::ostringstream os;
   write_compat_dump( os, sys, farkas_check( sys ) );
   const std::string text = os.str();
   for( const char* needle : { "section: C", "section: b", "section: certificate", "verdict: incompatible" } )
      EXPECT_NE( text.find( needle ), std::string::npos ) << needle;
}

TEST( NullspaceBounds, Examples )
{
   EXPECT_EQ( nullspace_dim_bounds( 7 ).lower, 0 );
   EXPECT_EQ( nullspace_dim_bounds( 7 ).upper, 21 );
   EXPECT_EQ( nullspace_dim_bounds( 2 ).lower, 0 );
   EXPECT_EQ( nullspace_dim_bounds( 2 ).upper, 1 );
   EXPECT_EQ( nullspace_dim_bounds( 150 ).lower, 10725 );
   EXPECT_EQ( nullspace_dim_bounds( 150 ).upper, 11175 );
   EXPECT_THROW( nullspace_dim_bounds( 1 ), std::invalid_argument );
}

TEST( NullspaceBounds, RankOfRealSystemsFitsSandwich )
{
   testkit::Gen gen( 44 );
   for( int n : { 3, 7, 10, 14 } )
      for( int trial = 0; trial < 10; trial++ )
      {
         const Swarm sw = random_swarm( gen, n, 80 );
         const ConstraintSystem sys = build_centralized_system( sw.states, sw.limits, {} );
         const long long null_dim = sys.C.rows() - numerical_rank( sys.C );
         const NullspaceBounds nb = nullspace_dim_bounds( n );
         EXPECT_GE( null_dim, nb.lower ) << "n=" << n;
         EXPECT_LE( null_dim, nb.upper ) << "n=" << n;
      }
}

TEST( NumericalRank, Examples )
{
   EXPECT_EQ( numerical_rank( Eigen::Matrix3d::Identity() ), 3 );
   Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
   m( 2, 2 ) = 1e-13;
   EXPECT_EQ( numerical_rank( m ), 2 );
   EXPECT_EQ( numerical_rank( Eigen::MatrixXd::Zero( 4, 2 ) ), 0 );
}

TEST( SignConsistency, ZeroEntryBreaksStrictness )
{
   ConstraintSystem sys;
   sys.C = Eigen::MatrixXd::Zero( 1, 6 );
   sys.C.block<1, 3>( 0, 0 ) << 1, -2, 0;
   sys.C.block<1, 3>( 0, 3 ) << 1, 1, 1;
   sys.b = Eigen::VectorXd::Ones( 1 );
   sys.pair_index = { { 0, 1 } };
   const SignConsistency sc = sign_consistency_holds( sys );
   EXPECT_FALSE( sc.per_uav[0] );
   EXPECT_TRUE( sc.per_uav[1] );
   EXPECT_FALSE( sc.overall );
}

TEST( SignConsistency, MixedColumnSignsFail )
{
   // vehicle 0 sits between the other two along its heading
   const std::vector<UavState> states { at( { 0, 0, 0 }, 0 ), at( { 20, 3, 3 }, 0 ), at( { -20, 3, 3 }, 0 ) };
   const std::vector<UavLimits> lim( 3, UavLimits::with_max_speed( 2.5 ) );
   const ConstraintSystem sys = build_centralized_system( states, lim, {} );
   EXPECT_EQ( uav_block( sys, 0 ).rows(), 2 );
   EXPECT_FALSE( sign_consistency_holds( sys ).per_uav[0] );
}

TEST( SignConsistency, ConsistentFormationsAreCompatible )
{
   testkit::Gen gen( 45 );
   const SafetyParams params;
   int built = 0;
   for( int attempt = 0; attempt < 2000 && built < 200; attempt++ )
   {
      const int n = gen.integer( 2, 4 );
      const auto f = testkit::sign_consistent_formation( gen, n, params );
      if( !f ) continue;
      built++;
      const ConstraintSystem sys = build_centralized_system( f->states, f->limits, params );
      ASSERT_TRUE( sign_consistency_holds( sys ).overall );
      EXPECT_EQ( farkas_check( sys ).verdict, Compatibility::Compatible );
   }
   EXPECT_EQ( built, 200 );
}

TEST( CentralizedQp, DistantPairKeepsNominal )
{
   const std::vector<UavState> states { at( { 0, 0, 200 }, 0 ), at( { 500, 500, 200 }, 0 ) };
   const std::vector<UavLimits> lim( 2, UavLimits::with_max_speed( 2.5 ) );
   Eigen::VectorXd nominal( 6 );
   nominal << 0.5, 0.01, -0.02, -0.3, 0.0, 0.05;
   const QpOutcome out = solve_centralized_qp( states, lim, {}, nominal );
   ASSERT_EQ( out.status, QpStatus::Optimal );
   EXPECT_LT( ( *out.solution - nominal ).norm(), 1e-12 );
}

TEST( CentralizedQp, ActivePairMatchesKktOracle )
{
   testkit::Gen gen( 46 );
   int active = 0;
   for( int k = 0; k < 200; k++ )
   {
      // head-on pair at the range where the barrier row starts to bind
      const UavLimits lim = UavLimits::with_max_speed( 2.5 );
      UavState a = at( { 0, 0, 0 }, gen.uniform( -0.3, 0.3 ), gen.uniform( 1.0, 2.5 ) );
      UavState b = at( { gen.uniform( 70, 120 ), gen.uniform( -10, 10 ), gen.uniform( -10, 10 ) }, M_PI + gen.uniform( -0.3, 0.3 ),
                       gen.uniform( 1.0, 2.5 ) );
      const std::vector<UavState> states { a, b };
      const std::vector<UavLimits> lims { lim, lim };
      Eigen::VectorXd nominal( 6 );
      nominal << 1, 0, 0, 1, 0, 0;
      const QpOutcome out = solve_centralized_qp( states, lims, {}, nominal );

      const ConstraintSystem sys = build_centralized_system( states, lims, {} );
      QpProblem p = QpProblem::projection( nominal );
      p.ineq_A = sys.C;
      p.ineq_b = sys.b;
      p.lower << lim.input_lower(), lim.input_lower();
      p.upper << lim.input_upper(), lim.input_upper();
      const oracle::KktVerdict ref = oracle::kkt_enumeration( p );
      ASSERT_EQ( out.status == QpStatus::Optimal, ref.feasible ) << "case " << k;
      if( !ref.feasible ) continue;
      if( ( *out.solution - nominal ).norm() > 1e-9 ) active++;
      EXPECT_LT( ( *out.solution - ref.x ).cwiseAbs().maxCoeff(), 1e-6 ) << "case " << k;
   }
   EXPECT_GT( active, 20 );
}

TEST( CentralizedQp, DeepOverlapIsInfeasible )
{
   // virtual points half a metre apart and closing: the barrier is far below zero and bounded
   // inputs cannot restore it
   const std::vector<UavState> states { at( { 0, 0, 0 }, 0, 2.5 ), at( { 3, 0, 0 }, M_PI, 2.5 ) };
   const std::vector<UavLimits> lim( 2, UavLimits::with_max_speed( 2.5 ) );
   const QpOutcome out = solve_centralized_qp( states, lim, {}, Eigen::VectorXd::Zero( 6 ) );
   EXPECT_EQ( out.status, QpStatus::Infeasible );
}

TEST( CentralizedQp, RejectsWrongNominalSize )
{
   const std::vector<UavState> states { at( { 0, 0, 0 }, 0 ), at( { 50, 0, 0 }, 0 ) };
   const std::vector<UavLimits> lim( 2, UavLimits::with_max_speed( 2.5 ) );
   EXPECT_THROW( solve_centralized_qp( states, lim, {}, Eigen::VectorXd::Zero( 5 ) ), std::invalid_argument );
}
