// Serial against OpenMP execution of the two parallel kernels: the per-step
// vehicle decisions inside one trial, and independent Monte-Carlo trials.

#include "fecbf/metrics.hpp"
#include "fecbf/simulation.hpp"

#include <benchmark/benchmark.h>

using namespace fecbf;

namespace {

ScenarioSpec short_spec( int n )
{
   ScenarioSpec spec;
   spec.kind = ScenarioKind::DualCircle;
   spec.n = n;
   spec.t_max = 60.0;
   return spec;
}

void trial_steps( benchmark::State& state, bool parallel )
{
   const ScenarioSpec spec = short_spec( static_cast<int>( state.range( 0 ) ) );
   const Scenario scenario = generate_scenario( spec );
   TrialOptions opt;
   opt.parallel = parallel;
   for( auto _ : state )
   {
      const TrialResult r = run_trial( scenario, spec, ControllerConfig {}, {}, opt );
      benchmark::DoNotOptimize( r.pair_min_h.data() );
   }
   state.SetItemsProcessed( state.iterations() * spec.n * static_cast<int>( spec.t_max / spec.dt ) );
}

void monte_carlo_trials( benchmark::State& state, bool parallel )
{
   ScenarioSpec spec = short_spec( 20 );
   spec.t_max = 30.0;
   MonteCarloOptions opt;
   opt.trials = static_cast<int>( state.range( 0 ) );
   opt.parallel = parallel;
   for( auto _ : state )
   {
      const auto batches = monte_carlo( spec, { ControllerConfig {} }, {}, opt );
      benchmark::DoNotOptimize( batches.front().metrics.sr );
   }
}

}   // namespace

BENCHMARK_CAPTURE( trial_steps, serial, false )->Arg( 20 )->Arg( 50 )->Arg( 100 )->Unit( benchmark::kMillisecond );
BENCHMARK_CAPTURE( trial_steps, parallel, true )->Arg( 20 )->Arg( 50 )->Arg( 100 )->Unit( benchmark::kMillisecond );
BENCHMARK_CAPTURE( monte_carlo_trials, serial, false )->Arg( 4 )->Unit( benchmark::kMillisecond );
BENCHMARK_CAPTURE( monte_carlo_trials, parallel, true )->Arg( 4 )->Unit( benchmark::kMillisecond );

BENCHMARK_MAIN();
