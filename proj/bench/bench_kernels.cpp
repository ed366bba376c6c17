// Serial against OpenMP kernels: the closed-loop right-hand side and
// Monte-Carlo batches.
#include <benchmark/benchmark.h>

#include <random>

#include "formctl/gain_synthesis.hpp"
#include "formctl/sim_engine.hpp"

using namespace formctl;

namespace {

struct Instance {
  NominalFormation formation;
  FollowerMatrixSet mats;
  ShapeSolution shape;
  ManeuverPlan plan;
  GainSet gains;
};

// n_f followers, each inside the tetrahedron of four earlier agents.
Instance make_instance(int n_f, int m, FollowerVariant variant) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> bary(0.1, 1.0);
  Instance in;
  auto& f = in.formation;
  f.n_leaders = 4;
  f.positions = {{10, 0, 0}, {-5, 9, 0}, {-5, -9, 0}, {0, 0, 12}};
  for (int k = 0; k < n_f; ++k) {
    const int agent = 4 + k;
    std::vector<int> pool(agent);
    for (int j = 0; j < agent; ++j) pool[j] = j;
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<int> nb(pool.begin(), pool.begin() + 4);
    double w[4], sum = 0.0;
    for (double& x : w) sum += (x = bary(rng));
    Vec3 p = Vec3::Zero();
    for (int j = 0; j < 4; ++j) p += (w[j] / sum) * f.positions[nb[j]];
    f.positions.push_back(p);
    f.neighbors.push_back(nb);
  }
  in.mats = derive_variants(assemble_follower_matrix(f, build_constraints(f)));
  in.shape = ShapeSolution::from(in.mats, f);
  ManeuverSegment seg;
  seg.t1 = 1.0;
  seg.translation.axes[0].poly = {0.0, 1.0};
  in.plan.segments.push_back(seg);
  GainOptions opt;
  opt.zeta = 0.5;
  in.gains = synthesize_gains(build_plant(m), in.mats, variant, opt);
  return in;
}

void rhs(benchmark::State& state, bool parallel) {
  const auto in = make_instance(static_cast<int>(state.range(0)), 2, FollowerVariant::kOmegaBar);
  const ClosedLoop loop(in.mats, in.shape, in.gains, FollowerVariant::kOmegaBar, 1e-3);
  InitialConditionSpec spec;
  spec.leader_error = 0.5;
  spec.follower_spread = 1.0;
  const Vector z = loop.pack(make_initial_state(spec, in.plan, in.shape, 2, 1));
  Vector dz(z.size());
  const auto& seg = in.plan.segments[0];
  for (auto _ : state) {
    if (parallel) {
      loop.rhs_parallel(0.5, seg, z, dz);
    } else {
      loop.rhs_serial(0.5, seg, z, dz);
    }
    benchmark::DoNotOptimize(dz.data());
  }
  state.SetItemsProcessed(state.iterations() * loop.agents());
}

void BM_RhsSerial(benchmark::State& state) { rhs(state, false); }
void BM_RhsParallel(benchmark::State& state) { rhs(state, true); }

void BM_MonteCarlo(benchmark::State& state) {
  const auto in = make_instance(6, 2, FollowerVariant::kOmegaHat);
  InitialConditionSpec spec;
  spec.leader_error = 0.5;
  spec.leader_estimate_error = 0.5;
  SimConfig cfg;
  cfg.dt = 2e-3;
  const int jobs = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto runs = run_monte_carlo(in.mats, in.plan, in.shape, in.gains, cfg,
                                FollowerVariant::kOmegaHat, spec, 16, 1, jobs);
    benchmark::DoNotOptimize(runs.data());
  }
  state.SetItemsProcessed(state.iterations() * 16);
}

}  // namespace

BENCHMARK(BM_RhsSerial)->Arg(50)->Arg(200)->Arg(800);
BENCHMARK(BM_RhsParallel)->Arg(50)->Arg(200)->Arg(800);
BENCHMARK(BM_MonteCarlo)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
