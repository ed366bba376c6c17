#include <gtest/gtest.h>

#include <unsupported/Eigen/MatrixFunctions>
#include <random>

#include "formctl/errors.hpp"
#include "formctl/sim_engine.hpp"
#include "random_formation.hpp"
#include "spatial7_setup.hpp"

namespace formctl {
namespace {

using testing::SimSetup;

SimTrace run(const SimSetup& s, const SimConfig& cfg, FollowerVariant v,
             const InitialConditionSpec& spec, std::uint64_t seed = 1) {
  const auto init = make_initial_state(spec, s.plan, s.shape, s.gains.plant.m, seed);
  return run_scenario(s.mats, s.plan, s.shape, s.gains, cfg, v, init);
}

TEST(SimConfig, Validation) {
  SimConfig c;
  EXPECT_NO_THROW(c.validate());
  c.dt = 0.02;
  EXPECT_THROW(c.validate(), Error);
  c.dt = 0.0;
  EXPECT_THROW(c.validate(), Error);
  c = SimConfig{};
  c.epsilon = 0.0;
  EXPECT_THROW(c.validate(), Error);
  c = SimConfig{};
  c.record_every = 0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Simulation, HorizonMustBeInsidePlan) {
  const auto s = testing::simple_setup(1, 0.0, 1.0, 0.0);
  SimConfig cfg;
  cfg.t_end = 2.0;
  EXPECT_THROW(run(s, cfg, FollowerVariant::kOmegaHat, {}), Error);
}

TEST(Simulation, EquilibriumPersists) {
  for (auto v : {FollowerVariant::kOmegaBar, FollowerVariant::kOmegaHat,
                 FollowerVariant::kRelative, FollowerVariant::kStateFeedback}) {
    const auto s = testing::simple_setup(2, 0.0, 2.0, 0.0, v);
    SimConfig cfg;
    InitialConditionSpec spec;
    spec.follower_estimate_exact = true;
    const auto trace = run(s, cfg, v, spec);
    const auto sum = tracking_errors(trace, s.shape, s.plan);
    for (std::size_t k = 0; k < sum.follower.size(); ++k) {
      ASSERT_LE(sum.leader_max[k], 10 * cfg.epsilon);
      ASSERT_LE(sum.follower[k], 10 * cfg.epsilon);
    }
  }
}

TEST(Simulation, SerialAndParallelRhsAgree) {
  for (auto v : {FollowerVariant::kOmegaHat, FollowerVariant::kRelative}) {
    const auto s = testing::spatial7_setup(v);
    const ClosedLoop loop(s.mats, s.shape, s.gains, v, 1e-3);
    InitialConditionSpec spec;
    spec.leader_error = 1.0;
    spec.leader_estimate_error = 1.0;
    spec.follower_spread = 2.0;
    const auto init = make_initial_state(spec, s.plan, s.shape, 3, 9);
    Vector z = loop.pack(init);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> d;
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) += d(rng);
    Vector a(z.size()), b(z.size());
    Matrix ua, ub;
    loop.rhs_serial(4.0, s.plan.segment_at(4.0), z, a, &ua);
    loop.rhs_parallel(4.0, s.plan.segment_at(4.0), z, b, &ub);
    EXPECT_EQ(a, b);
    EXPECT_EQ(ua, ub);
  }
}

TEST(Simulation, ParallelRunMatchesSerialRun) {
  const auto s = testing::simple_setup(2, 1.0, 1.0, 0.0);
  SimConfig cfg;
  InitialConditionSpec spec;
  spec.follower_spread = 1.0;
  const auto a = run(s, cfg, FollowerVariant::kOmegaHat, spec);
  cfg.parallel = true;
  const auto b = run(s, cfg, FollowerVariant::kOmegaHat, spec);
  ASSERT_EQ(a.samples(), b.samples());
  EXPECT_EQ(a.x.back(), b.x.back());
}

TEST(Simulation, LineFollowerConverges) {
  NominalFormation f;
  f.n_leaders = 2;
  f.positions = {{0, 0, 0}, {3, 0, 0}, {1, 0, 0}};
  f.neighbors = {{0, 1}};
  const auto mats = derive_variants(assemble_follower_matrix(f, build_constraints(f)));
  const auto shape = ShapeSolution::from(mats, f);
  ManeuverPlan plan;
  plan.segments.push_back({});
  plan.segments[0].t1 = 20.0;
  const auto gains =
      synthesize_gains(build_plant(1), mats, FollowerVariant::kOmegaHat, GainOptions{});
  InitialConditionSpec spec;
  spec.follower_offset = Vec3(0.5, -1.0, 2.0);
  const auto init = make_initial_state(spec, plan, shape, 1, 1);
  SimConfig cfg;
  cfg.dt = 1e-2;
  const auto trace = run_scenario(mats, plan, shape, gains, cfg, FollowerVariant::kOmegaHat, init);
  const Vec3 target = -(mats.leader_map()(0, 0) * f.positions[0] +
                        mats.leader_map()(0, 1) * f.positions[1]);
  EXPECT_LT((Vec3(trace.x.back().col(2)) - target).norm(), 1e-3);
  EXPECT_LT((target - Vec3(1, 0, 0)).norm(), 1e-12);
}

TEST(Simulation, RandomFormationStateFeedbackEquilibrium) {
  std::mt19937_64 rng(12);
  int tested = 0;
  while (tested < 5) {
    auto rf = testing::random_formation(rng);
    if (rf.degenerate || rf.formation.follower_count() != 1) continue;
    const auto mats = derive_variants(assemble_follower_matrix(rf.formation, rf.constraints));
    const auto shape = ShapeSolution::from(mats, rf.formation);
    ManeuverPlan plan;
    plan.segments.push_back({});
    plan.segments[0].t1 = 20.0;
    const auto gains = synthesize_gains(build_plant(2), mats, FollowerVariant::kStateFeedback,
                                        GainOptions{});
    InitialConditionSpec spec;
    spec.follower_offset = Vec3(1.0, 1.0, -1.0);
    const auto init = make_initial_state(spec, plan, shape, 2, 1);
    SimConfig cfg;
    cfg.dt = 5e-3;
    cfg.record_every = 100;
    const auto trace =
        run_scenario(mats, plan, shape, gains, cfg, FollowerVariant::kStateFeedback, init);
    Vector xl(6 * 4);
    for (int i = 0; i < 4; ++i) xl.segment(6 * i, 6) = trace.x.back().col(i);
    const Vector xf = -kron_identity(mats.leader_map(), 6) * xl;
    EXPECT_LT((Vector(trace.x.back().col(4)) - xf).norm(), 1e-3);
    ++tested;
  }
}

TEST(Simulation, LeaderErrorFollowsCompanionFlow) {
  const auto s = testing::simple_setup(3, 2.0, 1.0, 0.0);
  SimConfig cfg;
  InitialConditionSpec spec;
  spec.leader_error = 1.0;
  const auto trace = run(s, cfg, FollowerVariant::kOmegaHat, spec, 4);
  const Matrix W1 = kron_identity(leader_w1(s.gains.beta), 3);
  const auto refs0 = desired_leader_states(0.0, 3, s.plan, s.shape);
  double worst = 0.0;
  for (int k = 0; k < trace.samples(); ++k) {
    const double t = trace.times[k];
    const auto refs = desired_leader_states(t, 3, s.plan, s.shape);
    const Matrix flow = (W1 * t).exp();
    for (int i = 0; i < 4; ++i) {
      const Vector e0 = trace.x[0].col(i) - refs0[i].x;
      const Vector e = trace.x[k].col(i) - refs[i].x;
      worst = std::max(worst, (e - flow * e0).norm());
    }
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(Simulation, Spatial7SegmentsConverge) {
  const auto s = testing::spatial7_setup();
  SimConfig cfg;
  cfg.record_every = 10;
  InitialConditionSpec spec;
  spec.follower_offset = Vec3(0, 0, 1);
  const auto trace = run(s, cfg, FollowerVariant::kOmegaHat, spec);
  const auto sum = tracking_errors(trace, s.shape, s.plan);
  ASSERT_EQ(sum.segments.size(), 5u);
  for (const auto& seg : sum.segments) {
    EXPECT_LT(seg.tail_leader, 1e-2) << seg.t0;
    EXPECT_LT(seg.tail_follower, 1e-2) << seg.t0;
  }
  // Within the shape-change segments the follower error decays from its
  // value at the switch.
  for (int idx : {1, 3}) {
    const double t0 = s.plan.segments[idx].t0;
    double start = 0.0;
    for (int k = 0; k < trace.samples(); ++k) {
      if (trace.times[k] >= t0 && trace.times[k] < t0 + 0.05) {
        start = std::max(start, sum.follower[k]);
      }
    }
    EXPECT_LT(sum.segments[idx].terminal_follower, start);
  }
}

TEST(Simulation, Spatial7StateFeedbackIsTight) {
  const auto s = testing::spatial7_setup(FollowerVariant::kStateFeedback);
  SimConfig cfg;
  cfg.record_every = 100;
  InitialConditionSpec spec;
  spec.follower_offset = Vec3(0, 0, 1);
  const auto trace = run(s, cfg, FollowerVariant::kStateFeedback, spec);
  const auto sum = tracking_errors(trace, s.shape, s.plan);
  EXPECT_LT(sum.follower.back(), 1e-3);
}

TEST(Simulation, ErrorSeriesMatchesBruteRecomputation) {
  const auto s = testing::simple_setup(2, 1.0, 2.0, 0.0);
  InitialConditionSpec spec;
  spec.leader_error = 0.5;
  spec.leader_estimate_error = 0.5;
  spec.follower_spread = 1.0;
  SimConfig cfg;
  cfg.record_every = 50;
  const auto trace = run(s, cfg, FollowerVariant::kOmegaHat, spec, 77);
  const auto sum = tracking_errors(trace, s.shape, s.plan);
  const Matrix S = s.mats.leader_map();
  for (int k = 0; k < trace.samples(); ++k) {
    Vector zl(12 * 4), zf(12 * 3);
    for (int i = 0; i < 4; ++i) {
      zl.segment(12 * i, 6) = trace.x[k].col(i);
      zl.segment(12 * i + 6, 6) = trace.eta[k].col(i);
    }
    for (int i = 0; i < 3; ++i) {
      zf.segment(12 * i, 6) = trace.x[k].col(4 + i);
      zf.segment(12 * i + 6, 6) = trace.eta[k].col(4 + i);
    }
    const Vector ef = zf + kron_identity(S, 12) * zl;
    EXPECT_NEAR(sum.follower[k], ef.norm(), 1e-12 * std::max(1.0, ef.norm()));
    for (int i = 0; i < 3; ++i) {
      EXPECT_LT((trace.err[k].col(4 + i) - ef.segment(12 * i, 12)).norm(),
                1e-12 * std::max(1.0, ef.norm()));
    }
  }
}

TEST(Simulation, Deterministic) {
  const auto s = testing::simple_setup(2, 1.0, 1.0, 1.0);
  InitialConditionSpec spec;
  spec.leader_error = 0.5;
  spec.follower_spread = 1.0;
  SimConfig cfg;
  const auto a = run(s, cfg, FollowerVariant::kOmegaBar, spec, 3);
  const auto b = run(s, cfg, FollowerVariant::kOmegaBar, spec, 3);
  ASSERT_EQ(a.samples(), b.samples());
  for (int k = 0; k < a.samples(); ++k) {
    ASSERT_EQ(a.x[k], b.x[k]);
    ASSERT_EQ(a.eta[k], b.eta[k]);
  }
}

TEST(Simulation, Blowup) {
  SimSetup s = testing::simple_setup(3, 0.0, 1.0, 0.0);
  GainOptions opt;
  opt.bandwidth = 100.0;
  opt.poles = {-50, -60, -70};
  s.gains = synthesize_gains(build_plant(3), s.mats, FollowerVariant::kOmegaHat, opt);
  SimConfig cfg;
  cfg.dt = 1e-2;
  cfg.integrator = Integrator::kEuler;
  InitialConditionSpec spec;
  spec.leader_error = 1.0;
  spec.follower_spread = 1.0;
  try {
    run(s, cfg, FollowerVariant::kOmegaHat, spec);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNumericalBlowup);
  }
}

TEST(Bounds, ZetaRespectingRunsHold) {
  const auto s = testing::simple_setup(2, 1.0, 8.0, 1.0);
  SimConfig cfg;
  cfg.dt = 2e-3;
  InitialConditionSpec spec;
  spec.leader_error = 1.0;
  spec.leader_estimate_error = 1.0;
  spec.random_radius = false;
  const auto runs = run_monte_carlo(s.mats, s.plan, s.shape, s.gains, cfg,
                                    FollowerVariant::kOmegaHat, spec, 20, 500, 0);
  for (const auto& r : runs) {
    EXPECT_TRUE(r.error.empty()) << r.error;
    EXPECT_TRUE(r.bound_ok) << "seed " << r.seed << " sup " << r.sup_leader_input;
  }
}

TEST(Bounds, StaticZeroZeta) {
  const auto s = testing::simple_setup(2, 0.0, 2.0, 0.0);
  SimConfig cfg;
  cfg.assert_bounds = true;
  const auto trace = run(s, cfg, FollowerVariant::kOmegaHat, {});
  const auto rep = verify_bounds(trace, s.gains);
  EXPECT_EQ(rep.gamma_u, 0.0);
  for (double v : rep.sup_u) EXPECT_EQ(v, 0.0);
  EXPECT_TRUE(rep.ok);
}

TEST(Bounds, InitialErrorBeyondZeta) {
  const auto s = testing::simple_setup(2, 1.0, 1.0, 0.5);
  SimConfig cfg;
  cfg.assert_bounds = true;
  InitialConditionSpec spec;
  spec.leader_error = 1.0;
  spec.random_radius = false;
  try {
    run(s, cfg, FollowerVariant::kOmegaHat, spec);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kZetaViolated);
    EXPECT_NE(std::string(e.what()).find("zeta"), std::string::npos);
  }
}

TEST(Bounds, ViolationIsReported) {
  BoundReport rep;
  rep.gamma_u = 1.0;
  rep.sup_u = {2.0};
  rep.ok = false;
  rep.worst_leader = 0;
  rep.worst_time = 0.5;
  try {
    require_bounds(rep);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBoundViolated);
    EXPECT_NE(std::string(e.what()).find("zeta"), std::string::npos);
  }
}

TEST(MonteCarlo, JobsDoNotChangeResults) {
  const auto s = testing::simple_setup(1, 1.0, 1.0, 1.0);
  InitialConditionSpec spec;
  spec.leader_error = 1.0;
  spec.leader_estimate_error = 1.0;
  SimConfig cfg;
  const auto a = run_monte_carlo(s.mats, s.plan, s.shape, s.gains, cfg,
                                 FollowerVariant::kOmegaHat, spec, 6, 10, 1);
  const auto b = run_monte_carlo(s.mats, s.plan, s.shape, s.gains, cfg,
                                 FollowerVariant::kOmegaHat, spec, 6, 10, 4);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].seed, b[i].seed);
    EXPECT_EQ(a[i].sup_leader_input, b[i].sup_leader_input);
    EXPECT_EQ(a[i].max_tail_follower, b[i].max_tail_follower);
  }
}

}  // namespace
}  // namespace formctl
