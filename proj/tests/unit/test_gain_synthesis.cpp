#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <random>

#include "formctl/errors.hpp"
#include "formctl/gain_synthesis.hpp"
#include "formctl/reference_fixtures.hpp"
#include "random_formation.hpp"

namespace formctl {
namespace {

FollowerMatrixSet spatial7_mats() {
  return derive_variants(
      assemble_follower_matrix(fixtures::spatial7_formation(), fixtures::spatial7_constraints()));
}

std::vector<double> sorted_real_eigs(const Matrix& m) {
  Eigen::EigenSolver<Matrix> es(m);
  std::vector<double> out;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    EXPECT_NEAR(es.eigenvalues()(i).imag(), 0.0, 1e-8);
    out.push_back(es.eigenvalues()(i).real());
  }
  std::sort(out.begin(), out.end());
  return out;
}

TEST(Plant, SingleIntegrator) {
  const auto p = build_plant(1);
  EXPECT_TRUE(p.A.isZero(0.0));
  EXPECT_TRUE(p.B.isIdentity(0.0));
  EXPECT_TRUE(p.C.isIdentity(0.0));
}

TEST(Plant, TripleIntegratorStructure) {
  const auto p = build_plant(3);
  ASSERT_EQ(p.A.rows(), 9);
  Matrix ref = Matrix::Zero(9, 9);
  ref.block(0, 3, 3, 3).setIdentity();
  ref.block(3, 6, 3, 3).setIdentity();
  EXPECT_EQ(p.A, ref);
  Matrix b = Matrix::Zero(9, 3);
  b.bottomRows(3).setIdentity();
  EXPECT_EQ(p.B, b);
  Matrix c = Matrix::Zero(3, 9);
  c.leftCols(3).setIdentity();
  EXPECT_EQ(p.C, c);
}

TEST(Plant, VelocityOnlyIsNotDetectable) {
  Matrix c(1, 2);
  c << 0, 1;
  try {
    build_plant(2, c);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotDetectable);
  }
}

TEST(Plant, FullOutputAccepted) {
  const auto p = build_plant(2, Matrix::Identity(2, 2));
  EXPECT_EQ(p.C.rows(), 6);
  EXPECT_TRUE(is_detectable(p.A, p.C));
}

TEST(Beta, SingleIntegrator) {
  const Vector b = design_beta({-1.0});
  ASSERT_EQ(b.size(), 1);
  EXPECT_DOUBLE_EQ(b(0), -1.0);
}

TEST(Beta, DoubleIntegrator) {
  const Vector b = design_beta({-1.0, -2.0});
  EXPECT_DOUBLE_EQ(b(0), -2.0);
  EXPECT_DOUBLE_EQ(b(1), -3.0);
  const auto e = sorted_real_eigs(leader_w1(b));
  EXPECT_NEAR(e[0], -2.0, 1e-12);
  EXPECT_NEAR(e[1], -1.0, 1e-12);
}

TEST(Beta, TripleIntegrator) {
  const Vector b = design_beta({-1.0, -2.0, -3.0});
  EXPECT_DOUBLE_EQ(b(0), -6.0);
  EXPECT_DOUBLE_EQ(b(1), -11.0);
  EXPECT_DOUBLE_EQ(b(2), -6.0);
  const auto e = sorted_real_eigs(leader_w1(b));
  EXPECT_NEAR(e[0], -3.0, 1e-10);
  EXPECT_NEAR(e[1], -2.0, 1e-10);
  EXPECT_NEAR(e[2], -1.0, 1e-10);
}

TEST(Beta, UnstablePoleRejected) {
  try {
    design_beta({-1.0, 0.5});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnstablePole);
  }
}

TEST(Beta, W2CarriesBetaRow) {
  const Vector b = design_beta({-1.0, -2.0, -3.0});
  const Matrix w2 = leader_w2(b);
  EXPECT_TRUE(w2.topRows(2).isZero(0.0));
  EXPECT_EQ(Vector(w2.row(2).transpose()), b);
}

TEST(StateLmi, SingleIntegratorClosedForm) {
  const auto d = solve_state_lmi(build_plant(1));
  EXPECT_LT((d.X - Matrix::Identity(3, 3) / std::sqrt(2.0)).norm(), 1e-13);
  EXPECT_LT((d.P - std::sqrt(2.0) * Matrix::Identity(3, 3)).norm(), 1e-12);
  const auto p = build_plant(1);
  const Matrix lmi = p.A * d.P + d.P * p.A.transpose() - 2.0 * p.B * p.B.transpose();
  EXPECT_NEAR(max_symmetric_eigenvalue(lmi), -2.0, 1e-12);
}

TEST(StateLmi, DoubleIntegratorDefinite) {
  const auto p = build_plant(2);
  const auto d = solve_state_lmi(p);
  EXPECT_LE((d.P - d.P.transpose()).norm(), 1e-10);
  const Matrix lmi = p.A * d.P + d.P * p.A.transpose() - 2.0 * p.B * p.B.transpose();
  EXPECT_LT(max_symmetric_eigenvalue(lmi), 0.0);
}

TEST(StateLmi, TripleIntegratorHurwitz) {
  const auto p = build_plant(3);
  const auto d = solve_state_lmi(p);
  EXPECT_LT(spectral_abscissa(p.A + p.B * d.K), 0.0);
  EXPECT_LT((d.K + p.B.transpose() * d.P.inverse()).norm(), 1e-9 * d.K.norm());
}

TEST(StateLmi, BandwidthScalesPoles) {
  const auto p = build_plant(3);
  const double base = spectral_abscissa(p.A + p.B * solve_state_lmi(p).K);
  const double fast = spectral_abscissa(p.A + p.B * solve_state_lmi(p, 20.0).K);
  EXPECT_NEAR(fast, 20.0 * base, 1e-6 * std::abs(20.0 * base));
}

TEST(OutputLmi, SingleIntegratorClosedForm) {
  const auto p = build_plant(1);
  const auto d = solve_output_lmi(p);
  EXPECT_LT((d.H - std::sqrt(2.0) * Matrix::Identity(3, 3)).norm(), 1e-12);
  const Matrix lmi = p.A.transpose() * d.H + d.H * p.A - 2.0 * p.C.transpose() * p.C;
  EXPECT_NEAR(max_symmetric_eigenvalue(lmi), -2.0, 1e-12);
}

TEST(OutputLmi, DoubleIntegratorObserverHurwitz) {
  const auto p = build_plant(2);
  const auto d = solve_output_lmi(p);
  EXPECT_LT(spectral_abscissa(p.A + d.L * p.C), 0.0);
  EXPECT_LT((d.L + d.H.inverse() * p.C.transpose()).norm(), 1e-9 * d.L.norm());
}

TEST(OutputLmi, TripleIntegratorObserverErrorDecays) {
  const auto p = build_plant(3);
  const auto d = solve_output_lmi(p);
  const Matrix F = p.A + d.L * p.C;
  // Euler-free check: exact flow of the error through the eigendecomposition.
  Eigen::EigenSolver<Matrix> es(F);
  const Eigen::MatrixXcd V = es.eigenvectors();
  const Eigen::MatrixXcd Vinv = V.inverse();
  Vector e0 = Vector::Ones(9);
  std::vector<double> t, logn;
  for (int k = 10; k <= 100; ++k) {
    const double tk = 0.1 * k;
    const Eigen::VectorXcd ev = (es.eigenvalues() * tk).array().exp();
    const Vector e = (V * ev.asDiagonal() * Vinv * e0.cast<std::complex<double>>()).real();
    t.push_back(tk);
    logn.push_back(std::log(e.norm()));
  }
  // Least-squares slope of log ||e||.
  double mt = 0, ml = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    mt += t[i];
    ml += logn[i];
  }
  mt /= t.size();
  ml /= t.size();
  double num = 0, den = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    num += (t[i] - mt) * (logn[i] - ml);
    den += (t[i] - mt) * (t[i] - mt);
  }
  EXPECT_LT(num / den, 0.0);
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_LE(logn[i], ml + (num / den) * (t[i] - mt) + 1.0);
  }
}

TEST(LeaderBound, ZeroZetaAndStaticPlan) {
  const auto p = build_plant(2);
  const auto d = solve_output_lmi(p);
  const auto b = compute_leader_bound(design_beta({-1, -2}), p, d.L, 0.0, 0.0);
  EXPECT_EQ(b.gamma_u, 0.0);
}

TEST(LeaderBound, DistinctEigenvaluesGivePsiOne) {
  const auto p = build_plant(2);
  const auto d = solve_output_lmi(p);
  const Vector beta = design_beta({-1, -2});
  const auto b = compute_leader_bound(beta, p, d.L, 1.0, 0.5);
  EXPECT_TRUE(b.distinct);
  EXPECT_DOUBLE_EQ(b.psi, 1.0);
  EXPECT_NEAR(b.gamma_u, 4.0 * beta.norm() * b.cond_m + 0.5, 1e-9 * b.gamma_u);
  EXPECT_NEAR(b.cond_m, 25.25, 0.05);
}

TEST(LeaderBound, ErrorMatrixBlocks) {
  const auto p = build_plant(2);
  const auto d = solve_output_lmi(p);
  const Vector beta = design_beta({-1, -2});
  const Matrix W = leader_error_matrix(beta, p, d.L);
  ASSERT_EQ(W.rows(), 12);
  EXPECT_LT((W.topLeftCorner(6, 6) - kron_identity(leader_w1(beta), 3)).norm(), 1e-15);
  EXPECT_LT((W.topRightCorner(6, 6) - kron_identity(leader_w2(beta), 3)).norm(), 1e-15);
  EXPECT_TRUE(W.bottomLeftCorner(6, 6).isZero(0.0));
  EXPECT_LT((W.bottomRightCorner(6, 6) - (p.A + d.L * p.C)).norm(), 1e-15);
}

TEST(CouplingGains, Spatial7Sigma) {
  const auto mats = spatial7_mats();
  // Back substitution through the lower-triangular follower block.
  Matrix ref(3, 4);
  ref << 1, -1, -0.5, -0.5, 1, 0, -1.5, -0.5, 1, 0, -0.5, -1.5;
  EXPECT_LT((mats.leader_map() - ref).cwiseAbs().maxCoeff(), 1e-14);
  const auto g = select_coupling_gains(mats, 2.0, 4, FollowerVariant::kOmegaHat);
  EXPECT_DOUBLE_EQ(g.sigma, 1.5);
  EXPECT_NEAR(g.lambda_min, 3.0 - std::sqrt(5.0), 1e-12);
  EXPECT_NEAR(g.c1 * g.lambda_min, 1.1, 1e-12);
  EXPECT_NEAR(g.c2, 1.1 * 4 * 1.5 * 2.0, 1e-12);
}

TEST(CouplingGains, DecoupledFollowersNeedNoSignum) {
  FollowerMatrixSet mats;
  mats.n_leaders = 2;
  mats.omega_f = Matrix::Zero(2, 4);
  mats.omega_f.rightCols(2).setIdentity();
  mats.omega_fl = mats.omega_f.leftCols(2);
  mats.omega_ff = mats.omega_f.rightCols(2);
  mats = derive_variants(mats);
  const auto g = select_coupling_gains(mats, 5.0, 2, FollowerVariant::kOmegaHat);
  EXPECT_EQ(g.sigma, 0.0);
  EXPECT_EQ(g.c2, 0.0);
}

TEST(CouplingGains, RandomLocalizable) {
  std::mt19937_64 rng(17);
  int tested = 0;
  while (tested < 25) {
    const auto rf = testing::random_formation(rng);
    if (rf.degenerate) continue;
    const auto mats = derive_variants(assemble_follower_matrix(rf.formation, rf.constraints));
    const auto g = select_coupling_gains(mats, 1.0, 4, FollowerVariant::kOmegaHat);
    Eigen::SelfAdjointEigenSolver<Matrix> es(mats.omega_ff.transpose() * mats.omega_ff);
    EXPECT_GT(g.c1 * es.eigenvalues().minCoeff(), 1.0);
    ++tested;
  }
}

TEST(Synthesis, CertificatesForEachOrder) {
  const auto mats = spatial7_mats();
  for (int m = 1; m <= 3; ++m) {
    GainOptions opt;
    opt.zeta = 1.0;
    const auto g = synthesize_gains(build_plant(m), mats, FollowerVariant::kOmegaHat, opt);
    const auto c = certify(g, mats);
    EXPECT_LT(c.state_lmi, 0.0) << m;
    EXPECT_LT(c.output_lmi, 0.0) << m;
    EXPECT_LT(c.abscissa_w1, -1e-6) << m;
    EXPECT_LT(c.abscissa_observer, -1e-6) << m;
    EXPECT_LT(c.abscissa_feedback, -1e-6) << m;
    EXPECT_TRUE(c.all_pass()) << m;
  }
}

TEST(Synthesis, ReferenceGammaU) {
  const auto mats = spatial7_mats();
  GainOptions opt;
  opt.zeta = 1.0;
  const auto g1 = synthesize_gains(build_plant(1), mats, FollowerVariant::kOmegaHat, opt);
  EXPECT_NEAR(g1.gamma_u, 27.9, 0.1);
  const auto g2 = synthesize_gains(build_plant(2), mats, FollowerVariant::kOmegaHat, opt);
  EXPECT_NEAR(g2.gamma_u, 364.0, 1.0);
}

TEST(Synthesis, DefectiveWIsSpread) {
  // Leader poles equal to the observer spectrum make W defective.
  const auto mats = spatial7_mats();
  const auto p = build_plant(1);
  const double obs = spectral_abscissa(p.A + solve_output_lmi(p).L * p.C);
  GainOptions opt;
  opt.poles = {obs};
  opt.zeta = 1.0;
  const auto g = synthesize_gains(p, mats, FollowerVariant::kOmegaHat, opt);
  EXPECT_GE(g.pole_retries, 1);
  EXPECT_LT(g.cond_m, 1e8);
  EXPECT_TRUE(certify(g, mats).all_pass());
}

TEST(Variant, ParseRoundTrip) {
  for (auto v : {FollowerVariant::kOmegaBar, FollowerVariant::kOmegaHat,
                 FollowerVariant::kRelative, FollowerVariant::kStateFeedback}) {
    EXPECT_EQ(parse_variant(to_string(v)), v);
  }
  EXPECT_THROW(parse_variant("omega"), Error);
}

}  // namespace
}  // namespace formctl
