#include "formctl/gain_synthesis.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "formctl/errors.hpp"
#include "formctl/riccati.hpp"

namespace formctl {
namespace {

using CMatrix = Eigen::MatrixXcd;

Matrix chain(int m) {
  Matrix a = Matrix::Zero(m, m);
  for (int k = 0; k + 1 < m; ++k) a(k, k + 1) = 1.0;
  return a;
}

double cond2(const CMatrix& m) {
  Eigen::JacobiSVD<CMatrix> svd(m);
  const auto& s = svd.singularValues();
  if (!(s(s.size() - 1) > 0.0)) return std::numeric_limits<double>::infinity();
  return s(0) / s(s.size() - 1);
}

// Eigenvalues pairwise separated by more than a relative 1e-8.
bool eigenvalues_distinct(const Eigen::VectorXcd& ev) {
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    for (Eigen::Index j = i + 1; j < ev.size(); ++j) {
      if (std::abs(ev(i) - ev(j)) <= 1e-8 * scale) return false;
    }
  }
  return true;
}

// Rows/cols of one spatial axis from a Kronecker-structured (· ⊗ I_3) matrix.
Matrix axis_block(const Matrix& full) {
  const Eigen::Index n = full.rows() / kDim;
  Matrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) out(i, j) = full(kDim * i, kDim * j);
  }
  return out;
}

double min_symmetric_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()),
                                           Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

std::string_view to_string(FollowerVariant v) {
  switch (v) {
    case FollowerVariant::kOmegaBar: return "omega-bar";
    case FollowerVariant::kOmegaHat: return "omega-hat";
    case FollowerVariant::kRelative: return "relative";
    case FollowerVariant::kStateFeedback: return "state-feedback";
  }
  return "?";
}

FollowerVariant parse_variant(std::string_view name) {
  for (auto v : {FollowerVariant::kOmegaBar, FollowerVariant::kOmegaHat,
                 FollowerVariant::kRelative, FollowerVariant::kStateFeedback}) {
    if (name == to_string(v)) return v;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "unknown variant '" + std::string(name) +
                  "' (omega-bar, omega-hat, relative, state-feedback)");
}

bool is_detectable(const Matrix& A, const Matrix& C) {
  const Eigen::Index n = A.rows();
  Eigen::EigenSolver<Matrix> es(A, false);
  const auto ev = es.eigenvalues();
  for (Eigen::Index k = 0; k < ev.size(); ++k) {
    if (ev(k).real() < -1e-9) continue;
    CMatrix pbh(n + C.rows(), n);
    pbh.topRows(n) = A.cast<std::complex<double>>() -
                     ev(k) * CMatrix::Identity(n, n);
    pbh.bottomRows(C.rows()) = C.cast<std::complex<double>>();
    Eigen::JacobiSVD<CMatrix> svd(pbh);
    const auto& s = svd.singularValues();
    const double tol = 1e-9 * std::max(1.0, s(0));
    if (s(s.size() - 1) <= tol) return false;
  }
  return true;
}

PlantMatrices build_plant(int m, const Matrix& c_spec) {
  if (m < 1) {
    throw Error(ErrorCode::kInvalidArgument, "plant order m must be >= 1");
  }
  PlantMatrices p;
  p.m = m;
  p.A = kron_identity(chain(m), kDim);
  Matrix b = Matrix::Zero(m, 1);
  b(m - 1, 0) = 1.0;
  p.B = kron_identity(b, kDim);
  if (c_spec.size() == 0) {
    p.c_block = Matrix::Zero(1, m);
    p.c_block(0, 0) = 1.0;
    p.C = kron_identity(p.c_block, kDim);
  } else if (c_spec.cols() == m) {
    p.c_block = c_spec;
    p.C = kron_identity(c_spec, kDim);
  } else if (c_spec.cols() == kDim * m) {
    p.C = c_spec;
  } else {
    throw Error(ErrorCode::kDimensionMismatch,
                "output matrix needs " + std::to_string(m) + " or " +
                    std::to_string(kDim * m) + " columns, got " +
                    std::to_string(c_spec.cols()));
  }
  if (!is_detectable(p.A, p.C)) {
    throw Error(ErrorCode::kNotDetectable,
                "(A, C) is not detectable; an unobservable integrator mode "
                "cannot be estimated");
  }
  return p;
}

std::vector<double> default_poles(int m) {
  std::vector<double> poles(m);
  for (int k = 0; k < m; ++k) poles[k] = -(k + 1.0);
  return poles;
}

Vector design_beta(const std::vector<double>& poles) {
  if (poles.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "at least one pole is required");
  }
  for (double p : poles) {
    if (!(p < 0.0)) {
      std::ostringstream os;
      os << "pole " << p << " is not in the open left half-plane";
      throw Error(ErrorCode::kUnstablePole, os.str());
    }
  }
  const int m = static_cast<int>(poles.size());
  // coef[k] multiplies λ^k; monic.
  std::vector<double> coef(m + 1, 0.0);
  coef[0] = 1.0;
  for (int d = 0; d < m; ++d) {
    for (int k = d + 1; k >= 1; --k) coef[k] = coef[k - 1] - poles[d] * coef[k];
    coef[0] = -poles[d] * coef[0];
  }
  Vector beta(m);
  for (int k = 0; k < m; ++k) beta(k) = -coef[k];
  return beta;
}

Matrix leader_w1(const Vector& beta) {
  const int m = static_cast<int>(beta.size());
  Matrix w = chain(m);
  w.row(m - 1) = beta.transpose();
  return w;
}

Matrix leader_w2(const Vector& beta) {
  const int m = static_cast<int>(beta.size());
  Matrix w = Matrix::Zero(m, m);
  w.row(m - 1) = beta.transpose();
  return w;
}

Matrix state_weight(int m, double bandwidth) {
  Vector d(m);
  for (int k = 0; k < m; ++k) d(k) = std::pow(bandwidth, 2.0 * (m - k));
  return kron_identity(d.asDiagonal().toDenseMatrix(), kDim);
}

Matrix observer_weight(int m, double bandwidth) {
  Vector d(m);
  for (int k = 0; k < m; ++k) d(k) = std::pow(bandwidth, 2.0 * (k + 1));
  return kron_identity(d.asDiagonal().toDenseMatrix(), kDim);
}

StateDesign solve_state_lmi(const PlantMatrices& plant, double bandwidth) {
  if (!(bandwidth > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "bandwidth must be positive");
  }
  const Matrix G = 2.0 * plant.B * plant.B.transpose();
  const auto sol = solve_care(plant.A, G, state_weight(plant.m, bandwidth));
  StateDesign d;
  d.X = sol.X;
  d.P = sol.X.inverse();
  d.P = 0.5 * (d.P + d.P.transpose());
  d.K = -plant.B.transpose() * sol.X;
  d.residual = sol.residual;
  return d;
}

OutputDesign solve_output_lmi(const PlantMatrices& plant, double bandwidth) {
  if (!(bandwidth > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "bandwidth must be positive");
  }
  if (!is_detectable(plant.A, plant.C)) {
    throw Error(ErrorCode::kNotDetectable, "(A, C) is not detectable");
  }
  const Matrix G = 2.0 * plant.C.transpose() * plant.C;
  const auto sol = solve_care(plant.A.transpose(), G,
                              observer_weight(plant.m, bandwidth));
  OutputDesign d;
  d.Y = sol.X;
  d.H = sol.X.inverse();
  d.H = 0.5 * (d.H + d.H.transpose());
  d.L = -sol.X * plant.C.transpose();
  d.residual = sol.residual;
  return d;
}

Matrix leader_error_matrix(const Vector& beta, const PlantMatrices& plant,
                           const Matrix& L) {
  const int n = plant.state_dim();
  Matrix W = Matrix::Zero(2 * n, 2 * n);
  W.topLeftCorner(n, n) = kron_identity(leader_w1(beta), kDim);
  W.topRightCorner(n, n) = kron_identity(leader_w2(beta), kDim);
  W.bottomRightCorner(n, n) = plant.A + L * plant.C;
  return W;
}

LeaderBound compute_leader_bound(const Vector& beta, const PlantMatrices& plant,
                                 const Matrix& L, double zeta, double gamma_m) {
  if (zeta < 0.0 || gamma_m < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "ζ and γ_m must be nonnegative");
  }
  LeaderBound out;
  out.W = leader_error_matrix(beta, plant, L);
  // With W = W_axis ⊗ I_3 the eigenvector matrix is M_axis ⊗ I_3 (up to a
  // permutation) and has the same condition number.
  Matrix target = out.W;
  if (plant.axis_separable()) {
    const Matrix wa = axis_block(out.W);
    if ((kron_identity(wa, kDim) - out.W).norm() <= 1e-12 * out.W.norm()) {
      target = wa;
    }
  }
  Eigen::EigenSolver<Matrix> es(target);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::kDefectiveW, "eigendecomposition of W failed");
  }
  const CMatrix M = es.eigenvectors();
  out.cond_m = cond2(M);
  if (!(out.cond_m <= 1e8)) {
    std::ostringstream os;
    os << "eigenvector matrix of W has condition number " << out.cond_m;
    throw Error(ErrorCode::kDefectiveW, os.str());
  }
  out.distinct = eigenvalues_distinct(es.eigenvalues());
  if (out.distinct) {
    out.psi = 1.0;
  } else {
    const double n = 6.0 * plant.m;
    const double lam = std::abs(spectral_abscissa(out.W));
    out.psi = std::sqrt(n + 0.5 * n * (n - 1.0) *
                                std::pow((n - 1.0) / (lam * std::numbers::e),
                                         n - 1.0));
  }
  out.gamma_u = 4.0 * out.psi * zeta * beta.norm() * out.cond_m + gamma_m;
  return out;
}

CouplingGains select_coupling_gains(const FollowerMatrixSet& mats,
                                    double gamma_u, int n_leaders,
                                    FollowerVariant variant, double margin) {
  Eigen::JacobiSVD<Matrix> svd(mats.omega_ff);
  const Vector& s = svd.singularValues();
  if (!(s(0) > 0.0) || s(s.size() - 1) <= 1e-9 * s(0)) {
    throw Error(ErrorCode::kNotLocalizable, "follower block is singular");
  }
  if (!(margin > 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "gain margin must exceed 1");
  }
  CouplingGains g;
  g.sigma = mats.leader_map().cwiseAbs().maxCoeff();
  g.lambda_min =
      min_symmetric_eigenvalue(mats.omega_ff.transpose() * mats.omega_ff);
  g.c1 = uses_omega_hat(variant) ? margin * std::max(1.0, 1.0 / g.lambda_min)
                                 : margin;
  g.c2 = margin * n_leaders * g.sigma * gamma_u;
  return g;
}

GainSet synthesize_gains(const PlantMatrices& plant,
                         const FollowerMatrixSet& mats, FollowerVariant variant,
                         const GainOptions& options) {
  GainSet g;
  g.plant = plant;
  g.variant = variant;
  g.zeta = options.zeta;
  g.gamma_m = options.gamma_m;
  g.margin = options.margin;
  g.bandwidth = options.bandwidth;
  g.poles = options.poles.empty() ? default_poles(plant.m) : options.poles;
  if (static_cast<int>(g.poles.size()) != plant.m) {
    throw Error(ErrorCode::kDimensionMismatch,
                "need " + std::to_string(plant.m) + " poles, got " +
                    std::to_string(g.poles.size()));
  }

  const StateDesign sd = solve_state_lmi(plant, options.bandwidth);
  const OutputDesign od = solve_output_lmi(plant, options.bandwidth);
  g.X = sd.X;
  g.P = sd.P;
  g.K = sd.K;
  g.state_residual = sd.residual;
  g.Y = od.Y;
  g.H = od.H;
  g.L = od.L;
  g.output_residual = od.residual;

  const std::vector<double> requested = g.poles;
  LeaderBound bound;
  for (g.pole_retries = 0;; ++g.pole_retries) {
    g.beta = design_beta(g.poles);
    try {
      bound = compute_leader_bound(g.beta, plant, g.L, options.zeta,
                                   options.gamma_m);
      break;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDefectiveW || g.pole_retries == 3) throw;
      for (std::size_t k = 0; k < g.poles.size(); ++k) {
        g.poles[k] = requested[k] *
                     (1.0 + 0.05 * (g.pole_retries + 1) * static_cast<double>(k + 1));
      }
    }
  }
  g.W1 = leader_w1(g.beta);
  g.W2 = leader_w2(g.beta);
  g.W = bound.W;
  g.psi = bound.psi;
  g.cond_m = bound.cond_m;
  g.gamma_u = bound.gamma_u;

  const CouplingGains cg = select_coupling_gains(mats, g.gamma_u, mats.n_leaders,
                                                 variant, options.margin);
  g.c1 = cg.c1;
  g.c2 = cg.c2;
  g.sigma = cg.sigma;
  g.lambda_min = cg.lambda_min;
  return g;
}

Certificates certify(const GainSet& g, const FollowerMatrixSet& mats) {
  const auto& p = g.plant;
  Certificates c;
  c.state_lmi = max_symmetric_eigenvalue(
      p.A * g.P + g.P * p.A.transpose() - 2.0 * p.B * p.B.transpose());
  c.output_lmi = max_symmetric_eigenvalue(
      p.A.transpose() * g.H + g.H * p.A - 2.0 * p.C.transpose() * p.C);
  c.abscissa_w1 = spectral_abscissa(g.W1);
  c.abscissa_observer = spectral_abscissa(p.A + g.L * p.C);
  c.abscissa_feedback = spectral_abscissa(p.A + p.B * g.K);
  c.abscissa_w = spectral_abscissa(g.W);
  c.state_residual = g.state_residual;
  c.output_residual = g.output_residual;
  const double lam =
      min_symmetric_eigenvalue(mats.omega_ff.transpose() * mats.omega_ff);
  c.c1_ok = g.c1 > 1.0 && (!uses_omega_hat(g.variant) || g.c1 * lam > 1.0);
  const double sigma = mats.leader_map().cwiseAbs().maxCoeff();
  c.c2_ok = g.c2 >= mats.n_leaders * sigma * g.gamma_u;
  return c;
}

}  // namespace formctl
