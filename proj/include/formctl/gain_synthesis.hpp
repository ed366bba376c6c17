#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "formctl/formation_graph.hpp"
#include "formctl/types.hpp"

namespace formctl {

enum class FollowerVariant { kOmegaBar, kOmegaHat, kRelative, kStateFeedback };

std::string_view to_string(FollowerVariant v);
// Parses omega-bar | omega-hat | relative | state-feedback.
FollowerVariant parse_variant(std::string_view name);

// Follower law uses Ω̂ weights (all others use Ω̄).
inline bool uses_omega_hat(FollowerVariant v) {
  return v == FollowerVariant::kOmegaHat;
}

struct PlantMatrices {
  int m = 1;
  Matrix A;  // 3m x 3m
  Matrix B;  // 3m x 3
  Matrix C;  // q x 3m
  // Per-axis output rows when C = c ⊗ I_3; empty otherwise.
  Matrix c_block;

  int state_dim() const { return kDim * m; }
  int q() const { return static_cast<int>(C.rows()); }
  bool axis_separable() const { return c_block.size() > 0; }
};

// c_spec is either (rows x m), expanded as c_spec ⊗ I_3, or (q x 3m) used
// verbatim; empty selects the position output [I_3 0 ... 0].
// Throws kNotDetectable when (A, C) fails the PBH test.
PlantMatrices build_plant(int m, const Matrix& c_spec = {});

// PBH: rank [A - λI; C] = n for every eigenvalue of A with Re λ >= 0.
bool is_detectable(const Matrix& A, const Matrix& C);

// β with prod (λ - λ_k) = λ^m - β_{m-1} λ^{m-1} - ... - β_0.
// Throws kUnstablePole.
Vector design_beta(const std::vector<double>& poles);

std::vector<double> default_poles(int m);

// Companion matrix with β in its last row, and the matrix carrying only that
// row.
Matrix leader_w1(const Vector& beta);
Matrix leader_w2(const Vector& beta);

// Riccati weights. bandwidth = 1 gives the identity weight; other values
// scale every closed-loop pole of A + BK and A + LC by the bandwidth.
Matrix state_weight(int m, double bandwidth);
Matrix observer_weight(int m, double bandwidth);

struct StateDesign {
  Matrix X;  // A^T X + X A - 2 X B B^T X + Q = 0
  Matrix P;  // X^{-1}
  Matrix K;  // -B^T P^{-1}
  double residual = 0.0;
};

struct OutputDesign {
  Matrix Y;  // A Y + Y A^T - 2 Y C^T C Y + Q = 0
  Matrix H;  // Y^{-1}
  Matrix L;  // -H^{-1} C^T
  double residual = 0.0;
};

StateDesign solve_state_lmi(const PlantMatrices& plant, double bandwidth = 1.0);
OutputDesign solve_output_lmi(const PlantMatrices& plant,
                              double bandwidth = 1.0);

// W = [[W1 ⊗ I, W2 ⊗ I], [0, A + LC]].
Matrix leader_error_matrix(const Vector& beta, const PlantMatrices& plant,
                           const Matrix& L);

struct LeaderBound {
  double gamma_u = 0.0;
  double psi = 1.0;
  double cond_m = 1.0;  // ||M|| ||M^{-1}||
  bool distinct = true;
  Matrix W;
};

// γ_u = 4 ψ ζ ||β|| ||M|| ||M^{-1}|| + γ_m. Throws kDefectiveW when the
// eigenvector matrix has condition number above 1e8.
LeaderBound compute_leader_bound(const Vector& beta, const PlantMatrices& plant,
                                 const Matrix& L, double zeta, double gamma_m);

struct CouplingGains {
  double c1 = 0.0;
  double c2 = 0.0;
  double sigma = 0.0;
  double lambda_min = 0.0;  // λ_min(Ω_ff^T Ω_ff)
};

CouplingGains select_coupling_gains(const FollowerMatrixSet& mats,
                                    double gamma_u, int n_leaders,
                                    FollowerVariant variant,
                                    double margin = 1.1);

struct GainOptions {
  std::vector<double> poles;  // empty: -1..-m
  double zeta = 0.0;
  double gamma_m = 0.0;
  double margin = 1.1;
  double bandwidth = 1.0;
};

struct GainSet {
  PlantMatrices plant;
  std::vector<double> poles;
  Vector beta;
  Matrix W1, W2, W;
  Matrix X, P, K;
  Matrix Y, H, L;
  double state_residual = 0.0;
  double output_residual = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double sigma = 0.0;
  double lambda_min = 0.0;
  double gamma_u = 0.0;
  double gamma_m = 0.0;
  double psi = 1.0;
  double cond_m = 1.0;
  double zeta = 0.0;
  double margin = 1.1;
  double bandwidth = 1.0;
  int pole_retries = 0;
  FollowerVariant variant = FollowerVariant::kOmegaHat;
};

// Full synthesis. Retries with spread poles (+5% spacing, up to 3 times)
// when W is numerically defective.
GainSet synthesize_gains(const PlantMatrices& plant,
                         const FollowerMatrixSet& mats, FollowerVariant variant,
                         const GainOptions& options);

struct Certificates {
  double state_lmi = 0.0;     // λ_max(AP + PA^T - 2BB^T)
  double output_lmi = 0.0;    // λ_max(A^T H + HA - 2C^T C)
  double abscissa_w1 = 0.0;
  double abscissa_observer = 0.0;  // A + LC
  double abscissa_feedback = 0.0;  // A + BK
  double abscissa_w = 0.0;
  double state_residual = 0.0;
  double output_residual = 0.0;
  bool c1_ok = false;
  bool c2_ok = false;

  bool lmi_ok() const { return state_lmi < 0.0 && output_lmi < 0.0; }
  bool hurwitz_ok() const {
    return abscissa_w1 < -1e-6 && abscissa_observer < -1e-6 &&
           abscissa_feedback < -1e-6 && abscissa_w < -1e-6;
  }
  bool all_pass() const { return lmi_ok() && hurwitz_ok() && c1_ok && c2_ok; }
};

Certificates certify(const GainSet& gains, const FollowerMatrixSet& mats);

}  // namespace formctl
