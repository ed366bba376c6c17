#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "formctl/types.hpp"

namespace formctl {

// Nominal formation (G, r). Agents are indexed from 0; leaders occupy
// 0..n_leaders-1 and followers the remaining indices.
struct NominalFormation {
  int n_leaders = 0;
  std::vector<Vec3> positions;
  // neighbors[f] lists the constraint neighbors of follower n_leaders + f.
  std::vector<std::vector<int>> neighbors;

  int size() const { return static_cast<int>(positions.size()); }
  int follower_count() const { return size() - n_leaders; }
  bool is_leader(int agent) const { return agent < n_leaders; }

  // Stacked positions r (3n).
  Vector stacked() const;
  Vector stacked_leaders() const;
  Vector stacked_followers() const;

  // True when every position lies on a common plane.
  bool is_planar(double tol = 1e-9) const;

  // Throws kValidationError on agent counts, collocated agents or malformed
  // neighbor lists.
  void validate() const;
};

// Displacement constraint sum_j w_ij (r_i - r_j) = 0 of one follower.
struct DisplacementConstraint {
  int agent = 0;
  std::vector<int> neighbors;
  std::vector<double> weights;
};

// Weight vector w with sum_j w_j (agent - neighbor_j) = 0, from the null space
// of the stacked edge matrix [e_i1 ... e_ik]. The geometric case (colinear,
// coplanar, general) follows from the numerical rank; the result is scaled so
// that its largest-magnitude entry is +1.
Vector compute_displacement_parameters(const Vec3& agent,
                                       std::span<const Vec3> neighbors);

// Residual sum_j w_j (agent - neighbor_j).
Vec3 displacement_residual(const Vec3& agent, std::span<const Vec3> neighbors,
                           const Vector& weights);

// One constraint per follower from the formation geometry.
std::vector<DisplacementConstraint> build_constraints(
    const NominalFormation& formation);

// Checks a constraint against the geometry (sum_j w_j e_ij = 0 within 1e-9 of
// the longest edge, weights not all zero). Throws kValidationError.
void validate_constraint(const NominalFormation& formation,
                         const DisplacementConstraint& constraint);

struct FollowerMatrixSet {
  int n_leaders = 0;
  Matrix omega_f;   // n_f x n
  Matrix omega_fl;  // n_f x n_l
  Matrix omega_ff;  // n_f x n_f
  // Filled by derive_variants.
  Matrix omega_bar;  // Ω_ff^{-1} Ω_f
  Matrix omega_hat;  // Ω_ff^T Ω_f
  bool localizable = false;

  int follower_count() const { return static_cast<int>(omega_f.rows()); }
  int agent_count() const { return static_cast<int>(omega_f.cols()); }
  bool has_variants() const { return omega_bar.size() > 0; }

  // Ω_ff^{-1} Ω_fl; the follower targets are -(S ⊗ I) times the leaders'.
  Matrix leader_map() const;
};

FollowerMatrixSet assemble_follower_matrix(
    const NominalFormation& formation,
    std::span<const DisplacementConstraint> constraints);

struct LocalizabilityCertificate {
  bool localizable = false;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  // ||r_f + (Ω_ff^{-1} Ω_fl ⊗ I_3) r_l||, only meaningful when localizable.
  double reconstruction_residual = 0.0;
  // Reconstruction agrees with the nominal followers to 1e-8 (relative to
  // ||r||); false when the constraints do not match the geometry.
  bool consistent = false;
};

// Localizable iff Ω_ff is nonsingular (σ_min > 1e-9 σ_max). When it is, the
// follower positions are also reconstructed from the leaders and the residual
// recorded.
LocalizabilityCertificate check_localizable(const FollowerMatrixSet& mats,
                                            const NominalFormation& formation);

// Ω̄_f = Ω_ff^{-1} Ω_f (follower block set to I exactly) and
// Ω̂_f = Ω_ff^T Ω_f. Throws kNotLocalizable when Ω_ff is singular.
FollowerMatrixSet derive_variants(FollowerMatrixSet mats);

// Edge weights {j -> w_ij} of follower `agent` (global index) read from one
// of Ω_f, Ω̄_f or Ω̂_f: w_ij = -M(row, j) for j != agent; exact zeros omitted.
std::map<int, double> edge_weights(const Matrix& matrix, int n_leaders,
                                   int agent);

// Rows scaled so that the largest-magnitude entry of each row is +1.
Matrix normalize_rows(const Matrix& m);

}  // namespace formctl
