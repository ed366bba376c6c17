#pragma once

#include <map>

#include "formctl/gain_synthesis.hpp"
#include "formctl/maneuver.hpp"
#include "formctl/types.hpp"

namespace formctl {

enum class Role { kLeader, kFollower };

struct AgentState {
  int id = 0;
  Role role = Role::kLeader;
  Vector x;  // (p, p^(1), ..., p^(m-1))
};

struct ControlUpdate {
  Vec3 u = Vec3::Zero();
  Vector eta_dot;
};

struct RelativeUpdate {
  Vec3 u = Vec3::Zero();
  std::map<int, Vector> eta_dot;  // keyed by neighbor j
};

// Boundary-layer signum v / max(||v||, ε).
Vec3 sgn_eps(const Vec3& v, double epsilon);

// Ax + Bu. Throws kDimensionMismatch.
Vector plant_rhs(const Vector& x, const Vec3& u, const PlantMatrices& plant);

Vector measure_output(const Vector& x, const PlantMatrices& plant);

// u = (β ⊗ I_3)^T (η - x*) + p*^(m), η' = Aη + Bu + L(Cη - y).
ControlUpdate leader_step(const AgentState& agent, const Vector& eta,
                          const DesiredState& desired, const GainSet& gains);

// Follower law on s = Σ_j w_ij (η_i - η_j) with the consensus innovation
// c1 L Σ_j w_ij [C(η_i - η_j) - (y_i - y_j)].
ControlUpdate follower_step_absolute(const AgentState& agent,
                                     const Vector& eta,
                                     const std::map<int, Vector>& neighbor_eta,
                                     const std::map<int, double>& weights,
                                     const Vector& y,
                                     const std::map<int, Vector>& neighbor_y,
                                     const GainSet& gains, double epsilon);

// Per-edge estimates η_ij of x_i - x_j driven by relative outputs and the
// exchanged inputs u_j.
RelativeUpdate follower_step_relative(
    const AgentState& agent, const std::map<int, Vector>& eta_edges,
    const std::map<int, Vector>& relative_outputs,
    const std::map<int, Vec3>& neighbor_inputs,
    const std::map<int, double>& weights, const GainSet& gains, double epsilon);

Vec3 follower_step_state_feedback(const AgentState& agent,
                                  const std::map<int, Vector>& neighbor_states,
                                  const std::map<int, double>& weights,
                                  const GainSet& gains, double epsilon);

// Shared kernels used by the map-based entry points and the simulator.
namespace law {

// (β ⊗ I_3)^T v for a 3m vector.
Vec3 beta_contract(const Vector& beta, const Vector& v);

// c1 K s + c2 sgn_ε(K s).
Vec3 coupled_input(const Matrix& K, const Vector& s, double c1, double c2,
                   double epsilon);

}  // namespace law

}  // namespace formctl
