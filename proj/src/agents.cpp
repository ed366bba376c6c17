#include "formctl/agents.hpp"

#include <algorithm>

#include "formctl/errors.hpp"

namespace formctl {
namespace {

void require_dim(const Vector& v, Eigen::Index n, const char* what) {
  if (v.size() != n) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(what) + " has dimension " + std::to_string(v.size()) +
                    ", expected " + std::to_string(n));
  }
}

void require_role(const AgentState& a, Role role) {
  if (a.role != role) {
    throw Error(ErrorCode::kRoleMismatch,
                "agent " + std::to_string(a.id + 1) + " is a " +
                    (a.role == Role::kLeader ? "leader" : "follower"));
  }
}

template <typename T>
const T& lookup(const std::map<int, T>& m, int j, ErrorCode code,
                const char* what) {
  const auto it = m.find(j);
  if (it == m.end()) {
    throw Error(code, std::string("missing ") + what + " of agent " +
                          std::to_string(j + 1));
  }
  return it->second;
}

}  // namespace

namespace law {

Vec3 beta_contract(const Vector& beta, const Vector& v) {
  Vec3 out = Vec3::Zero();
  for (Eigen::Index k = 0; k < beta.size(); ++k) {
    out += beta(k) * v.segment<kDim>(kDim * k);
  }
  return out;
}

Vec3 coupled_input(const Matrix& K, const Vector& s, double c1, double c2,
                   double epsilon) {
  const Vec3 ks = K * s;
  Vec3 u = c1 * ks;
  if (c2 != 0.0) u += c2 * sgn_eps(ks, epsilon);
  return u;
}

}  // namespace law

Vec3 sgn_eps(const Vec3& v, double epsilon) {
  return v / std::max(v.norm(), epsilon);
}

Vector plant_rhs(const Vector& x, const Vec3& u, const PlantMatrices& plant) {
  require_dim(x, plant.state_dim(), "state");
  return plant.A * x + plant.B * u;
}

Vector measure_output(const Vector& x, const PlantMatrices& plant) {
  require_dim(x, plant.state_dim(), "state");
  return plant.C * x;
}

ControlUpdate leader_step(const AgentState& agent, const Vector& eta,
                          const DesiredState& desired, const GainSet& gains) {
  require_role(agent, Role::kLeader);
  const auto& p = gains.plant;
  require_dim(agent.x, p.state_dim(), "state");
  require_dim(eta, p.state_dim(), "estimate");
  require_dim(desired.x, p.state_dim(), "reference");
  ControlUpdate out;
  out.u = law::beta_contract(gains.beta, eta - desired.x) + desired.feedforward;
  out.eta_dot = p.A * eta + p.B * out.u + gains.L * (p.C * eta - p.C * agent.x);
  return out;
}

ControlUpdate follower_step_absolute(const AgentState& agent,
                                     const Vector& eta,
                                     const std::map<int, Vector>& neighbor_eta,
                                     const std::map<int, double>& weights,
                                     const Vector& y,
                                     const std::map<int, Vector>& neighbor_y,
                                     const GainSet& gains, double epsilon) {
  require_role(agent, Role::kFollower);
  const auto& p = gains.plant;
  require_dim(eta, p.state_dim(), "estimate");
  require_dim(y, p.q(), "output");
  Vector s = Vector::Zero(p.state_dim());
  Vector dy = Vector::Zero(p.q());
  for (const auto& [j, w] : weights) {
    const Vector& ej =
        lookup(neighbor_eta, j, ErrorCode::kMissingNeighbor, "estimate");
    const Vector& yj =
        lookup(neighbor_y, j, ErrorCode::kMissingNeighbor, "output");
    require_dim(ej, p.state_dim(), "neighbor estimate");
    require_dim(yj, p.q(), "neighbor output");
    s += w * (eta - ej);
    dy += w * (y - yj);
  }
  ControlUpdate out;
  out.u = law::coupled_input(gains.K, s, gains.c1, gains.c2, epsilon);
  out.eta_dot = p.A * eta + p.B * out.u + gains.L * (p.C * eta - y) +
                gains.c1 * gains.L * (p.C * s - dy);
  return out;
}

RelativeUpdate follower_step_relative(
    const AgentState& agent, const std::map<int, Vector>& eta_edges,
    const std::map<int, Vector>& relative_outputs,
    const std::map<int, Vec3>& neighbor_inputs,
    const std::map<int, double>& weights, const GainSet& gains,
    double epsilon) {
  require_role(agent, Role::kFollower);
  const auto& p = gains.plant;
  Vector s = Vector::Zero(p.state_dim());
  for (const auto& [j, w] : weights) {
    const Vector& e =
        lookup(eta_edges, j, ErrorCode::kMissingEdgeEstimate, "edge estimate");
    require_dim(e, p.state_dim(), "edge estimate");
    s += w * e;
  }
  RelativeUpdate out;
  out.u = law::coupled_input(gains.K, s, gains.c1, gains.c2, epsilon);
  for (const auto& [j, w] : weights) {
    const Vector& e = eta_edges.at(j);
    const Vector& dy = lookup(relative_outputs, j,
                              ErrorCode::kMissingEdgeEstimate, "relative output");
    const Vec3& uj =
        lookup(neighbor_inputs, j, ErrorCode::kMissingNeighbor, "input");
    out.eta_dot[j] = p.A * e + p.B * (out.u - uj) + gains.L * (p.C * e - dy);
  }
  return out;
}

Vec3 follower_step_state_feedback(const AgentState& agent,
                                  const std::map<int, Vector>& neighbor_states,
                                  const std::map<int, double>& weights,
                                  const GainSet& gains, double epsilon) {
  require_role(agent, Role::kFollower);
  const auto& p = gains.plant;
  require_dim(agent.x, p.state_dim(), "state");
  Vector s = Vector::Zero(p.state_dim());
  for (const auto& [j, w] : weights) {
    const Vector& xj =
        lookup(neighbor_states, j, ErrorCode::kMissingNeighbor, "state");
    require_dim(xj, p.state_dim(), "neighbor state");
    s += w * (agent.x - xj);
  }
  return law::coupled_input(gains.K, s, gains.c1, gains.c2, epsilon);
}

}  // namespace formctl
