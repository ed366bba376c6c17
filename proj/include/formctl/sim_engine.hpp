#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "formctl/agents.hpp"
#include "formctl/formation_graph.hpp"
#include "formctl/gain_synthesis.hpp"
#include "formctl/maneuver.hpp"

namespace formctl {

enum class Integrator { kRk4, kEuler };

struct SimConfig {
  double dt = 1e-3;
  std::optional<double> t_end;  // defaults to the plan's end
  double epsilon = 1e-3;
  Integrator integrator = Integrator::kRk4;
  std::uint64_t seed = 0;
  bool assert_bounds = false;
  int record_every = 1;
  bool parallel = false;  // OpenMP over agents inside one run

  // Throws kValidationError.
  void validate() const;
};

// Initial x_i and η_i per agent (3m each).
struct InitialState {
  std::vector<Vector> x;
  std::vector<Vector> eta;
};

// How initial states are drawn around the references at t = 0.
struct InitialConditionSpec {
  double leader_error = 0.0;           // ||x_i(0) - x*_i(0)|| radius
  double leader_estimate_error = 0.0;  // ||η_i(0) - x_i(0)|| radius
  bool random_radius = true;           // uniform in the ball, else on the sphere
  Vec3 follower_offset = Vec3::Zero();
  double follower_spread = 0.0;
  // Followers start with η_i(0) = 0 unless set.
  bool follower_estimate_exact = false;
};

InitialState make_initial_state(const InitialConditionSpec& spec,
                                const ManeuverPlan& plan,
                                const ShapeSolution& shape, int m,
                                std::uint64_t seed);

struct SimTrace {
  int n = 0;
  int n_leaders = 0;
  int m = 1;
  FollowerVariant variant = FollowerVariant::kOmegaHat;
  std::vector<double> times;
  // One matrix per sample with one column per agent.
  std::vector<Matrix> x;    // 3m x n
  std::vector<Matrix> eta;  // 3m x n, zero where an agent has no observer
  std::vector<Matrix> u;    // 3 x n
  // Leaders: [x_i - x*_i; η_i - x_i]. Followers: their block of e_f.
  std::vector<Matrix> err;  // 6m x n

  int samples() const { return static_cast<int>(times.size()); }
  int state_dim() const { return kDim * m; }
  bool followers_observe() const {
    return variant == FollowerVariant::kOmegaBar ||
           variant == FollowerVariant::kOmegaHat;
  }
  // ||e_i|| for leaders, ||e_f block|| for followers.
  double err_norm(int sample, int agent) const;
};

// e_f = z_f + (S ⊗ I) z_l with z_i = [x_i; η_i], or z_i = [x_i; 0] when
// followers carry no observer. Returns one column per follower.
Matrix follower_error(const Matrix& x, const Matrix& eta, const Matrix& leader_map,
                      bool with_estimates);

// Coupled plant, observers and controllers of one formation as a flat ODE.
class ClosedLoop {
 public:
  ClosedLoop(const FollowerMatrixSet& mats, const ShapeSolution& shape,
             const GainSet& gains, FollowerVariant variant, double epsilon);

  int agents() const { return n_; }
  int state_size() const { return size_; }
  int state_dim() const { return d_; }

  Vector pack(const InitialState& init) const;
  Matrix positions_x(const Vector& z) const;    // d x n
  Matrix positions_eta(const Vector& z) const;  // d x n

  // dz/dt at (t, z) with references from `segment`. Writes the applied inputs
  // (3 x n) when requested.
  void rhs_serial(double t, const ManeuverSegment& segment, const Vector& z,
                  Vector& dz, Matrix* inputs = nullptr) const;
  void rhs_parallel(double t, const ManeuverSegment& segment, const Vector& z,
                    Vector& dz, Matrix* inputs = nullptr) const;

 private:
  struct Edge {
    int j;
    double w;
  };
  void follower_input(int f, const Vector& z, const Matrix& y, Vec3& u) const;
  void leader_terms(int i, const DesiredState& ref, const Vector& z,
                    const Matrix& y, Vec3& u) const;
  void agent_derivative(int i, const Vector& z, const Matrix& y,
                        const Matrix& u, Vector& dz) const;

  int n_ = 0;
  int nl_ = 0;
  int d_ = 0;
  int size_ = 0;
  int edge_offset_ = 0;
  FollowerVariant variant_;
  double epsilon_;
  const GainSet* gains_;
  const ShapeSolution* shape_;
  std::vector<std::vector<Edge>> edges_;  // per follower
  std::vector<int> edge_base_;            // per follower, first edge slot
  Matrix c1L_;
};

SimTrace run_scenario(const FollowerMatrixSet& mats, const ManeuverPlan& plan,
                      const ShapeSolution& shape, const GainSet& gains,
                      const SimConfig& config, FollowerVariant variant,
                      const InitialState& init);

struct SegmentStats {
  double t0 = 0.0;
  double t1 = 0.0;
  double terminal_leader = 0.0;
  double terminal_follower = 0.0;
  // Maxima over the final 20% of the segment.
  double tail_leader = 0.0;
  double tail_follower = 0.0;
  int tail_samples = 0;
};

struct ErrorSummary {
  std::vector<double> leader_max;   // max_i ||x_i - x*_i|| per sample
  std::vector<double> follower;     // ||e_f|| per sample
  std::vector<double> observer_max;  // max_i ||η_i - x_i|| per sample
  std::vector<SegmentStats> segments;
  double max_tail_leader() const;
  double max_tail_follower() const;
};

// Recomputes every error series from the stored states.
ErrorSummary tracking_errors(const SimTrace& trace, const ShapeSolution& shape,
                             const ManeuverPlan& plan);

struct BoundReport {
  double gamma_u = 0.0;
  std::vector<double> sup_u;  // per leader
  double slack = 0.0;         // γ_u - max sup
  bool ok = true;
  int worst_leader = -1;
  double worst_time = 0.0;
};

BoundReport verify_bounds(const SimTrace& trace, const GainSet& gains);
// Throws kBoundViolated naming the leader and time.
void require_bounds(const BoundReport& report);

struct MonteCarloRun {
  std::uint64_t seed = 0;
  double sup_leader_input = 0.0;
  double max_tail_leader = 0.0;
  double max_tail_follower = 0.0;
  bool bound_ok = true;
  std::string error;  // non-empty when the run threw
};

// Independent runs with seeds seed0, seed0+1, ... in parallel over `jobs`
// threads (0: OpenMP default).
std::vector<MonteCarloRun> run_monte_carlo(
    const FollowerMatrixSet& mats, const ManeuverPlan& plan,
    const ShapeSolution& shape, const GainSet& gains, const SimConfig& config,
    FollowerVariant variant, const InitialConditionSpec& spec, int runs,
    std::uint64_t seed0, int jobs);

}  // namespace formctl
