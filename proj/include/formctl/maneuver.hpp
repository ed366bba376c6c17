#pragma once

#include <array>
#include <optional>
#include <vector>

#include "formctl/formation_graph.hpp"
#include "formctl/jet.hpp"
#include "formctl/types.hpp"

namespace formctl {

// Highest integrator order whose feedforward p^(m) the jets can carry.
inline constexpr int kMaxPlantOrder = Jet::kMaxOrder - 1;

// Scalar closed form f(t) = sum_k poly[k] t^k + sum_s amp sin(freq t + phase),
// with t absolute time.
struct Profile {
  struct Sine {
    double amplitude = 0.0;
    double frequency = 0.0;
    double phase = 0.0;
  };
  std::vector<double> poly;
  std::vector<Sine> sines;

  static Profile constant(double c) { return Profile{{c}, {}}; }

  // Taylor jet of the profile at t, derivatives 0..order.
  Jet jet(double t, int order) const;
  double value(double t) const { return jet(t, 0).value(); }
};

struct Vec3Profile {
  std::array<Profile, 3> axes;

  static Vec3Profile constant(const Vec3& v);
  std::array<Jet, 3> jets(double t, int order) const;
  Vec3 value(double t) const;
};

// One maneuver interval [t0, t1). An empty leader_shape means the nominal
// leader positions are used as g_l.
struct ManeuverSegment {
  double t0 = 0.0;
  double t1 = 0.0;
  Profile scale = Profile::constant(1.0);
  Vec3 axis = Vec3::UnitZ();
  Profile angle = Profile::constant(0.0);
  Vec3Profile translation = Vec3Profile::constant(Vec3::Zero());
  std::vector<Vec3Profile> leader_shape;

  bool uses_nominal_shape() const { return leader_shape.empty(); }
};

struct ManeuverPlan {
  std::vector<ManeuverSegment> segments;

  double t_begin() const { return segments.front().t0; }
  double t_end() const { return segments.back().t1; }

  // Segment owning t: t0 <= t < t1, the last segment also owns its t1.
  // Throws kTimeOutOfRange.
  const ManeuverSegment& segment_at(double t) const;
  int segment_index(double t) const;

  // Ordered contiguous segments, a(t) > 0 on a sample grid, unit axes,
  // leader shapes sized n_leaders. Throws kValidationError.
  void validate(int n_leaders) const;
};

// Rotation Q(t) = exp(θ(t) [k]x) for a unit axis k (Rodrigues form).
Eigen::Matrix3d rotation(const Vec3& axis, double angle);

// g_f = -(Ω_ff^{-1} Ω_fl ⊗ I_3) g_l for a stacked leader shape.
// Throws kNotLocalizable.
Vector solve_shape(const Vector& g_l, const FollowerMatrixSet& mats);

// Everything needed to map a leader shape onto the whole formation.
struct ShapeSolution {
  Matrix leader_map;  // S = Ω_ff^{-1} Ω_fl
  std::vector<Vec3> nominal_leaders;

  int n_leaders() const { return static_cast<int>(leader_map.cols()); }
  int n_followers() const { return static_cast<int>(leader_map.rows()); }
  int size() const { return n_leaders() + n_followers(); }

  static ShapeSolution from(const FollowerMatrixSet& mats,
                            const NominalFormation& formation);

  // g(t) = [g_l; g_f] stacked (3n) on the segment owning t.
  Vector shape(const ManeuverPlan& plan, double t) const;
};

struct DesiredState {
  Vector x;          // (p, p^(1), ..., p^(m-1)) stacked, 3m
  Vec3 feedforward;  // p^(m)
};

// p*(t) for all agents, p*_i = a Q g_i + b.
std::vector<Vec3> desired_formation(double t, const ManeuverPlan& plan,
                                    const ShapeSolution& shape);

// Derivatives 0..order of p*_i for one leader, as columns of a 3x(order+1)
// matrix.
Matrix leader_derivatives(double t, int leader, int order,
                          const ManeuverPlan& plan, const ShapeSolution& shape);

DesiredState desired_leader_state(double t, int leader, int m,
                                  const ManeuverPlan& plan,
                                  const ShapeSolution& shape);

// All leader states at once.
std::vector<DesiredState> desired_leader_states(double t, int m,
                                                const ManeuverPlan& plan,
                                                const ShapeSolution& shape);

// Evaluated on the closed forms of one given segment, whether or not t lies
// inside it.
Matrix leader_derivatives(double t, int leader, int order,
                          const ManeuverSegment& segment,
                          const ShapeSolution& shape);
std::vector<DesiredState> desired_leader_states(double t, int m,
                                                const ManeuverSegment& segment,
                                                const ShapeSolution& shape);

// x*_f = -(S ⊗ I_{3m}) x*_l.
std::vector<DesiredState> desired_follower_states(
    const std::vector<DesiredState>& leaders, const Matrix& leader_map);

std::vector<DesiredState> desired_follower_state(double t, int m,
                                                 const ManeuverPlan& plan,
                                                 const ShapeSolution& shape);

// γ_k = sup ||p*_i^(k)(t)|| over leaders, k = 1..m, sampled on every segment
// with step <= 1e-3 horizon. Element k-1 holds γ_k.
std::vector<double> derivative_bounds(const ManeuverPlan& plan,
                                      const ShapeSolution& shape, int m,
                                      std::optional<double> horizon = {});

}  // namespace formctl
