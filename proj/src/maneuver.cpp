#include "formctl/maneuver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "formctl/errors.hpp"

namespace formctl {
namespace {

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

std::array<std::array<Jet, 3>, 3> rotation_jets(const Vec3& axis,
                                                const Jet& angle) {
  Jet s;
  Jet c;
  sincos(angle, s, c);
  const int n = angle.order();
  Jet one_minus_c = Jet(n, 1.0) - c;
  Eigen::Matrix3d kx;
  kx << 0, -axis.z(), axis.y(), axis.z(), 0, -axis.x(), -axis.y(), axis.x(), 0;
  const Eigen::Matrix3d k2 = kx * kx;
  std::array<std::array<Jet, 3>, 3> q;
  for (int r = 0; r < 3; ++r) {
    for (int col = 0; col < 3; ++col) {
      q[r][col] = Jet(n, r == col ? 1.0 : 0.0) + kx(r, col) * s +
                  k2(r, col) * one_minus_c;
    }
  }
  return q;
}

std::array<Jet, 3> leader_shape_jets(const ManeuverSegment& seg,
                                     const ShapeSolution& shape, int leader,
                                     double t, int order) {
  if (seg.uses_nominal_shape()) {
    const Vec3& r = shape.nominal_leaders[leader];
    return {Jet(order, r.x()), Jet(order, r.y()), Jet(order, r.z())};
  }
  return seg.leader_shape[leader].jets(t, order);
}

}  // namespace

Jet Profile::jet(double t, int order) const {
  Jet out(order);
  // Taylor coefficients of the polynomial about t.
  for (int k = 0; k <= order; ++k) {
    double acc = 0.0;
    for (int j = static_cast<int>(poly.size()) - 1; j >= k; --j) {
      acc += poly[j] * binomial(j, k) * std::pow(t, j - k);
    }
    out.coeff(k) = acc;
  }
  for (const auto& sn : sines) {
    Jet u(order, sn.frequency * t + sn.phase);
    if (order >= 1) u.coeff(1) = sn.frequency;
    Jet s;
    Jet c;
    sincos(u, s, c);
    out += sn.amplitude * s;
  }
  return out;
}

Vec3Profile Vec3Profile::constant(const Vec3& v) {
  return Vec3Profile{{Profile::constant(v.x()), Profile::constant(v.y()),
                      Profile::constant(v.z())}};
}

std::array<Jet, 3> Vec3Profile::jets(double t, int order) const {
  return {axes[0].jet(t, order), axes[1].jet(t, order), axes[2].jet(t, order)};
}

Vec3 Vec3Profile::value(double t) const {
  return {axes[0].value(t), axes[1].value(t), axes[2].value(t)};
}

int ManeuverPlan::segment_index(double t) const {
  if (segments.empty() || !(t >= t_begin()) || !(t <= t_end())) {
    std::ostringstream os;
    os << "t = " << t << " outside the maneuver horizon";
    if (!segments.empty()) os << " [" << t_begin() << ", " << t_end() << "]";
    throw Error(ErrorCode::kTimeOutOfRange, os.str());
  }
  const int last = static_cast<int>(segments.size()) - 1;
  for (int i = 0; i < last; ++i) {
    if (t < segments[i].t1) return i;
  }
  return last;
}

const ManeuverSegment& ManeuverPlan::segment_at(double t) const {
  return segments[segment_index(t)];
}

void ManeuverPlan::validate(int n_leaders) const {
  const auto fail = [](const std::string& msg) {
    throw Error(ErrorCode::kValidationError, msg);
  };
  if (segments.empty()) fail("maneuver has no segments");
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    const std::string tag = "segment " + std::to_string(i + 1);
    if (!std::isfinite(s.t0) || !std::isfinite(s.t1) || !(s.t1 > s.t0)) {
      fail(tag + " must satisfy t0 < t1");
    }
    if (i > 0 && s.t0 != segments[i - 1].t1) {
      fail(tag + " does not start where the previous one ends");
    }
    if (!(s.axis.norm() > 0.0) || std::abs(s.axis.norm() - 1.0) > 1e-12) {
      fail(tag + " rotation axis must be a unit vector");
    }
    if (!s.uses_nominal_shape() &&
        static_cast<int>(s.leader_shape.size()) != n_leaders) {
      fail(tag + " shape lists " + std::to_string(s.leader_shape.size()) +
           " leaders, expected " + std::to_string(n_leaders));
    }
    const int samples = 1000;
    for (int k = 0; k <= samples; ++k) {
      const double t = s.t0 + (s.t1 - s.t0) * k / samples;
      if (!(s.scale.value(t) > 0.0)) fail(tag + " scale a(t) must stay positive");
    }
  }
}

Eigen::Matrix3d rotation(const Vec3& axis, double angle) {
  const auto q = rotation_jets(axis, Jet(0, angle));
  Eigen::Matrix3d out;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out(r, c) = q[r][c].value();
  }
  return out;
}

Vector solve_shape(const Vector& g_l, const FollowerMatrixSet& mats) {
  if (g_l.size() != kDim * mats.n_leaders) {
    throw Error(ErrorCode::kDimensionMismatch,
                "leader shape has " + std::to_string(g_l.size()) +
                    " entries, expected " + std::to_string(kDim * mats.n_leaders));
  }
  Eigen::JacobiSVD<Matrix> svd(mats.omega_ff);
  const Vector& s = svd.singularValues();
  if (!(s(0) > 0.0) || s(s.size() - 1) <= 1e-9 * s(0)) {
    throw Error(ErrorCode::kNotLocalizable,
                "follower block is singular; g_f is not determined by g_l");
  }
  return -kron_identity(mats.leader_map(), kDim) * g_l;
}

ShapeSolution ShapeSolution::from(const FollowerMatrixSet& mats,
                                  const NominalFormation& formation) {
  ShapeSolution out;
  Eigen::JacobiSVD<Matrix> svd(mats.omega_ff);
  const Vector& s = svd.singularValues();
  if (!(s(0) > 0.0) || s(s.size() - 1) <= 1e-9 * s(0)) {
    throw Error(ErrorCode::kNotLocalizable, "follower block is singular");
  }
  out.leader_map = mats.leader_map();
  out.nominal_leaders.assign(formation.positions.begin(),
                             formation.positions.begin() + formation.n_leaders);
  return out;
}

Vector ShapeSolution::shape(const ManeuverPlan& plan, double t) const {
  const auto& seg = plan.segment_at(t);
  Vector gl(kDim * n_leaders());
  for (int i = 0; i < n_leaders(); ++i) {
    gl.segment<kDim>(kDim * i) = seg.uses_nominal_shape()
                                     ? nominal_leaders[i]
                                     : seg.leader_shape[i].value(t);
  }
  Vector g(kDim * size());
  g.head(gl.size()) = gl;
  g.tail(kDim * n_followers()) = -kron_identity(leader_map, kDim) * gl;
  return g;
}

std::vector<Vec3> desired_formation(double t, const ManeuverPlan& plan,
                                    const ShapeSolution& shape) {
  const auto& seg = plan.segment_at(t);
  const double a = seg.scale.value(t);
  const Eigen::Matrix3d q = rotation(seg.axis, seg.angle.value(t));
  const Vec3 b = seg.translation.value(t);
  const Vector g = shape.shape(plan, t);
  std::vector<Vec3> p(shape.size());
  for (int i = 0; i < shape.size(); ++i) {
    p[i] = a * (q * g.segment<kDim>(kDim * i)) + b;
  }
  return p;
}

Matrix leader_derivatives(double t, int leader, int order,
                          const ManeuverSegment& seg,
                          const ShapeSolution& shape) {
  if (leader < 0 || leader >= shape.n_leaders()) {
    throw Error(ErrorCode::kIndexOutOfRange,
                "agent " + std::to_string(leader + 1) + " is not a leader");
  }
  if (order < 0 || order > Jet::kMaxOrder) {
    throw Error(ErrorCode::kInvalidArgument,
                "derivative order " + std::to_string(order) + " unsupported");
  }
  const Jet a = seg.scale.jet(t, order);
  const auto q = rotation_jets(seg.axis, seg.angle.jet(t, order));
  const auto b = seg.translation.jets(t, order);
  const auto g = leader_shape_jets(seg, shape, leader, t, order);
  Matrix out(kDim, order + 1);
  for (int r = 0; r < kDim; ++r) {
    const Jet qg = q[r][0] * g[0] + q[r][1] * g[1] + q[r][2] * g[2];
    const Jet p = a * qg + b[r];
    for (int k = 0; k <= order; ++k) out(r, k) = p.derivative(k);
  }
  return out;
}

Matrix leader_derivatives(double t, int leader, int order,
                          const ManeuverPlan& plan, const ShapeSolution& shape) {
  return leader_derivatives(t, leader, order, plan.segment_at(t), shape);
}

namespace {

void check_order(int m) {
  if (m < 1 || m > kMaxPlantOrder) {
    throw Error(ErrorCode::kInvalidArgument,
                "plant order must lie in 1.." + std::to_string(kMaxPlantOrder));
  }
}

DesiredState to_state(const Matrix& d, int m) {
  DesiredState s;
  s.x.resize(kDim * m);
  for (int k = 0; k < m; ++k) s.x.segment<kDim>(kDim * k) = d.col(k);
  s.feedforward = d.col(m);
  return s;
}

}  // namespace

DesiredState desired_leader_state(double t, int leader, int m,
                                  const ManeuverPlan& plan,
                                  const ShapeSolution& shape) {
  check_order(m);
  return to_state(leader_derivatives(t, leader, m, plan, shape), m);
}

std::vector<DesiredState> desired_leader_states(double t, int m,
                                                const ManeuverSegment& segment,
                                                const ShapeSolution& shape) {
  check_order(m);
  std::vector<DesiredState> out;
  out.reserve(shape.n_leaders());
  for (int i = 0; i < shape.n_leaders(); ++i) {
    out.push_back(to_state(leader_derivatives(t, i, m, segment, shape), m));
  }
  return out;
}

std::vector<DesiredState> desired_leader_states(double t, int m,
                                                const ManeuverPlan& plan,
                                                const ShapeSolution& shape) {
  return desired_leader_states(t, m, plan.segment_at(t), shape);
}

std::vector<DesiredState> desired_follower_states(
    const std::vector<DesiredState>& leaders, const Matrix& leader_map) {
  const int nf = static_cast<int>(leader_map.rows());
  const int nl = static_cast<int>(leader_map.cols());
  const Eigen::Index dim = leaders.empty() ? 0 : leaders.front().x.size();
  std::vector<DesiredState> out(nf);
  for (int f = 0; f < nf; ++f) {
    out[f].x = Vector::Zero(dim);
    out[f].feedforward = Vec3::Zero();
    for (int j = 0; j < nl; ++j) {
      const double s = leader_map(f, j);
      if (s == 0.0) continue;
      out[f].x -= s * leaders[j].x;
      out[f].feedforward -= s * leaders[j].feedforward;
    }
  }
  return out;
}

std::vector<DesiredState> desired_follower_state(double t, int m,
                                                 const ManeuverPlan& plan,
                                                 const ShapeSolution& shape) {
  return desired_follower_states(desired_leader_states(t, m, plan, shape),
                                 shape.leader_map);
}

std::vector<double> derivative_bounds(const ManeuverPlan& plan,
                                      const ShapeSolution& shape, int m,
                                      std::optional<double> horizon) {
  std::vector<double> gamma(m, 0.0);
  const double t_stop =
      horizon ? std::min(plan.t_end(), plan.t_begin() + *horizon) : plan.t_end();
  const double span = t_stop - plan.t_begin();
  if (!(span > 0.0)) return gamma;
  const double step = 1e-3 * span;
  for (const auto& seg : plan.segments) {
    const double lo = seg.t0;
    const double hi = std::min(seg.t1, t_stop);
    if (!(hi > lo)) continue;
    const int n = static_cast<int>(std::ceil((hi - lo) / step));
    for (int k = 0; k <= n; ++k) {
      const double t = lo + (hi - lo) * k / n;
      for (int i = 0; i < shape.n_leaders(); ++i) {
        const Matrix d = leader_derivatives(t, i, m, seg, shape);
        for (int o = 1; o <= m; ++o) {
          gamma[o - 1] = std::max(gamma[o - 1], d.col(o).norm());
        }
      }
    }
  }
  return gamma;
}

}  // namespace formctl
