#include "formctl/sim_engine.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "formctl/errors.hpp"

namespace formctl {
namespace {

constexpr double kBlowup = 1e9;

Vector random_ball(std::mt19937_64& rng, Eigen::Index dim, double radius,
                   bool uniform) {
  if (radius <= 0.0 || dim == 0) return Vector::Zero(dim);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector v(dim);
  double norm = 0.0;
  do {
    for (Eigen::Index k = 0; k < dim; ++k) v(k) = normal(rng);
    norm = v.norm();
  } while (norm == 0.0);
  const double r =
      uniform ? radius * std::pow(unit(rng), 1.0 / static_cast<double>(dim))
              : radius;
  return v * (r / norm);
}

}  // namespace

void SimConfig::validate() const {
  const auto fail = [](const std::string& msg) {
    throw Error(ErrorCode::kValidationError, msg);
  };
  if (!(dt > 0.0) || !(dt <= 1e-2)) fail("dt must lie in (0, 1e-2]");
  if (!(epsilon > 0.0)) fail("epsilon must be positive");
  if (record_every < 1) fail("record_every must be >= 1");
  if (t_end && !std::isfinite(*t_end)) fail("t_end must be finite");
}

double SimTrace::err_norm(int sample, int agent) const {
  const Matrix& e = err[sample];
  if (agent < n_leaders) return e.col(agent).head(state_dim()).norm();
  return e.col(agent).norm();
}

Matrix follower_error(const Matrix& x, const Matrix& eta,
                      const Matrix& leader_map, bool with_estimates) {
  const Eigen::Index d = x.rows();
  const Eigen::Index nl = leader_map.cols();
  const Eigen::Index nf = leader_map.rows();
  Matrix e = Matrix::Zero(2 * d, nf);
  for (Eigen::Index f = 0; f < nf; ++f) {
    e.col(f).head(d) = x.col(nl + f);
    if (with_estimates) e.col(f).tail(d) = eta.col(nl + f);
    for (Eigen::Index j = 0; j < nl; ++j) {
      const double s = leader_map(f, j);
      e.col(f).head(d) += s * x.col(j);
      if (with_estimates) e.col(f).tail(d) += s * eta.col(j);
    }
  }
  return e;
}

ClosedLoop::ClosedLoop(const FollowerMatrixSet& mats, const ShapeSolution& shape,
                       const GainSet& gains, FollowerVariant variant,
                       double epsilon)
    : variant_(variant), epsilon_(epsilon), gains_(&gains), shape_(&shape) {
  if (!mats.has_variants()) {
    throw Error(ErrorCode::kNotLocalizable,
                "follower matrix variants are missing");
  }
  n_ = mats.agent_count();
  nl_ = mats.n_leaders;
  d_ = gains.plant.state_dim();
  const Matrix& weights_from =
      uses_omega_hat(variant) ? mats.omega_hat : mats.omega_bar;
  int edges = 0;
  for (int f = 0; f < n_ - nl_; ++f) {
    std::vector<Edge> list;
    for (const auto& [j, w] : edge_weights(weights_from, nl_, nl_ + f)) {
      list.push_back({j, w});
    }
    edge_base_.push_back(edges);
    edges += static_cast<int>(list.size());
    edges_.push_back(std::move(list));
  }
  edge_offset_ = 2 * n_ * d_;
  size_ = edge_offset_ + (variant == FollowerVariant::kRelative ? edges * d_ : 0);
  c1L_ = gains.c1 * gains.L;
}

Vector ClosedLoop::pack(const InitialState& init) const {
  if (static_cast<int>(init.x.size()) != n_ ||
      static_cast<int>(init.eta.size()) != n_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "initial state must list every agent");
  }
  Vector z = Vector::Zero(size_);
  for (int i = 0; i < n_; ++i) {
    if (init.x[i].size() != d_ || init.eta[i].size() != d_) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "initial state of agent " + std::to_string(i + 1) +
                      " has the wrong dimension");
    }
    z.segment(d_ * i, d_) = init.x[i];
    const bool observer = i < nl_ || variant_ == FollowerVariant::kOmegaBar ||
                          variant_ == FollowerVariant::kOmegaHat;
    if (observer) z.segment(n_ * d_ + d_ * i, d_) = init.eta[i];
  }
  return z;
}

Matrix ClosedLoop::positions_x(const Vector& z) const {
  return Eigen::Map<const Matrix>(z.data(), d_, n_);
}

Matrix ClosedLoop::positions_eta(const Vector& z) const {
  return Eigen::Map<const Matrix>(z.data() + n_ * d_, d_, n_);
}

void ClosedLoop::leader_terms(int i, const DesiredState& ref, const Vector& z,
                              const Matrix& /*y*/, Vec3& u) const {
  const auto eta = z.segment(n_ * d_ + d_ * i, d_);
  u = law::beta_contract(gains_->beta, eta - ref.x) + ref.feedforward;
}

void ClosedLoop::follower_input(int f, const Vector& z, const Matrix& /*y*/,
                                Vec3& u) const {
  const int i = nl_ + f;
  Vector s = Vector::Zero(d_);
  switch (variant_) {
    case FollowerVariant::kOmegaBar:
    case FollowerVariant::kOmegaHat: {
      const auto ei = z.segment(n_ * d_ + d_ * i, d_);
      for (const auto& e : edges_[f]) {
        s += e.w * (ei - z.segment(n_ * d_ + d_ * e.j, d_));
      }
      break;
    }
    case FollowerVariant::kRelative: {
      int slot = edge_base_[f];
      for (const auto& e : edges_[f]) {
        s += e.w * z.segment(edge_offset_ + d_ * slot++, d_);
      }
      break;
    }
    case FollowerVariant::kStateFeedback: {
      const auto xi = z.segment(d_ * i, d_);
      for (const auto& e : edges_[f]) s += e.w * (xi - z.segment(d_ * e.j, d_));
      break;
    }
  }
  u = law::coupled_input(gains_->K, s, gains_->c1, gains_->c2, epsilon_);
}

void ClosedLoop::agent_derivative(int i, const Vector& z, const Matrix& y,
                                  const Matrix& u, Vector& dz) const {
  const auto& p = gains_->plant;
  const Vec3 ui = u.col(i);
  dz.segment(d_ * i, d_) = p.A * z.segment(d_ * i, d_) + p.B * ui;
  const auto eta = z.segment(n_ * d_ + d_ * i, d_);
  auto deta = dz.segment(n_ * d_ + d_ * i, d_);
  if (i < nl_) {
    deta = p.A * eta + p.B * ui + gains_->L * (p.C * eta - y.col(i));
    return;
  }
  const int f = i - nl_;
  switch (variant_) {
    case FollowerVariant::kOmegaBar:
    case FollowerVariant::kOmegaHat: {
      Vector s = Vector::Zero(d_);
      Vector dy = Vector::Zero(p.q());
      for (const auto& e : edges_[f]) {
        s += e.w * (eta - z.segment(n_ * d_ + d_ * e.j, d_));
        dy += e.w * (y.col(i) - y.col(e.j));
      }
      deta = p.A * eta + p.B * ui + gains_->L * (p.C * eta - y.col(i)) +
             c1L_ * (p.C * s - dy);
      break;
    }
    case FollowerVariant::kRelative: {
      deta.setZero();
      int slot = edge_base_[f];
      for (const auto& e : edges_[f]) {
        const auto eij = z.segment(edge_offset_ + d_ * slot, d_);
        dz.segment(edge_offset_ + d_ * slot, d_) =
            p.A * eij + p.B * (ui - u.col(e.j)) +
            gains_->L * (p.C * eij - (y.col(i) - y.col(e.j)));
        ++slot;
      }
      break;
    }
    case FollowerVariant::kStateFeedback:
      deta.setZero();
      break;
  }
}

void ClosedLoop::rhs_serial(double t, const ManeuverSegment& segment,
                            const Vector& z, Vector& dz, Matrix* inputs) const {
  const auto refs = desired_leader_states(t, gains_->plant.m, segment, *shape_);
  const Matrix y = gains_->plant.C * positions_x(z);
  Matrix u(kDim, n_);
  for (int i = 0; i < n_; ++i) {
    Vec3 ui;
    if (i < nl_) {
      leader_terms(i, refs[i], z, y, ui);
    } else {
      follower_input(i - nl_, z, y, ui);
    }
    u.col(i) = ui;
  }
  dz.resize(size_);
  for (int i = 0; i < n_; ++i) agent_derivative(i, z, y, u, dz);
  if (inputs) *inputs = u;
}

void ClosedLoop::rhs_parallel(double t, const ManeuverSegment& segment,
                              const Vector& z, Vector& dz,
                              Matrix* inputs) const {
  const auto refs = desired_leader_states(t, gains_->plant.m, segment, *shape_);
  const Matrix y = gains_->plant.C * positions_x(z);
  Matrix u(kDim, n_);
  dz.resize(size_);
#pragma omp parallel
  {
#pragma omp for schedule(static)
    for (int i = 0; i < n_; ++i) {
      Vec3 ui;
      if (i < nl_) {
        leader_terms(i, refs[i], z, y, ui);
      } else {
        follower_input(i - nl_, z, y, ui);
      }
      u.col(i) = ui;
    }
#pragma omp for schedule(static)
    for (int i = 0; i < n_; ++i) agent_derivative(i, z, y, u, dz);
  }
  if (inputs) *inputs = u;
}

InitialState make_initial_state(const InitialConditionSpec& spec,
                                const ManeuverPlan& plan,
                                const ShapeSolution& shape, int m,
                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double t0 = plan.t_begin();
  const auto leaders = desired_leader_states(t0, m, plan, shape);
  const auto followers = desired_follower_states(leaders, shape.leader_map);
  const Eigen::Index d = kDim * m;
  InitialState init;
  for (const auto& ref : leaders) {
    Vector x = ref.x + random_ball(rng, d, spec.leader_error, spec.random_radius);
    Vector eta = x + random_ball(rng, d, spec.leader_estimate_error,
                                 spec.random_radius);
    init.x.push_back(std::move(x));
    init.eta.push_back(std::move(eta));
  }
  for (const auto& ref : followers) {
    Vector x = ref.x + random_ball(rng, d, spec.follower_spread, spec.random_radius);
    x.head<kDim>() += spec.follower_offset;
    init.eta.push_back(spec.follower_estimate_exact ? x : Vector::Zero(d));
    init.x.push_back(std::move(x));
  }
  return init;
}

SimTrace run_scenario(const FollowerMatrixSet& mats, const ManeuverPlan& plan,
                      const ShapeSolution& shape, const GainSet& gains,
                      const SimConfig& config, FollowerVariant variant,
                      const InitialState& init) {
  config.validate();
  const double t0 = plan.t_begin();
  const double t_end = config.t_end.value_or(plan.t_end());
  if (!(t_end > t0) || t_end > plan.t_end()) {
    throw Error(ErrorCode::kValidationError,
                "simulation horizon must lie inside the maneuver plan");
  }
  const double span = t_end - t0;
  const long steps = std::lround(span / config.dt);
  if (steps < 1 || std::abs(steps * config.dt - span) > 1e-9 * span) {
    throw Error(ErrorCode::kValidationError,
                "horizon is not an integer number of steps");
  }

  const ClosedLoop loop(mats, shape, gains, variant, config.epsilon);
  const int m = gains.plant.m;
  const int d = loop.state_dim();
  const int n = loop.agents();
  const int nl = mats.n_leaders;

  if (config.assert_bounds) {
    const auto refs = desired_leader_states(t0, m, plan, shape);
    const double tol = 1e-12 * std::max(1.0, gains.zeta);
    for (int i = 0; i < nl; ++i) {
      const double e = (init.x[i] - refs[i].x).norm();
      const double eo = (init.eta[i] - init.x[i]).norm();
      if (e > gains.zeta + tol || eo > gains.zeta + tol) {
        std::ostringstream os;
        os << "leader " << i + 1 << " starts with ||e|| = " << e
           << ", ||e_eta|| = " << eo << " beyond zeta = " << gains.zeta;
        throw Error(ErrorCode::kZetaViolated, os.str());
      }
    }
  }

  Vector z = loop.pack(init);
  SimTrace trace;
  trace.n = n;
  trace.n_leaders = nl;
  trace.m = m;
  trace.variant = variant;
  const bool with_est = trace.followers_observe();

  const auto rhs = [&](double t, const ManeuverSegment& seg, const Vector& zz,
                       Vector& dz, Matrix* u) {
    if (config.parallel) {
      loop.rhs_parallel(t, seg, zz, dz, u);
    } else {
      loop.rhs_serial(t, seg, zz, dz, u);
    }
  };

  Vector scratch;
  const auto record = [&](double t) {
    const auto& seg = plan.segment_at(t);
    Matrix u;
    rhs(t, seg, z, scratch, &u);
    Matrix x = loop.positions_x(z);
    Matrix eta = loop.positions_eta(z);
    const auto refs = desired_leader_states(t, m, seg, shape);
    Matrix err = Matrix::Zero(2 * d, n);
    for (int i = 0; i < nl; ++i) {
      err.col(i).head(d) = x.col(i) - refs[i].x;
      err.col(i).tail(d) = eta.col(i) - x.col(i);
    }
    err.rightCols(n - nl) = follower_error(x, eta, shape.leader_map, with_est);
    trace.times.push_back(t);
    trace.x.push_back(std::move(x));
    trace.eta.push_back(std::move(eta));
    trace.u.push_back(std::move(u));
    trace.err.push_back(std::move(err));
  };

  const std::size_t expected = static_cast<std::size_t>(steps / config.record_every) + 2;
  trace.times.reserve(expected);
  trace.x.reserve(expected);
  trace.eta.reserve(expected);
  trace.u.reserve(expected);
  trace.err.reserve(expected);

  record(t0);
  Vector k1, k2, k3, k4;
  const double h = config.dt;
  for (long k = 0; k < steps; ++k) {
    const double t = t0 + static_cast<double>(k) * h;
    const auto& seg = plan.segment_at(std::min(t + 0.5 * h, t_end));
    if (config.integrator == Integrator::kEuler) {
      rhs(t, seg, z, k1, nullptr);
      z += h * k1;
    } else {
      rhs(t, seg, z, k1, nullptr);
      rhs(t + 0.5 * h, seg, z + (0.5 * h) * k1, k2, nullptr);
      rhs(t + 0.5 * h, seg, z + (0.5 * h) * k2, k3, nullptr);
      rhs(t + h, seg, z + h * k3, k4, nullptr);
      z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!z.allFinite() || z.cwiseAbs().maxCoeff() > kBlowup) {
      std::ostringstream os;
      os << "state norm exceeded " << kBlowup << " at t = " << t + h;
      throw Error(ErrorCode::kNumericalBlowup, os.str());
    }
    const bool last = k + 1 == steps;
    if (last || (k + 1) % config.record_every == 0) {
      record(last ? t_end : t0 + static_cast<double>(k + 1) * h);
    }
  }

  if (config.assert_bounds) require_bounds(verify_bounds(trace, gains));
  return trace;
}

double ErrorSummary::max_tail_leader() const {
  double v = 0.0;
  for (const auto& s : segments) v = std::max(v, s.tail_leader);
  return v;
}

double ErrorSummary::max_tail_follower() const {
  double v = 0.0;
  for (const auto& s : segments) v = std::max(v, s.tail_follower);
  return v;
}

ErrorSummary tracking_errors(const SimTrace& trace, const ShapeSolution& shape,
                             const ManeuverPlan& plan) {
  ErrorSummary out;
  const int nl = trace.n_leaders;
  const bool with_est = trace.followers_observe();
  for (int k = 0; k < trace.samples(); ++k) {
    const double t = trace.times[k];
    const auto refs = desired_leader_states(t, trace.m, plan, shape);
    double lead = 0.0;
    double obs = 0.0;
    for (int i = 0; i < nl; ++i) {
      lead = std::max(lead, (trace.x[k].col(i) - refs[i].x).norm());
      obs = std::max(obs, (trace.eta[k].col(i) - trace.x[k].col(i)).norm());
    }
    const Matrix ef =
        follower_error(trace.x[k], trace.eta[k], shape.leader_map, with_est);
    out.leader_max.push_back(lead);
    out.follower.push_back(ef.norm());
    out.observer_max.push_back(obs);
  }
  const double t_first = trace.times.empty() ? 0.0 : trace.times.front();
  const double t_last = trace.times.empty() ? 0.0 : trace.times.back();
  for (std::size_t s = 0; s < plan.segments.size(); ++s) {
    const auto& seg = plan.segments[s];
    if (seg.t0 >= t_last || seg.t1 <= t_first) continue;
    SegmentStats st;
    st.t0 = seg.t0;
    st.t1 = std::min(seg.t1, t_last);
    const bool closes_run = seg.t1 >= t_last;
    const double tail_start = st.t1 - 0.2 * (st.t1 - seg.t0);
    for (int k = 0; k < trace.samples(); ++k) {
      const double t = trace.times[k];
      const bool inside = t >= seg.t0 && (t < st.t1 || (closes_run && t <= st.t1));
      if (!inside) continue;
      st.terminal_leader = out.leader_max[k];
      st.terminal_follower = out.follower[k];
      if (t >= tail_start) {
        st.tail_leader = std::max(st.tail_leader, out.leader_max[k]);
        st.tail_follower = std::max(st.tail_follower, out.follower[k]);
        ++st.tail_samples;
      }
    }
    out.segments.push_back(st);
  }
  return out;
}

BoundReport verify_bounds(const SimTrace& trace, const GainSet& gains) {
  BoundReport r;
  r.gamma_u = gains.gamma_u;
  r.sup_u.assign(trace.n_leaders, 0.0);
  double worst = -1.0;
  for (int k = 0; k < trace.samples(); ++k) {
    for (int i = 0; i < trace.n_leaders; ++i) {
      const double v = trace.u[k].col(i).norm();
      r.sup_u[i] = std::max(r.sup_u[i], v);
      if (v > worst) {
        worst = v;
        r.worst_leader = i;
        r.worst_time = trace.times[k];
      }
    }
  }
  const double peak = std::max(0.0, worst);
  r.slack = r.gamma_u - peak;
  r.ok = peak <= r.gamma_u * (1.0 + 1e-12) + 1e-12;
  return r;
}

void require_bounds(const BoundReport& report) {
  if (report.ok) return;
  std::ostringstream os;
  os << "leader " << report.worst_leader + 1 << " input norm "
     << report.sup_u[report.worst_leader] << " exceeds gamma_u = "
     << report.gamma_u << " at t = " << report.worst_time
     << "; the initial errors must stay within zeta";
  throw Error(ErrorCode::kBoundViolated, os.str());
}

std::vector<MonteCarloRun> run_monte_carlo(
    const FollowerMatrixSet& mats, const ManeuverPlan& plan,
    const ShapeSolution& shape, const GainSet& gains, const SimConfig& config,
    FollowerVariant variant, const InitialConditionSpec& spec, int runs,
    std::uint64_t seed0, int jobs) {
  std::vector<MonteCarloRun> out(std::max(0, runs));
  SimConfig cfg = config;
  cfg.parallel = false;
  cfg.assert_bounds = false;
  const int threads = jobs > 0 ? jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (int r = 0; r < runs; ++r) {
    MonteCarloRun& run = out[r];
    run.seed = seed0 + static_cast<std::uint64_t>(r);
    try {
      const auto init = make_initial_state(spec, plan, shape, gains.plant.m, run.seed);
      const auto trace = run_scenario(mats, plan, shape, gains, cfg, variant, init);
      const auto bound = verify_bounds(trace, gains);
      const auto summary = tracking_errors(trace, shape, plan);
      run.sup_leader_input = bound.gamma_u - bound.slack;
      run.bound_ok = bound.ok;
      run.max_tail_leader = summary.max_tail_leader();
      run.max_tail_follower = summary.max_tail_follower();
    } catch (const std::exception& e) {
      run.error = e.what();
      run.bound_ok = false;
    }
  }
  return out;
}

}  // namespace formctl
