#include "formctl/formation_graph.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "formctl/errors.hpp"

namespace formctl {
namespace {

constexpr double kRankTol = 1e-9;

// Index of the largest-magnitude entry; ties resolve to the lowest index.
Eigen::Index dominant_index(const Eigen::Ref<const Vector>& v) {
  const double peak = v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) >= peak * (1.0 - 1e-12)) return i;
  }
  return 0;
}

std::string agent_label(int agent) { return std::to_string(agent + 1); }

}  // namespace

Vector NominalFormation::stacked() const {
  Vector r(kDim * size());
  for (int i = 0; i < size(); ++i) r.segment<kDim>(kDim * i) = positions[i];
  return r;
}

Vector NominalFormation::stacked_leaders() const {
  return stacked().head(kDim * n_leaders);
}

Vector NominalFormation::stacked_followers() const {
  return stacked().tail(kDim * follower_count());
}

bool NominalFormation::is_planar(double tol) const {
  if (size() < 4) return true;
  Vec3 centroid = Vec3::Zero();
  for (const auto& p : positions) centroid += p;
  centroid /= size();
  Matrix centered(kDim, size());
  for (int i = 0; i < size(); ++i) centered.col(i) = positions[i] - centroid;
  Eigen::JacobiSVD<Matrix> svd(centered);
  const auto& s = svd.singularValues();
  return s(0) == 0.0 || s(2) <= tol * s(0);
}

void NominalFormation::validate() const {
  const auto fail = [](const std::string& msg) {
    throw Error(ErrorCode::kValidationError, msg);
  };
  if (n_leaders < 1 || follower_count() < 1) {
    fail("formation needs at least one leader and one follower");
  }
  const int min_leaders = is_planar() ? 3 : 4;
  if (n_leaders < min_leaders) {
    std::ostringstream os;
    os << "a " << (min_leaders == 4 ? "3-D" : "planar")
       << " formation needs at least " << min_leaders << " leaders, got "
       << n_leaders;
    fail(os.str());
  }
  for (const auto& p : positions) {
    if (!p.allFinite()) fail("non-finite nominal position");
  }
  double scale = 0.0;
  for (const auto& p : positions) scale = std::max(scale, p.norm());
  for (int i = 0; i < size(); ++i) {
    for (int j = i + 1; j < size(); ++j) {
      if ((positions[i] - positions[j]).norm() <= 1e-12 * std::max(1.0, scale)) {
        fail("agents " + agent_label(i) + " and " + agent_label(j) +
             " are collocated");
      }
    }
  }
  if (static_cast<int>(neighbors.size()) != follower_count()) {
    fail("expected one constraint per follower (" +
         std::to_string(follower_count()) + "), got " +
         std::to_string(neighbors.size()));
  }
  for (int f = 0; f < follower_count(); ++f) {
    const int agent = n_leaders + f;
    const auto& nb = neighbors[f];
    if (nb.size() < 2 || nb.size() > 4) {
      fail("follower " + agent_label(agent) + " must have 2 to 4 neighbors");
    }
    std::set<int> seen;
    for (int j : nb) {
      if (j < 0 || j >= size()) {
        fail("follower " + agent_label(agent) + " references agent " +
             agent_label(j) + " outside 1.." + std::to_string(size()));
      }
      if (j == agent) {
        fail("follower " + agent_label(agent) + " lists itself as neighbor");
      }
      if (!seen.insert(j).second) {
        fail("follower " + agent_label(agent) + " repeats neighbor " +
             agent_label(j));
      }
    }
  }
}

Vector compute_displacement_parameters(const Vec3& agent,
                                       std::span<const Vec3> neighbors) {
  const int k = static_cast<int>(neighbors.size());
  if (k < 2 || k > 4) {
    throw Error(ErrorCode::kInvalidArgument,
                "a displacement constraint needs 2 to 4 neighbors, got " +
                    std::to_string(k));
  }
  Matrix edges(kDim, k);
  double longest = 0.0;
  for (int j = 0; j < k; ++j) {
    edges.col(j) = agent - neighbors[j];
    longest = std::max(longest, edges.col(j).norm());
  }
  for (int j = 0; j < k; ++j) {
    if (edges.col(j).norm() <= 1e-12 * std::max(1.0, longest)) {
      throw Error(ErrorCode::kDegenerateGeometry,
                  "agent collocated with neighbor " + std::to_string(j + 1));
    }
  }

  Eigen::JacobiSVD<Matrix> svd(edges, Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > kRankTol * s(0)) ++rank;
  }
  const int nullity = k - rank;
  if (nullity == 0) {
    throw Error(ErrorCode::kNullSpaceEmpty,
                "edge matrix has full column rank; the neighbors admit no "
                "displacement constraint");
  }
  if (nullity > 1) {
    throw Error(ErrorCode::kDegenerateGeometry,
                "null space of the edge matrix has dimension " +
                    std::to_string(nullity) + "; weights are not unique");
  }
  Vector w = svd.matrixV().col(k - 1);
  w /= w(dominant_index(w));
  return w;
}

Vec3 displacement_residual(const Vec3& agent, std::span<const Vec3> neighbors,
                           const Vector& weights) {
  Vec3 acc = Vec3::Zero();
  for (std::size_t j = 0; j < neighbors.size(); ++j) {
    acc += weights(static_cast<Eigen::Index>(j)) * (agent - neighbors[j]);
  }
  return acc;
}

std::vector<DisplacementConstraint> build_constraints(
    const NominalFormation& formation) {
  std::vector<DisplacementConstraint> out;
  out.reserve(formation.follower_count());
  for (int f = 0; f < formation.follower_count(); ++f) {
    const int agent = formation.n_leaders + f;
    std::vector<Vec3> pts;
    for (int j : formation.neighbors[f]) pts.push_back(formation.positions[j]);
    Vector w;
    try {
      w = compute_displacement_parameters(formation.positions[agent], pts);
    } catch (const Error& e) {
      throw Error(e.code(), "follower " + agent_label(agent) + ": " + e.detail());
    }
    out.push_back({agent, formation.neighbors[f],
                   std::vector<double>(w.data(), w.data() + w.size())});
  }
  return out;
}

void validate_constraint(const NominalFormation& formation,
                         const DisplacementConstraint& c) {
  const auto fail = [&](const std::string& msg) {
    throw Error(ErrorCode::kValidationError,
                "constraint of follower " + agent_label(c.agent) + ": " + msg);
  };
  if (c.weights.size() != c.neighbors.size()) {
    fail("weight count does not match neighbor count");
  }
  std::vector<Vec3> pts;
  double longest = 0.0;
  double total = 0.0;
  for (std::size_t j = 0; j < c.neighbors.size(); ++j) {
    pts.push_back(formation.positions[c.neighbors[j]]);
    longest = std::max(longest,
                       (formation.positions[c.agent] - pts.back()).norm());
    total += std::abs(c.weights[j]);
  }
  if (!(total > 0.0)) fail("all weights are zero");
  const Vector w = Eigen::Map<const Vector>(c.weights.data(),
                                            static_cast<Eigen::Index>(c.weights.size()));
  const double res =
      displacement_residual(formation.positions[c.agent], pts, w).norm();
  if (res > 1e-9 * longest * std::max(1.0, w.cwiseAbs().maxCoeff())) {
    std::ostringstream os;
    os << "weights violate sum_j w_ij (r_i - r_j) = 0 (residual " << res << ")";
    fail(os.str());
  }
}

Matrix FollowerMatrixSet::leader_map() const {
  return omega_ff.partialPivLu().solve(omega_fl);
}

FollowerMatrixSet assemble_follower_matrix(
    const NominalFormation& formation,
    std::span<const DisplacementConstraint> constraints) {
  const int n = formation.size();
  const int nl = formation.n_leaders;
  const int nf = formation.follower_count();
  std::vector<const DisplacementConstraint*> by_follower(nf, nullptr);
  for (const auto& c : constraints) {
    if (c.agent < nl || c.agent >= n) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  "constraint for non-follower agent " + agent_label(c.agent));
    }
    by_follower[c.agent - nl] = &c;
  }

  FollowerMatrixSet mats;
  mats.n_leaders = nl;
  mats.omega_f = Matrix::Zero(nf, n);
  for (int f = 0; f < nf; ++f) {
    const auto* c = by_follower[f];
    if (c == nullptr) {
      throw Error(ErrorCode::kMissingConstraint,
                  "follower " + agent_label(nl + f) + " has no constraint");
    }
    for (std::size_t k = 0; k < c->neighbors.size(); ++k) {
      mats.omega_f(f, c->neighbors[k]) = -c->weights[k];
    }
    // Diagonal: negated column-order sum of the off-diagonal entries.
    double off = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j != nl + f) off += mats.omega_f(f, j);
    }
    mats.omega_f(f, nl + f) = -off;
  }
  mats.omega_fl = mats.omega_f.leftCols(nl);
  mats.omega_ff = mats.omega_f.rightCols(nf);
  return mats;
}

LocalizabilityCertificate check_localizable(const FollowerMatrixSet& mats,
                                            const NominalFormation& formation) {
  LocalizabilityCertificate cert;
  Eigen::JacobiSVD<Matrix> svd(mats.omega_ff);
  const Vector& s = svd.singularValues();
  cert.sigma_max = s(0);
  cert.sigma_min = s(s.size() - 1);
  if (!(cert.sigma_max > 0.0) || cert.sigma_min <= 1e-9 * cert.sigma_max) {
    return cert;
  }
  const Matrix map = kron_identity(mats.leader_map(), kDim);
  const Vector rf = -map * formation.stacked_leaders();
  cert.reconstruction_residual = (rf - formation.stacked_followers()).norm();
  const double scale = std::max(1.0, formation.stacked().norm());
  cert.localizable = true;
  cert.consistent = cert.reconstruction_residual <= 1e-8 * scale;
  return cert;
}

FollowerMatrixSet derive_variants(FollowerMatrixSet mats) {
  const int nf = mats.follower_count();
  Eigen::JacobiSVD<Matrix> svd(mats.omega_ff);
  const Vector& s = svd.singularValues();
  if (!(s(0) > 0.0) || s(s.size() - 1) <= 1e-9 * s(0)) {
    throw Error(ErrorCode::kNotLocalizable,
                "follower block Ω_ff is singular; Ω̄_f and Ω̂_f are undefined");
  }
  mats.omega_bar.resize(nf, mats.agent_count());
  mats.omega_bar.leftCols(mats.n_leaders) = mats.leader_map();
  mats.omega_bar.rightCols(nf).setIdentity();
  mats.omega_hat = mats.omega_ff.transpose() * mats.omega_f;
  mats.localizable = true;
  return mats;
}

std::map<int, double> edge_weights(const Matrix& matrix, int n_leaders,
                                   int agent) {
  const int row = agent - n_leaders;
  if (row < 0 || row >= matrix.rows()) {
    throw Error(ErrorCode::kIndexOutOfRange,
                "agent " + agent_label(agent) + " is not a follower row");
  }
  std::map<int, double> out;
  for (int j = 0; j < matrix.cols(); ++j) {
    if (j == agent) continue;
    if (matrix(row, j) != 0.0) out.emplace(j, -matrix(row, j));
  }
  return out;
}

Matrix normalize_rows(const Matrix& m) {
  Matrix out = m;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const Vector row = out.row(i).transpose();
    if (row.cwiseAbs().maxCoeff() == 0.0) continue;
    out.row(i) /= row(dominant_index(row));
  }
  return out;
}

}  // namespace formctl
