#include "formctl/reference_fixtures.hpp"

#include <cmath>

#include "formctl/errors.hpp"
#include "formctl/maneuver.hpp"

namespace formctl::fixtures {
namespace {

Matrix rows(std::initializer_list<std::initializer_list<double>> r) {
  Matrix m(r.size(), r.begin()->size());
  int i = 0;
  for (const auto& row : r) {
    int j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(v.size());
  int i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    return std::numeric_limits<double>::infinity();
  }
  return (a - b).cwiseAbs().maxCoeff();
}

// Constraints from the geometry for the given neighbor lists.
std::vector<DisplacementConstraint> derived(const NominalFormation& f) {
  return build_constraints(f);
}

}  // namespace

NominalFormation planar6_formation() {
  NominalFormation f;
  f.n_leaders = 3;
  f.positions = {{2, 0, 0}, {3, 0, 0}, {1, 2, 0}, {3, 3, 0}, {6, 1, 0}, {7, 3, 0}};
  f.neighbors = {{0, 1, 2}, {0, 1, 3}, {1, 3, 4}};
  return f;
}

std::vector<DisplacementConstraint> planar6_constraints() {
  return {{3, {0, 1, 2}, {1.0, -5.0 / 6.0, -0.5}},
          {4, {0, 1, 3}, {1.0, -11.0 / 9.0, -1.0 / 9.0}},
          {5, {1, 3, 4}, {1.0, -5.0 / 8.0, -1.5}}};
}

Matrix planar6_omega_fl() {
  return rows({{-1, 5.0 / 6.0, 0.5}, {-1, 11.0 / 9.0, 0}, {0, -1, 0}});
}

Matrix planar6_omega_ff() {
  return rows({{-1.0 / 3.0, 0, 0},
               {1.0 / 9.0, -1.0 / 3.0, 0},
               {5.0 / 8.0, 1.5, -9.0 / 8.0}});
}

NominalFormation spatial7_formation() {
  NominalFormation f;
  f.n_leaders = 4;
  f.positions = {{6, 0, 0},  {0, 0, 6},  {0, 6, 0},  {0, -6, 0},
                 {-6, 0, 6}, {-6, 6, 0}, {-6, -6, 0}};
  f.neighbors = {{0, 1, 2, 3}, {0, 2, 3}, {2, 3, 5}};
  return f;
}

std::vector<DisplacementConstraint> spatial7_constraints() {
  return {{4, {0, 1, 2, 3}, {2, -2, -1, -1}},
          {5, {0, 2, 3}, {-2, 3, 1}},
          {6, {2, 3, 5}, {1, -1, -1}}};
}

Matrix spatial7_omega_fl() {
  return rows({{-2, 2, 1, 1}, {2, 0, -3, -1}, {0, 0, -1, 1}});
}

Matrix spatial7_omega_ff() { return rows({{-2, 0, 0}, {0, 2, 0}, {0, 1, -1}}); }

Matrix spatial7_omega_hat() {
  return rows({{4, -4, -2, -2, 4, 0, 0},
               {4, 0, -7, -1, 0, 5, -1},
               {0, 0, 1, -1, 0, -1, 1}});
}

Vector spatial7_coplanar_gl() { return vec({6, 0, -2, 0, 0, -2, 0, 6, -2, 0, -6, -2}); }
Vector spatial7_coplanar_gf() { return vec({-6, 0, -2, -6, 6, -2, -6, -6, -2}); }
Vector spatial7_colinear_gl() { return vec({6, 0, -2, 3, 0, -2, 0, 0, -2, -2, 0, -2}); }
Vector spatial7_colinear_gf() { return vec({-4, 0, -2, -7, 0, -2, -9, 0, -2}); }

bool RegressionReport::ok() const {
  for (const auto& e : entries) {
    if (!e.ok) return false;
  }
  return !entries.empty();
}

Matrix match_row_scale(const Matrix& ours, const Matrix& reference) {
  Matrix out = ours;
  for (Eigen::Index i = 0; i < ours.rows(); ++i) {
    const double den = ours.row(i).squaredNorm();
    if (den > 0.0) out.row(i) *= ours.row(i).dot(reference.row(i)) / den;
  }
  return out;
}

RegressionReport check_fixtures(double perturbation, double tolerance) {
  RegressionReport report;
  const auto add = [&](const std::string& label, double err) {
    report.entries.push_back({label, err, err <= tolerance});
  };
  const auto guarded = [&](const std::string& label, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      report.entries.push_back({label + " (" + e.detail() + ")",
                                std::numeric_limits<double>::infinity(), false});
    }
  };

  guarded("planar6", [&] {
    NominalFormation f = planar6_formation();
    f.positions[f.n_leaders].x() += perturbation;
    const auto mats = assemble_follower_matrix(f, derived(f));
    Matrix ref(3, 6);
    ref << planar6_omega_fl(), planar6_omega_ff();
    const Matrix ours = normalize_rows(mats.omega_f);
    add("planar6 omega_fl, omega_ff (row scale)",
        max_abs_diff(ours, normalize_rows(ref)));
  });

  guarded("spatial7", [&] {
    NominalFormation f = spatial7_formation();
    f.positions[f.n_leaders].x() += perturbation;
    const auto mats = assemble_follower_matrix(f, derived(f));
    Matrix ref(3, 7);
    ref << spatial7_omega_fl(), spatial7_omega_ff();
    add("spatial7 omega_fl, omega_ff (row scale)",
        max_abs_diff(normalize_rows(mats.omega_f), normalize_rows(ref)));

    // Fix the reference row scale; everything downstream is then exact.
    const Matrix scaled = match_row_scale(mats.omega_f, ref);
    FollowerMatrixSet fixed;
    fixed.n_leaders = f.n_leaders;
    fixed.omega_f = scaled;
    fixed.omega_fl = scaled.leftCols(f.n_leaders);
    fixed.omega_ff = scaled.rightCols(f.follower_count());
    fixed = derive_variants(fixed);
    add("spatial7 omega_hat", max_abs_diff(fixed.omega_hat, spatial7_omega_hat()));
    add("spatial7 coplanar g_f",
        max_abs_diff(solve_shape(spatial7_coplanar_gl(), fixed), spatial7_coplanar_gf()));
    add("spatial7 colinear g_f",
        max_abs_diff(solve_shape(spatial7_colinear_gl(), fixed), spatial7_colinear_gf()));
  });
  return report;
}

}  // namespace formctl::fixtures
