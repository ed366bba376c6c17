#pragma once

#include <string>
#include <vector>

#include "formctl/formation_graph.hpp"

namespace formctl::fixtures {

// Six-agent planar example: leaders i, j, k and followers h, m, g.
NominalFormation planar6_formation();
// Constraint weights as printed for h, m, g.
std::vector<DisplacementConstraint> planar6_constraints();
Matrix planar6_omega_fl();
Matrix planar6_omega_ff();

// Seven-agent example with four leaders.
NominalFormation spatial7_formation();
std::vector<DisplacementConstraint> spatial7_constraints();
Matrix spatial7_omega_fl();
Matrix spatial7_omega_ff();
Matrix spatial7_omega_hat();
// Coplanar and colinear leader shapes and the follower shapes they induce.
Vector spatial7_coplanar_gl();
Vector spatial7_coplanar_gf();
Vector spatial7_colinear_gl();
Vector spatial7_colinear_gf();

struct RegressionEntry {
  std::string label;
  double max_error = 0.0;
  bool ok = false;
};

struct RegressionReport {
  std::vector<RegressionEntry> entries;
  bool ok() const;
};

// Rows of `ours` rescaled to match `reference` (least squares per row).
Matrix match_row_scale(const Matrix& ours, const Matrix& reference);

// Recomputes every stored matrix and vector from the formation geometry.
// A nonzero perturbation moves the first follower's x coordinate before
// anything is computed.
RegressionReport check_fixtures(double perturbation = 0.0,
                                 double tolerance = 1e-9);

}  // namespace formctl::fixtures
