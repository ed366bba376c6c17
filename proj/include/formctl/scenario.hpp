#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "formctl/formation_graph.hpp"
#include "formctl/gain_synthesis.hpp"
#include "formctl/maneuver.hpp"
#include "formctl/sim_engine.hpp"

namespace formctl {

struct ConstraintSpec {
  int agent = 0;  // 0-based
  std::vector<int> neighbors;
  std::vector<double> weights;  // empty: derived from the geometry
};

struct Scenario {
  std::string name;
  NominalFormation formation;
  std::vector<ConstraintSpec> constraints;
  int m = 1;
  Matrix c_spec;  // empty: position output
  GainOptions gains;
  bool gamma_m_auto = true;
  double epsilon = 1e-3;
  ManeuverPlan plan;
  SimConfig sim;
  FollowerVariant variant = FollowerVariant::kOmegaHat;
  InitialConditionSpec initial;
  int monte_carlo_runs = 0;
  std::uint64_t monte_carlo_seed = 1;
  std::string csv_path;
};

// Parses and validates a scenario. Throws kParseError (with line numbers) on
// malformed text or unknown keys and kValidationError on violated
// cross-field invariants.
Scenario parse_scenario(const std::string& text,
                        const std::string& source = "<string>");
Scenario load_scenario(const std::filesystem::path& path);

// Results of the formation and gain stages for one scenario.
struct Pipeline {
  std::vector<DisplacementConstraint> constraints;
  FollowerMatrixSet mats;
  LocalizabilityCertificate certificate;
  ShapeSolution shape;
  GainSet gains;
  Certificates gain_certificates;
  std::vector<double> derivative_bounds;
};

// Throws kNotLocalizable, kNotDetectable, kRiccatiDiverged, ...
Pipeline build_pipeline(const Scenario& scenario,
                        std::optional<FollowerVariant> variant = {});

}  // namespace formctl
