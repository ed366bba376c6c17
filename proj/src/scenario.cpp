#include "formctl/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "formctl/errors.hpp"

namespace formctl {
namespace {

std::string where(const YAML::Node& node) {
  const auto mark = node.Mark();
  if (mark.line < 0) return "";
  return "line " + std::to_string(mark.line + 1) + ": ";
}

[[noreturn]] void parse_fail(const YAML::Node& node, const std::string& msg) {
  throw Error(ErrorCode::kParseError, where(node) + msg);
}

void check_keys(const YAML::Node& node, std::initializer_list<const char*> allowed,
                const std::string& context) {
  if (!node.IsMap()) parse_fail(node, context + " must be a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) parse_fail(kv.first, "unknown key '" + key + "' in " + context);
  }
}

double as_double(const YAML::Node& node, const std::string& field) {
  if (!node.IsScalar()) parse_fail(node, field + " must be a number");
  double v = 0.0;
  try {
    v = node.as<double>();
  } catch (const YAML::Exception&) {
    parse_fail(node, field + " must be a number, got '" + node.Scalar() + "'");
  }
  if (!std::isfinite(v)) parse_fail(node, field + " must be finite");
  return v;
}

long as_int(const YAML::Node& node, const std::string& field) {
  const double v = as_double(node, field);
  if (v != std::floor(v)) parse_fail(node, field + " must be an integer");
  return static_cast<long>(v);
}

bool as_bool(const YAML::Node& node, const std::string& field) {
  try {
    return node.as<bool>();
  } catch (const YAML::Exception&) {
    parse_fail(node, field + " must be true or false");
  }
}

std::string as_string(const YAML::Node& node, const std::string& field) {
  if (!node.IsScalar()) parse_fail(node, field + " must be a string");
  return node.Scalar();
}

std::vector<double> as_list(const YAML::Node& node, const std::string& field) {
  if (!node.IsSequence()) parse_fail(node, field + " must be a list");
  std::vector<double> out;
  for (const auto& v : node) out.push_back(as_double(v, field));
  return out;
}

Vec3 as_vec3(const YAML::Node& node, const std::string& field) {
  const auto v = as_list(node, field);
  if (v.size() != 3) parse_fail(node, field + " must have 3 entries");
  return {v[0], v[1], v[2]};
}

Profile as_profile(const YAML::Node& node, const std::string& field) {
  Profile p;
  if (node.IsScalar()) {
    p.poly = {as_double(node, field)};
  } else if (node.IsSequence()) {
    p.poly = as_list(node, field);
    if (p.poly.empty()) parse_fail(node, field + " polynomial is empty");
  } else if (node.IsMap()) {
    check_keys(node, {"poly", "sin"}, field);
    if (node["poly"]) p.poly = as_list(node["poly"], field + ".poly");
    if (node["sin"]) {
      if (!node["sin"].IsSequence()) parse_fail(node["sin"], field + ".sin must be a list");
      for (const auto& s : node["sin"]) {
        const auto v = as_list(s, field + ".sin");
        if (v.size() != 3) {
          parse_fail(s, field + ".sin terms are [amplitude, frequency, phase]");
        }
        p.sines.push_back({v[0], v[1], v[2]});
      }
    }
  } else {
    parse_fail(node, field + " must be a number, a coefficient list or a map");
  }
  return p;
}

Vec3Profile as_vec3_profile(const YAML::Node& node, const std::string& field) {
  if (!node.IsSequence() || node.size() != 3) {
    parse_fail(node, field + " must list 3 per-axis profiles");
  }
  Vec3Profile v;
  for (int k = 0; k < 3; ++k) v.axes[k] = as_profile(node[k], field);
  return v;
}

Matrix as_matrix(const YAML::Node& node, const std::string& field) {
  if (!node.IsSequence() || node.size() == 0) {
    parse_fail(node, field + " must be a non-empty list of rows");
  }
  std::vector<std::vector<double>> rows;
  for (const auto& r : node) rows.push_back(as_list(r, field));
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size()) {
      parse_fail(node, field + " rows differ in length");
    }
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

void parse_formation(const YAML::Node& node, Scenario& s) {
  check_keys(node, {"leaders", "positions", "constraints"}, "formation");
  if (!node["leaders"] || !node["positions"] || !node["constraints"]) {
    parse_fail(node, "formation needs leaders, positions and constraints");
  }
  s.formation.n_leaders = static_cast<int>(as_int(node["leaders"], "formation.leaders"));
  if (!node["positions"].IsSequence()) {
    parse_fail(node["positions"], "formation.positions must be a list");
  }
  for (const auto& p : node["positions"]) {
    s.formation.positions.push_back(as_vec3(p, "formation.positions"));
  }
  const int n = s.formation.size();
  if (!node["constraints"].IsSequence()) {
    parse_fail(node["constraints"], "formation.constraints must be a list");
  }
  for (const auto& c : node["constraints"]) {
    check_keys(c, {"agent", "neighbors", "weights"}, "constraint");
    if (!c["agent"] || !c["neighbors"]) {
      parse_fail(c, "constraint needs agent and neighbors");
    }
    ConstraintSpec spec;
    const long agent = as_int(c["agent"], "constraint.agent");
    if (agent <= s.formation.n_leaders || agent > n) {
      throw Error(ErrorCode::kValidationError,
                  where(c["agent"]) + "constraint agent " + std::to_string(agent) +
                      " is not a follower index (" +
                      std::to_string(s.formation.n_leaders + 1) + ".." +
                      std::to_string(n) + ")");
    }
    spec.agent = static_cast<int>(agent - 1);
    for (double j : as_list(c["neighbors"], "constraint.neighbors")) {
      if (j != std::floor(j) || j < 1 || j > n) {
        std::ostringstream os;
        os << where(c["neighbors"]) << "neighbor index " << j
           << " outside 1.." << n;
        throw Error(ErrorCode::kValidationError, os.str());
      }
      spec.neighbors.push_back(static_cast<int>(j) - 1);
    }
    if (c["weights"]) {
      spec.weights = as_list(c["weights"], "constraint.weights");
      if (spec.weights.size() != spec.neighbors.size()) {
        throw Error(ErrorCode::kValidationError,
                    where(c["weights"]) + "weights and neighbors differ in length");
      }
    }
    s.constraints.push_back(std::move(spec));
  }
}

void parse_plant(const YAML::Node& node, Scenario& s) {
  check_keys(node, {"order", "output"}, "plant");
  if (!node["order"]) parse_fail(node, "plant needs order");
  s.m = static_cast<int>(as_int(node["order"], "plant.order"));
  if (node["output"]) s.c_spec = as_matrix(node["output"], "plant.output");
}

void parse_gains(const YAML::Node& node, Scenario& s) {
  check_keys(node, {"poles", "zeta", "margin", "epsilon", "bandwidth", "gamma_m"},
             "gains");
  if (node["poles"]) s.gains.poles = as_list(node["poles"], "gains.poles");
  if (node["zeta"]) s.gains.zeta = as_double(node["zeta"], "gains.zeta");
  if (node["margin"]) s.gains.margin = as_double(node["margin"], "gains.margin");
  if (node["epsilon"]) s.epsilon = as_double(node["epsilon"], "gains.epsilon");
  if (node["bandwidth"]) {
    s.gains.bandwidth = as_double(node["bandwidth"], "gains.bandwidth");
  }
  if (node["gamma_m"]) {
    if (node["gamma_m"].IsScalar() && node["gamma_m"].Scalar() == "auto") {
      s.gamma_m_auto = true;
    } else {
      s.gamma_m_auto = false;
      s.gains.gamma_m = as_double(node["gamma_m"], "gains.gamma_m");
    }
  }
}

void parse_maneuver(const YAML::Node& node, Scenario& s) {
  if (!node.IsSequence()) parse_fail(node, "maneuver must be a list of segments");
  for (const auto& seg : node) {
    check_keys(seg, {"interval", "scale", "rotation", "translation", "shape"},
               "maneuver segment");
    if (!seg["interval"]) parse_fail(seg, "segment needs interval: [t0, t1]");
    ManeuverSegment out;
    const auto iv = as_list(seg["interval"], "interval");
    if (iv.size() != 2) parse_fail(seg["interval"], "interval must be [t0, t1]");
    out.t0 = iv[0];
    out.t1 = iv[1];
    if (seg["scale"]) out.scale = as_profile(seg["scale"], "scale");
    if (seg["rotation"]) {
      const auto& r = seg["rotation"];
      check_keys(r, {"axis", "angle"}, "rotation");
      if (r["axis"]) {
        const Vec3 axis = as_vec3(r["axis"], "rotation.axis");
        if (!(axis.norm() > 0.0)) parse_fail(r["axis"], "rotation axis is zero");
        out.axis = axis.normalized();
      }
      if (r["angle"]) out.angle = as_profile(r["angle"], "rotation.angle");
    }
    if (seg["translation"]) {
      out.translation = as_vec3_profile(seg["translation"], "translation");
    }
    if (seg["shape"]) {
      const auto& sh = seg["shape"];
      if (sh.IsScalar()) {
        if (sh.Scalar() != "nominal") parse_fail(sh, "shape must be 'nominal' or a list");
      } else if (sh.IsSequence()) {
        for (const auto& g : sh) out.leader_shape.push_back(as_vec3_profile(g, "shape"));
      } else {
        parse_fail(sh, "shape must be 'nominal' or a list of leader entries");
      }
    }
    s.plan.segments.push_back(std::move(out));
  }
}

void parse_sim(const YAML::Node& node, Scenario& s) {
  check_keys(node, {"dt", "t_end", "variant", "integrator", "seed", "assert_bounds",
                    "record_every"},
             "sim");
  if (node["dt"]) s.sim.dt = as_double(node["dt"], "sim.dt");
  if (node["t_end"]) s.sim.t_end = as_double(node["t_end"], "sim.t_end");
  if (node["variant"]) {
    try {
      s.variant = parse_variant(as_string(node["variant"], "sim.variant"));
    } catch (const Error& e) {
      parse_fail(node["variant"], e.what());
    }
  }
  if (node["integrator"]) {
    const auto name = as_string(node["integrator"], "sim.integrator");
    if (name == "rk4") {
      s.sim.integrator = Integrator::kRk4;
    } else if (name == "euler") {
      s.sim.integrator = Integrator::kEuler;
    } else {
      parse_fail(node["integrator"], "integrator must be rk4 or euler");
    }
  }
  if (node["seed"]) {
    const long seed = as_int(node["seed"], "sim.seed");
    if (seed < 0) parse_fail(node["seed"], "seed must be nonnegative");
    s.sim.seed = static_cast<std::uint64_t>(seed);
  }
  if (node["assert_bounds"]) {
    s.sim.assert_bounds = as_bool(node["assert_bounds"], "sim.assert_bounds");
  }
  if (node["record_every"]) {
    s.sim.record_every = static_cast<int>(as_int(node["record_every"], "sim.record_every"));
  }
}

void parse_initial(const YAML::Node& node, Scenario& s) {
  check_keys(node, {"leader_error", "leader_estimate_error", "random_radius",
                    "follower_offset", "follower_spread", "follower_estimate"},
             "initial");
  auto& i = s.initial;
  if (node["leader_error"]) i.leader_error = as_double(node["leader_error"], "initial.leader_error");
  if (node["leader_estimate_error"]) {
    i.leader_estimate_error =
        as_double(node["leader_estimate_error"], "initial.leader_estimate_error");
  }
  if (node["random_radius"]) i.random_radius = as_bool(node["random_radius"], "initial.random_radius");
  if (node["follower_offset"]) {
    i.follower_offset = as_vec3(node["follower_offset"], "initial.follower_offset");
  }
  if (node["follower_spread"]) {
    i.follower_spread = as_double(node["follower_spread"], "initial.follower_spread");
  }
  if (node["follower_estimate"]) {
    const auto v = as_string(node["follower_estimate"], "initial.follower_estimate");
    if (v == "zero") {
      i.follower_estimate_exact = false;
    } else if (v == "exact") {
      i.follower_estimate_exact = true;
    } else {
      parse_fail(node["follower_estimate"], "follower_estimate must be zero or exact");
    }
  }
}

void validate(Scenario& s) {
  const auto fail = [](const std::string& msg) {
    throw Error(ErrorCode::kValidationError, msg);
  };
  auto& f = s.formation;
  f.neighbors.assign(std::max(0, f.follower_count()), {});
  std::set<int> seen;
  for (const auto& c : s.constraints) {
    if (!seen.insert(c.agent).second) {
      fail("follower " + std::to_string(c.agent + 1) + " has two constraints");
    }
    f.neighbors[c.agent - f.n_leaders] = c.neighbors;
  }
  if (static_cast<int>(seen.size()) != f.follower_count()) {
    for (int i = f.n_leaders; i < f.size(); ++i) {
      if (!seen.count(i)) fail("follower " + std::to_string(i + 1) + " has no constraint");
    }
  }
  f.validate();
  if (s.m < 1 || s.m > kMaxPlantOrder) {
    fail("plant.order must lie in 1.." + std::to_string(kMaxPlantOrder));
  }
  if (!s.gains.poles.empty() && static_cast<int>(s.gains.poles.size()) != s.m) {
    fail("gains.poles lists " + std::to_string(s.gains.poles.size()) +
         " poles for order " + std::to_string(s.m));
  }
  if (s.gains.zeta < 0.0) fail("gains.zeta must be nonnegative");
  if (!(s.gains.margin > 1.0)) fail("gains.margin must exceed 1");
  if (!(s.gains.bandwidth > 0.0)) fail("gains.bandwidth must be positive");
  if (!(s.epsilon > 0.0)) fail("gains.epsilon must be positive");
  if (s.c_spec.size() > 0 && s.c_spec.cols() != s.m && s.c_spec.cols() != kDim * s.m) {
    fail("plant.output needs " + std::to_string(s.m) + " or " +
         std::to_string(kDim * s.m) + " columns");
  }
  s.plan.validate(f.n_leaders);
  s.sim.epsilon = s.epsilon;
  s.sim.validate();
  if (s.sim.t_end && (*s.sim.t_end > s.plan.t_end() || *s.sim.t_end <= s.plan.t_begin())) {
    fail("sim.t_end lies outside the maneuver");
  }
  if (s.initial.leader_error < 0.0 || s.initial.leader_estimate_error < 0.0 ||
      s.initial.follower_spread < 0.0) {
    fail("initial radii must be nonnegative");
  }
  if (s.monte_carlo_runs < 0) fail("monte_carlo.runs must be nonnegative");
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw Error(ErrorCode::kParseError,
                source + ": line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  try {
    if (!root.IsMap()) {
      throw Error(ErrorCode::kParseError, "top level must be a mapping");
    }
    check_keys(root, {"name", "formation", "plant", "gains", "maneuver", "sim",
                      "initial", "monte_carlo", "outputs"},
               "scenario");
    Scenario s;
    if (root["name"]) s.name = as_string(root["name"], "name");
    if (!root["formation"]) throw Error(ErrorCode::kParseError, "missing formation section");
    if (!root["plant"]) throw Error(ErrorCode::kParseError, "missing plant section");
    if (!root["maneuver"]) throw Error(ErrorCode::kParseError, "missing maneuver section");
    parse_formation(root["formation"], s);
    parse_plant(root["plant"], s);
    if (root["gains"]) parse_gains(root["gains"], s);
    parse_maneuver(root["maneuver"], s);
    if (root["sim"]) parse_sim(root["sim"], s);
    if (root["initial"]) parse_initial(root["initial"], s);
    if (root["monte_carlo"]) {
      const auto& mc = root["monte_carlo"];
      check_keys(mc, {"runs", "seed"}, "monte_carlo");
      if (mc["runs"]) s.monte_carlo_runs = static_cast<int>(as_int(mc["runs"], "monte_carlo.runs"));
      if (mc["seed"]) s.monte_carlo_seed = static_cast<std::uint64_t>(as_int(mc["seed"], "monte_carlo.seed"));
    }
    if (root["outputs"]) {
      check_keys(root["outputs"], {"csv"}, "outputs");
      if (root["outputs"]["csv"]) s.csv_path = as_string(root["outputs"]["csv"], "outputs.csv");
    }
    validate(s);
    return s;
  } catch (const Error& e) {
    throw Error(e.code(), source + ": " + e.detail());
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::kParseError,
                source + ": line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kParseError, "cannot open scenario " + path.string());
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.string());
}

Pipeline build_pipeline(const Scenario& s, std::optional<FollowerVariant> variant) {
  Pipeline p;
  const auto& f = s.formation;
  for (const auto& c : s.constraints) {
    DisplacementConstraint dc{c.agent, c.neighbors, c.weights};
    if (dc.weights.empty()) {
      std::vector<Vec3> pts;
      for (int j : c.neighbors) pts.push_back(f.positions[j]);
      try {
        const Vector w = compute_displacement_parameters(f.positions[c.agent], pts);
        dc.weights.assign(w.data(), w.data() + w.size());
      } catch (const Error& e) {
        throw Error(e.code(), "follower " + std::to_string(c.agent + 1) + ": " + e.detail());
      }
    } else {
      validate_constraint(f, dc);
    }
    p.constraints.push_back(std::move(dc));
  }
  std::sort(p.constraints.begin(), p.constraints.end(),
            [](const auto& a, const auto& b) { return a.agent < b.agent; });
  p.mats = assemble_follower_matrix(f, p.constraints);
  p.certificate = check_localizable(p.mats, f);
  if (!p.certificate.localizable) {
    throw Error(ErrorCode::kNotLocalizable,
                "follower block is singular; the formation is not localizable");
  }
  p.mats = derive_variants(p.mats);
  p.shape = ShapeSolution::from(p.mats, f);

  const PlantMatrices plant = build_plant(s.m, s.c_spec);
  p.derivative_bounds = derivative_bounds(s.plan, p.shape, s.m);
  GainOptions opts = s.gains;
  if (s.gamma_m_auto) opts.gamma_m = p.derivative_bounds[s.m - 1];
  const FollowerVariant v = variant.value_or(s.variant);
  p.gains = synthesize_gains(plant, p.mats, v, opts);
  p.gain_certificates = certify(p.gains, p.mats);
  return p;
}

}  // namespace formctl
