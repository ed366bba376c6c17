#include "formctl/cli.hpp"

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "formctl/errors.hpp"
#include "formctl/reference_fixtures.hpp"
#include "formctl/scenario.hpp"
#include "formctl/trace_csv.hpp"

namespace formctl {
namespace {

void print_matrix(std::ostream& out, const std::string& name, const Matrix& m) {
  out << name << " (" << m.rows() << "x" << m.cols() << ")\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << "  ";
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out << std::setw(12) << std::setprecision(6) << m(i, j);
    }
    out << '\n';
  }
}

const char* verdict(bool ok) { return ok ? "ok" : "FAIL"; }

void print_synthesis(std::ostream& out, const Scenario& s, const Pipeline& p) {
  const auto& g = p.gains;
  const auto& c = p.gain_certificates;
  out << "scenario " << (s.name.empty() ? "(unnamed)" : s.name) << ": n = "
      << s.formation.size() << ", leaders = " << s.formation.n_leaders
      << ", m = " << s.m << ", variant " << to_string(g.variant) << "\n\n";
  print_matrix(out, "Omega_f", p.mats.omega_f);
  print_matrix(out, "Omega_fl", p.mats.omega_fl);
  print_matrix(out, "Omega_ff", p.mats.omega_ff);
  print_matrix(out, "Omega_bar", p.mats.omega_bar);
  print_matrix(out, "Omega_hat", p.mats.omega_hat);
  out << std::setprecision(6);
  out << "localizable: sigma_min " << p.certificate.sigma_min << ", sigma_max "
      << p.certificate.sigma_max << ", reconstruction residual "
      << p.certificate.reconstruction_residual << "\n\n";
  out << "beta:";
  for (Eigen::Index k = 0; k < g.beta.size(); ++k) out << ' ' << g.beta(k);
  out << "\npoles:";
  for (double pole : g.poles) out << ' ' << pole;
  if (g.pole_retries > 0) out << " (spread " << g.pole_retries << "x for W)";
  out << "\nbandwidth: " << g.bandwidth << '\n';
  print_matrix(out, "K", g.K);
  print_matrix(out, "L", g.L);
  out << "\ncertificates\n"
      << "  lambda_max(AP + PA^T - 2BB^T)   " << std::setw(14) << c.state_lmi
      << "  " << verdict(c.state_lmi < 0) << '\n'
      << "  lambda_max(A^T H + HA - 2C^T C) " << std::setw(14) << c.output_lmi
      << "  " << verdict(c.output_lmi < 0) << '\n'
      << "  abscissa W1                     " << std::setw(14) << c.abscissa_w1
      << "  " << verdict(c.abscissa_w1 < -1e-6) << '\n'
      << "  abscissa A + LC                 " << std::setw(14)
      << c.abscissa_observer << "  " << verdict(c.abscissa_observer < -1e-6) << '\n'
      << "  abscissa A + BK                 " << std::setw(14)
      << c.abscissa_feedback << "  " << verdict(c.abscissa_feedback < -1e-6) << '\n'
      << "  abscissa W                      " << std::setw(14) << c.abscissa_w
      << "  " << verdict(c.abscissa_w < -1e-6) << '\n'
      << "  Riccati residuals               " << std::setw(14)
      << std::max(c.state_residual, c.output_residual) << '\n'
      << "  c1 = " << g.c1 << " (lambda_min(Omega_ff^T Omega_ff) = "
      << g.lambda_min << ")  " << verdict(c.c1_ok) << '\n'
      << "  c2 = " << g.c2 << " (sigma = " << g.sigma << ")  "
      << verdict(c.c2_ok) << '\n'
      << "  gamma_u = " << g.gamma_u << " (psi = " << g.psi << ", cond(M) = "
      << g.cond_m << ", zeta = " << g.zeta << ", gamma_m = " << g.gamma_m
      << ")\n";
}

void print_summary(std::ostream& out, const ErrorSummary& sum,
                   const BoundReport& bound) {
  out << std::setprecision(4);
  out << "segment            terminal(leader)  terminal(e_f)  tail(leader)  tail(e_f)\n";
  for (const auto& s : sum.segments) {
    std::ostringstream iv;
    iv << '[' << s.t0 << ", " << s.t1 << ']';
    out << std::left << std::setw(18) << iv.str() << std::right << std::setw(17)
        << s.terminal_leader << std::setw(15) << s.terminal_follower
        << std::setw(14) << s.tail_leader << std::setw(11) << s.tail_follower
        << '\n';
  }
  out << "leader input sup " << bound.gamma_u - bound.slack << ", gamma_u "
      << bound.gamma_u << ", slack " << bound.slack << '\n';
}

std::filesystem::path ladder_path(const std::filesystem::path& base, double dt) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_dt%g", dt);
  auto p = base;
  p.replace_filename(base.stem().string() + buf + base.extension().string());
  return p;
}

Vector terminal_state(const SimTrace& t) {
  const Matrix& x = t.x.back();
  const Matrix& e = t.eta.back();
  Vector v(x.size() + e.size());
  v << Eigen::Map<const Vector>(x.data(), x.size()),
      Eigen::Map<const Vector>(e.data(), e.size());
  return v;
}

int cmd_synth(const std::string& path, const std::string& variant,
              std::ostream& out) {
  const Scenario s = load_scenario(path);
  std::optional<FollowerVariant> v;
  if (!variant.empty()) v = parse_variant(variant);
  const Pipeline p = build_pipeline(s, v);
  print_synthesis(out, s, p);
  const bool ok = p.gain_certificates.all_pass() && p.certificate.localizable;
  out << (ok ? "all certificates pass\n" : "certificate failure\n");
  return ok ? 0 : 2;
}

int cmd_simulate(const std::string& path, std::string out_path,
                 const std::string& variant, bool dt_ladder, int jobs,
                 std::ostream& out) {
  const Scenario s = load_scenario(path);
  std::optional<FollowerVariant> v;
  if (!variant.empty()) v = parse_variant(variant);
  const Pipeline p = build_pipeline(s, v);
  const FollowerVariant var = p.gains.variant;
  if (out_path.empty()) out_path = s.csv_path;
  if (out_path.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no output path (--out or outputs.csv)");
  }
  const auto init = make_initial_state(s.initial, s.plan, p.shape, s.m, s.sim.seed);

  if (!dt_ladder) {
    const auto t0 = std::chrono::steady_clock::now();
    const SimTrace trace = run_scenario(p.mats, s.plan, p.shape, p.gains, s.sim, var, init);
    spdlog::info("simulated {} samples in {:.2f} s", trace.samples(),
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    write_trace_csv(out_path, trace);
    print_summary(out, tracking_errors(trace, p.shape, s.plan),
                  verify_bounds(trace, p.gains));
    out << "wrote " << out_path << '\n';
    return 0;
  }

  const double base = s.sim.dt;
  const std::vector<double> dts = {4 * base, 2 * base, base};
  std::vector<SimTrace> traces(dts.size());
  std::vector<std::string> errors(dts.size());
  const int threads = jobs > 0 ? jobs : 1;
#pragma omp parallel for num_threads(threads) schedule(dynamic)
  for (int k = 0; k < static_cast<int>(dts.size()); ++k) {
    try {
      SimConfig cfg = s.sim;
      cfg.dt = dts[k];
      cfg.record_every = std::max(1, static_cast<int>(std::lround(s.sim.record_every * base / dts[k])));
      traces[k] = run_scenario(p.mats, s.plan, p.shape, p.gains, cfg, var, init);
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  }
  for (std::size_t k = 0; k < dts.size(); ++k) {
    if (!errors[k].empty()) {
      throw Error(ErrorCode::kValidationError,
                  "dt = " + std::to_string(dts[k]) + ": " + errors[k]);
    }
  }
  for (std::size_t k = 0; k < dts.size(); ++k) {
    const auto file = ladder_path(out_path, dts[k]);
    write_trace_csv(file, traces[k]);
    out << "wrote " << file.string() << '\n';
  }
  const double e1 = (terminal_state(traces[0]) - terminal_state(traces[1])).norm();
  const double e2 = (terminal_state(traces[1]) - terminal_state(traces[2])).norm();
  out << std::setprecision(6) << "terminal difference dt " << dts[0] << " vs "
      << dts[1] << ": " << e1 << '\n'
      << "terminal difference dt " << dts[1] << " vs " << dts[2] << ": " << e2
      << '\n';
  if (e2 > 0.0 && e1 > 0.0) {
    out << "observed order " << std::log2(e1 / e2) << '\n';
  } else {
    out << "observed order: differences at round-off\n";
  }
  print_summary(out, tracking_errors(traces[2], p.shape, s.plan),
                verify_bounds(traces[2], p.gains));
  return 0;
}

int cmd_verify(const std::string& path, const std::string& variant, int mc_runs,
               int jobs, double threshold, std::ostream& out) {
  const Scenario s = load_scenario(path);
  std::optional<FollowerVariant> v;
  if (!variant.empty()) v = parse_variant(variant);
  const Pipeline p = build_pipeline(s, v);
  const FollowerVariant var = p.gains.variant;
  if (!p.gain_certificates.all_pass()) {
    print_synthesis(out, s, p);
    out << "certificate failure\n";
    return 2;
  }
  const auto init = make_initial_state(s.initial, s.plan, p.shape, s.m, s.sim.seed);
  const SimTrace trace = run_scenario(p.mats, s.plan, p.shape, p.gains, s.sim, var, init);
  const auto sum = tracking_errors(trace, p.shape, s.plan);
  const auto bound = verify_bounds(trace, p.gains);
  print_summary(out, sum, bound);
  bool ok = true;
  if (s.sim.assert_bounds && !bound.ok) {
    out << "leader input bound violated\n";
    ok = false;
  }
  const bool tails_ok = sum.max_tail_leader() < threshold && sum.max_tail_follower() < threshold;
  out << "segment tails below " << threshold << ": " << verdict(tails_ok) << '\n';
  ok = ok && tails_ok;

  const int runs = mc_runs >= 0 ? mc_runs : s.monte_carlo_runs;
  if (runs > 0) {
    const auto results = run_monte_carlo(p.mats, s.plan, p.shape, p.gains, s.sim, var,
                                         s.initial, runs, s.monte_carlo_seed, jobs);
    int violations = 0;
    int failures = 0;
    double worst = 0.0;
    for (const auto& r : results) {
      if (!r.error.empty()) {
        ++failures;
        spdlog::warn("run seed {}: {}", r.seed, r.error);
        continue;
      }
      violations += !r.bound_ok;
      worst = std::max(worst, r.sup_leader_input);
    }
    out << "monte carlo: " << runs << " runs, " << violations
        << " bound violations, " << failures << " failed runs, sup |u| " << worst
        << " vs gamma_u " << p.gains.gamma_u << '\n';
    ok = ok && violations == 0 && failures == 0;
  }
  out << (ok ? "verify passed\n" : "verify failed\n");
  return ok ? 0 : 3;
}

int cmd_reproduce(double perturb, std::ostream& out) {
  const auto report = fixtures::check_fixtures(perturb);
  out << std::setprecision(3);
  for (const auto& e : report.entries) {
    out << (e.ok ? "match    " : "MISMATCH ") << e.label << "  max error "
        << e.max_error << '\n';
  }
  if (!report.ok()) {
    std::string labels;
    for (const auto& e : report.entries) {
      if (!e.ok) labels += (labels.empty() ? "" : ", ") + e.label;
    }
    throw Error(ErrorCode::kRegressionMismatch, labels);
  }
  out << "all fixtures match\n";
  return 0;
}

}  // namespace

void configure_logging() {
  static bool done = false;
  if (!done) {
    auto logger = spdlog::stderr_logger_mt("formctl");
    spdlog::set_default_logger(logger);
    done = true;
  }
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("FORMCTL_LOG")) {
    spdlog::set_level(spdlog::level::from_str(env));
  }
}

std::string log_level() {
  const auto name = spdlog::level::to_string_view(spdlog::get_level());
  return {name.data(), name.size()};
}

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  configure_logging();
  CLI::App app{"Formation maneuver control toolkit", "formctl"};
  app.require_subcommand(1);
  int jobs = 0;
  app.add_option("--jobs", jobs, "Threads for independent runs (0: all cores)")
      ->check(CLI::NonNegativeNumber);

  std::string scenario;
  std::string variant;
  auto* synth = app.add_subcommand("synth", "Synthesize gains and print certificates");
  synth->add_option("scenario", scenario, "Scenario file")->required();
  synth->add_option("--variant", variant, "omega-bar|omega-hat|relative|state-feedback");

  std::string out_path;
  bool ladder = false;
  auto* sim = app.add_subcommand("simulate", "Simulate a scenario and write a CSV trace");
  sim->add_option("scenario", scenario, "Scenario file")->required();
  sim->add_option("--out", out_path, "CSV output path");
  sim->add_flag("--dt-ladder", ladder, "Run dt, 2dt and 4dt and report the order");
  sim->add_option("--variant", variant, "omega-bar|omega-hat|relative|state-feedback");
  sim->add_option("--jobs", jobs, "Threads for the dt ladder");

  int mc = -1;
  double threshold = 1e-2;
  auto* verify = app.add_subcommand("verify", "Simulate and check bounds and tail errors");
  verify->add_option("scenario", scenario, "Scenario file")->required();
  verify->add_option("--variant", variant, "omega-bar|omega-hat|relative|state-feedback");
  verify->add_option("--monte-carlo", mc, "Random initial conditions to test");
  verify->add_option("--threshold", threshold, "Segment-tail error threshold");
  verify->add_option("--jobs", jobs, "Threads for Monte-Carlo runs");

  double perturb = 0.0;
  auto* repro = app.add_subcommand("reproduce-paper", "Diff the bundled fixtures");
  repro->add_option("--perturb", perturb, "Move the first follower's x coordinate");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n' << app.help();
    return 1;
  }

  try {
    if (*synth) return cmd_synth(scenario, variant, out);
    if (*sim) return cmd_simulate(scenario, out_path, variant, ladder, jobs, out);
    if (*verify) return cmd_verify(scenario, variant, mc, jobs, threshold, out);
    if (*repro) return cmd_reproduce(perturb, out);
  } catch (const Error& e) {
    err << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace formctl
