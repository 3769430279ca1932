#include "volterra/cli.hpp"

#include <fmt/format.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <ostream>

#include "CLI11.hpp"
#include "volterra/certificate.hpp"
#include "volterra/comparison.hpp"
#include "volterra/io.hpp"
#include "volterra/model.hpp"
#include "volterra/solver.hpp"

namespace volterra::cli {

namespace fs = std::filesystem;

namespace {

struct RunConfig {
  std::string problem;
  double t_end = 10.0;
  double step = 0.01;
  double t_max = 50.0;
  double u_max = 10.0;
  std::string out_dir = ".";
  double sweep_min = 1e-3;
  double sweep_max = 1e3;
  int sweep_points = 601;
  std::string certificate;
};

std::shared_ptr<spdlog::logger> logger() {
  static auto log = [] {
    auto l = spdlog::stderr_logger_st("volterra");
    l->set_pattern("[%l] %v");
    l->set_level(spdlog::level::warn);
    if (const char* env = std::getenv("VOLTERRA_LOG")) l->set_level(spdlog::level::from_str(env));
    return l;
  }();
  return log;
}

struct Certification {
  ValidationReport validation;
  Certificate cert;
  bool accepted = false;
  std::string reason;
};

Certification certify_problem(const ProblemSpec& spec, const RunConfig& cfg) {
  Certification c;
  c.validation = validate_decay(spec, ValidationGrid{.t_max = cfg.t_max, .u_max = cfg.u_max});
  for (const auto& h : c.validation.checks)
    logger()->info("hypothesis {}: worst margin {:.6g} ({})", hypothesis_id(h.id), h.worst_margin,
                   h.pass ? "pass" : "fail");

  const auto data = derive_inequality(spec);
  const SearchOptions opts{.t_max = cfg.t_max, .sweep_min = cfg.sweep_min, .sweep_max = cfg.sweep_max,
                           .sweep_points = cfg.sweep_points};
  c.cert = spec.profile == DecayProfile::Exponential ? search_exponential(data, opts) : search_power(data, opts);

  if (!c.validation.all_pass()) {
    std::string failed;
    for (const auto& h : c.validation.checks)
      if (!h.pass) failed += (failed.empty() ? "" : ", ") + std::string(hypothesis_id(h.id));
    c.reason = fmt::format("decay hypotheses fail on the sampled grid: {}", failed);
  }
  if (!c.cert.certified()) {
    const auto& why = std::get<Refused>(c.cert.verdict).reason;
    c.reason = c.reason.empty() ? why : c.reason + "; " + why;
  }
  c.accepted = c.validation.all_pass() && c.cert.certified();
  return c;
}

nlohmann::json certification_json(const Certification& c) {
  auto j = to_json(c.cert);
  if (!c.accepted) {
    j["verdict"] = "refused";
    j["reason"] = c.reason;
    j.erase("strict");
  }
  j["validation"] = to_json(c.validation);
  return j;
}

std::string describe_bound(const Certificate& cert) {
  if (const auto* e = std::get_if<ExponentialMu>(&cert.mu))
    return fmt::format("|u(t)| {} exp({:.6g} t) / {:.6g}", cert.strict() ? "<" : "<=", e->q, e->c3);
  if (const auto* p = std::get_if<PowerMu>(&cert.mu))
    return fmt::format("|u(t)| {} (1 + t)^{:.6g} / {:.6g}", cert.strict() ? "<" : "<=", p->r, p->c4);
  return fmt::format("|u(t)| <= {}", to_string(cert.bound));
}

fs::path prepare_out(const RunConfig& cfg) {
  fs::path dir(cfg.out_dir);
  fs::create_directories(dir);
  return dir;
}

int cmd_solve(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto spec = load_problem(cfg.problem);
  const auto traj = solve(spec, Grid::uniform(cfg.t_end, cfg.step));
  const auto dir = prepare_out(cfg);
  write_file_atomic(dir / "trajectory.csv", trajectory_csv(traj));
  logger()->info("wrote {} nodes to {}", traj.values.size(), (dir / "trajectory.csv").string());

  if (const auto* b = std::get_if<BlowUp>(&traj.status)) {
    out << fmt::format("blow-up detected near t={:.2f}\n", b->t_star);
    return kBlowUp;
  }
  if (const auto* f = std::get_if<StepFailure>(&traj.status)) {
    err << fmt::format("error: step failure at t={:.6g}: {}\n", f->t, f->reason);
    return kError;
  }
  out << fmt::format("completed: u({:.6g}) = {:.17g}\n", traj.time(traj.values.size() - 1), traj.values.back());
  return kOk;
}

int cmd_certify(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const auto spec = load_problem(cfg.problem);
  const auto c = certify_problem(spec, cfg);
  const auto dir = prepare_out(cfg);
  write_file_atomic(dir / "certificate.json", certification_json(c).dump(2) + "\n");
  if (c.accepted) {
    out << "certified: " << describe_bound(c.cert) << "\n";
    return kOk;
  }
  out << fmt::format("no certificate: {}; best margin {:.6g}\n", c.reason, c.cert.margin_min);
  return kNoCertificate;
}

int cmd_verify(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const auto spec = load_problem(cfg.problem);
  const Grid grid = Grid::uniform(cfg.t_end, cfg.step);
  const auto traj = solve(spec, grid);

  Certification c;
  if (!cfg.certificate.empty()) {
    c.cert = certificate_from_json(nlohmann::json::parse(read_file(cfg.certificate)));
    c.accepted = c.cert.certified();
    if (!c.accepted) c.reason = std::get<Refused>(c.cert.verdict).reason;
  } else {
    c = certify_problem(spec, cfg);
  }

  const auto dir = prepare_out(cfg);
  nlohmann::json report{{"trajectory_status", describe(traj.status)}, {"certificate", certification_json(c)}};

  if (!c.accepted) {
    write_file_atomic(dir / "report.json", report.dump(2) + "\n");
    if (const auto* b = std::get_if<BlowUp>(&traj.status))
      out << fmt::format("no certificate; solution blows up near t={:.2f}\n", b->t_star);
    else
      out << fmt::format("no certificate: {}\n", c.reason);
    return kNoCertificate;
  }
  if (!traj.completed()) {
    write_file_atomic(dir / "report.json", report.dump(2) + "\n");
    out << fmt::format("bound violated: solver stopped with {}\n", describe(traj.status));
    return kNoCertificate;
  }

  const auto check = verify_solution_bound(traj, c.cert);
  const auto curve = propagate_majorant(derive_inequality(spec), grid);

  std::string csv = "t,u,g,mu_inv\n";
  bool dominated = curve.completed();
  double worst_domination = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < traj.values.size(); ++k) {
    const double g = k < curve.g_values.size() ? curve.g_values[k] : std::numeric_limits<double>::infinity();
    const double u = traj.values[k];
    worst_domination = std::min(worst_domination, g - std::fabs(u));
    if (!(std::fabs(u) <= g)) dominated = false;
    csv += fmt::format("{:.17g},{:.17g},{:.17g},{:.17g}\n", traj.time(k), u, g, mu_inverse(c.cert.mu, traj.time(k)));
  }
  write_file_atomic(dir / "bound.csv", csv);

  report["bound_holds"] = check.holds;
  report["min_slack"] = check.min_slack;
  report["worst_node"] = check.worst_node;
  report["worst_t"] = traj.time(check.worst_node);
  report["majorant_status"] = describe(curve.status);
  report["majorant_dominates"] = dominated;
  report["min_majorant_slack"] = worst_domination;
  write_file_atomic(dir / "report.json", report.dump(2) + "\n");

  if (!check.holds) {
    out << fmt::format("bound violated at t={:.6g}: slack {:.6g}\n", traj.time(check.worst_node), check.min_slack);
    return kNoCertificate;
  }
  if (!dominated) {
    out << fmt::format("majorant fails to dominate |u|: worst slack {:.6g}\n", worst_domination);
    return kNoCertificate;
  }
  out << fmt::format("bound holds: {}; min slack {:.6g}\n", describe_bound(c.cert), check.min_slack);
  return kOk;
}

int cmd_demo_blowup(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  // u = 1 + int_0^t u(s)^2 ds, exact solution 1/(1 - t).
  const auto spec = build_problem("1", "u^2", ForcingEnvelope{1.0, 0.0}, KernelEnvelope{1.0, 0.0, 0.0, 0.0, 1.0});
  const Grid grid = Grid::uniform(cfg.t_end, cfg.step);
  const auto traj = solve(spec, grid);
  const auto dir = prepare_out(cfg);
  write_file_atomic(dir / "trajectory.csv", trajectory_csv(traj));

  out << "u = 1 + int_0^t u(s)^2 ds, exact solution u(t) = 1/(1 - t)\n";
  for (double t : {0.5, 0.9}) {
    const auto k = static_cast<std::size_t>(std::llround(t / grid.h));
    if (k < traj.values.size())
      out << fmt::format("  u({:.1f}) = {:.10f}   exact {:.10f}\n", t, traj.values[k], 1.0 / (1.0 - t));
  }
  const auto cert = search_exponential(derive_inequality(spec));
  out << fmt::format("  certificate: {}\n",
                     cert.certified() ? "found (unexpected)" : std::get<Refused>(cert.verdict).reason);
  if (const auto* b = std::get_if<BlowUp>(&traj.status)) {
    out << fmt::format("blow-up detected near t={:.2f}\n", b->t_star);
    return kOk;
  }
  out << "no blow-up detected on the horizon\n";
  return kError;
}

void add_common(CLI::App* cmd, RunConfig& cfg, bool needs_problem) {
  if (needs_problem) cmd->add_option("--problem", cfg.problem, "Problem file (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--t-end", cfg.t_end, "Solver horizon")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--step", cfg.step, "Solver step h")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--out", cfg.out_dir, "Output directory")->capture_default_str();
}

void add_certify_options(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--t-max", cfg.t_max, "Certificate and validation grid horizon")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--u-max", cfg.u_max, "State range for hypothesis sampling")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--sweep-min", cfg.sweep_min, "Smallest rate in the sweep")->check(CLI::PositiveNumber);
  cmd->add_option("--sweep-max", cfg.sweep_max, "Largest rate in the sweep")->check(CLI::PositiveNumber);
  cmd->add_option("--sweep-points", cfg.sweep_points, "Log-spaced sweep points")->check(CLI::PositiveNumber);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Solve nonlinear Volterra integral equations and certify growth bounds"};
  app.require_subcommand(1);

  RunConfig solve_cfg, certify_cfg, verify_cfg, demo_cfg;
  demo_cfg.t_end = 2.0;
  demo_cfg.step = 1e-4;

  auto* solve_cmd = app.add_subcommand("solve", "Solve the equation and write trajectory.csv");
  add_common(solve_cmd, solve_cfg, true);

  auto* certify_cmd = app.add_subcommand("certify", "Search a global growth certificate; write certificate.json");
  add_common(certify_cmd, certify_cfg, true);
  add_certify_options(certify_cmd, certify_cfg);

  auto* verify_cmd = app.add_subcommand("verify", "Solve, certify and check the bound; write bound.csv and report.json");
  add_common(verify_cmd, verify_cfg, true);
  add_certify_options(verify_cmd, verify_cfg);
  verify_cmd->add_option("--certificate", verify_cfg.certificate, "Use this certificate.json instead of searching")
      ->check(CLI::ExistingFile);

  auto* demo_cmd = app.add_subcommand("demo-blowup", "Run u = 1 + int u^2, which blows up at t = 1");
  add_common(demo_cmd, demo_cfg, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kError;
  }

  try {
    if (*solve_cmd) return cmd_solve(solve_cfg, out, err);
    if (*certify_cmd) return cmd_certify(certify_cfg, out, err);
    if (*verify_cmd) return cmd_verify(verify_cfg, out, err);
    if (*demo_cmd) return cmd_demo_blowup(demo_cfg, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kError;
  }
  return kError;
}

}  // namespace volterra::cli
