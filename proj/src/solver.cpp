#include "volterra/solver.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "volterra/error.hpp"

namespace volterra {

Grid Grid::uniform(double t_end, double h) {
  if (!(h > 0.0) || !(t_end > 0.0) || !std::isfinite(t_end) || !std::isfinite(h))
    throw PreconditionError(fmt::format("grid needs h > 0 and t_end > 0 (got h={}, t_end={})", h, t_end));
  const auto steps = static_cast<std::size_t>(std::llround(t_end / h));
  if (steps == 0) throw PreconditionError("grid step larger than the horizon");
  return Grid{.t0 = 0.0, .t_end = t_end, .h = h, .n = steps + 1};
}

std::string describe(const RunStatus& status) {
  if (std::holds_alternative<Completed>(status)) return "completed";
  if (const auto* b = std::get_if<BlowUp>(&status)) return fmt::format("blow-up t_star={:.17g}", b->t_star);
  const auto& f = std::get<StepFailure>(status);
  return fmt::format("step-failure t={:.17g} reason={}", f.t, f.reason);
}

namespace {

/// x = constant + weight * a(tau, tau, x)
struct StepEquation {
  const Expr& a;
  const Expr& a_u;
  double tau;
  double constant;
  double weight;

  // Empty when the kernel overflows at x.
  std::optional<double> residual(double x) const {
    try {
      return x - constant - weight * evaluate(a, {.t = tau, .s = tau, .u = x});
    } catch (const DomainError& err) {
      if (err.kind() == DomainError::Kind::NonFinite) return std::nullopt;
      throw;
    }
  }
};

bool converged(double r, double x, double tol) { return std::fabs(r) <= tol * (1.0 + std::fabs(x)); }

std::optional<double> bisect(const StepEquation& eq, double x0, double tol, double cap) {
  const auto g0 = eq.residual(x0);
  if (!g0) return std::nullopt;
  if (*g0 == 0.0) return x0;

  // Search the side the residual's sign points to first.
  const double first = *g0 > 0.0 ? -1.0 : 1.0;
  double lo = 0.0, hi = 0.0, glo = 0.0;
  bool found = false;
  for (double d = 1e-3 * std::max(1.0, std::fabs(x0)); std::fabs(x0) + d <= 10.0 * cap && !found; d *= 2.0) {
    for (double dir : {first, -first}) {
      const double x = x0 + dir * d;
      const auto g = eq.residual(x);
      if (g && std::signbit(*g) != std::signbit(*g0)) {
        lo = x0;
        glo = *g0;
        hi = x;
        found = true;
        break;
      }
    }
  }
  if (!found) return std::nullopt;

  for (int i = 0; i < 400; ++i) {
    const double mid = 0.5 * (lo + hi);
    const auto g = eq.residual(mid);
    if (!g) return std::nullopt;
    if (converged(*g, mid, tol) || mid == lo || mid == hi) return mid;
    if (std::signbit(*g) == std::signbit(glo)) {
      lo = mid;
      glo = *g;
    } else {
      hi = mid;
    }
  }
  return std::nullopt;
}

// Roots with 1 - weight * a_u <= 0 lie on a branch that does not continue the
// solution from weight = 0.
bool on_branch(const StepEquation& eq, double x) {
  try {
    return 1.0 - eq.weight * evaluate(eq.a_u, {.t = eq.tau, .s = eq.tau, .u = x}) > 0.0;
  } catch (const DomainError& err) {
    if (err.kind() != DomainError::Kind::NonFinite) throw;
    return false;
  }
}

std::optional<double> newton_or_bisect(const StepEquation& eq, double x0, double tol, double cap) {
  double x = x0;
  auto r = eq.residual(x);
  if (!r) return std::nullopt;

  for (int it = 0; it < 60; ++it) {
    double ax = 0.0, au = 0.0;
    try {
      ax = evaluate(eq.a, {.t = eq.tau, .s = eq.tau, .u = x});
      au = evaluate(eq.a_u, {.t = eq.tau, .s = eq.tau, .u = x});
    } catch (const DomainError& err) {
      if (err.kind() != DomainError::Kind::NonFinite) throw;
      break;
    }
    const double slope = 1.0 - eq.weight * au;
    if (std::fabs(slope) < 1e-12) break;

    // Newton step in the form that reduces to the plain sum when a_u == 0.
    const double target = (eq.constant + eq.weight * (ax - au * x)) / slope;

    double lambda = 1.0;
    double xn = target;
    auto rn = eq.residual(xn);
    while ((!rn || std::fabs(*rn) > std::fabs(*r)) && lambda > 1.0 / 1024.0) {
      if (rn && converged(*rn, xn, tol)) break;
      lambda *= 0.5;
      xn = x + lambda * (target - x);
      rn = eq.residual(xn);
    }
    if (!rn) break;
    if (converged(*rn, xn, tol)) return xn;
    if (std::fabs(*rn) > std::fabs(*r)) break;
    x = xn;
    r = rn;
  }
  return bisect(eq, x0, tol, cap);
}

std::optional<double> solve_step(const StepEquation& eq, double x0, double tol, double cap) {
  const auto x = newton_or_bisect(eq, x0, tol, cap);
  if (x && !on_branch(eq, *x)) return std::nullopt;
  return x;
}

}  // namespace

Trajectory solve(const ProblemSpec& spec, const Grid& grid, const SolveOptions& options) {
  if (!(options.newton_tol > 0.0) || !(options.blowup_cap > 0.0) || options.max_halvings < 1)
    throw PreconditionError("solve needs newton_tol > 0, blowup_cap > 0 and max_halvings >= 1");
  if (!(grid.h > 0.0) || grid.n < 2) throw PreconditionError("solve needs a grid with h > 0 and n >= 2");

  Trajectory traj{.grid = grid, .values = {}, .status = Completed{}};
  auto& u = traj.values;
  u.reserve(grid.n);
  u.push_back(evaluate(spec.f, {.t = grid.t0}));

  const double h = grid.h;
  auto kernel = [&](double t, double s, double x) { return evaluate(spec.a, {.t = t, .s = s, .u = x}); };

  // Solves for the value at t_m + delta, where m is the last accepted node.
  // delta == h is the regular grid step.
  auto attempt = [&](std::size_t m, double delta, bool full) -> std::optional<double> {
    try {
      const double tau = full ? grid.node(m + 1) : grid.node(m) + delta;
      const double t0 = grid.t0;
      double constant = evaluate(spec.f, {.t = tau});
      if (full) {
        double sum = 0.5 * kernel(tau, t0, u[0]);
        for (std::size_t j = 1; j <= m; ++j) sum += kernel(tau, grid.node(j), u[j]);
        constant += h * sum;
      } else if (m == 0) {
        constant += 0.5 * delta * kernel(tau, t0, u[0]);
      } else {
        const double last = kernel(tau, grid.node(m), u[m]);
        double sum = 0.5 * kernel(tau, t0, u[0]) + 0.5 * last;
        for (std::size_t j = 1; j < m; ++j) sum += kernel(tau, grid.node(j), u[j]);
        constant += h * sum + 0.5 * delta * last;
      }
      if (!std::isfinite(constant)) return std::nullopt;
      const StepEquation eq{spec.a, spec.a_u, tau, constant, 0.5 * delta};
      return solve_step(eq, u[m], options.newton_tol, options.blowup_cap);
    } catch (const DomainError& err) {
      if (err.kind() == DomainError::Kind::NonFinite) return std::nullopt;
      throw;
    }
  };

  auto admissible = [&](const std::optional<double>& x) {
    return x && std::fabs(*x) <= options.blowup_cap;
  };

  for (std::size_t n = 1; n < grid.n; ++n) {
    const std::size_t m = n - 1;
    const auto x = attempt(m, h, true);
    if (admissible(x)) {
      u.push_back(*x);
      continue;
    }

    const bool capped = x.has_value();
    double lo = 0.0, hi = h, x_lo = u[m];
    for (int i = 0; i < options.max_halvings; ++i) {
      const double mid = 0.5 * (lo + hi);
      const auto xm = attempt(m, mid, false);
      if (admissible(xm)) {
        lo = mid;
        x_lo = *xm;
      } else {
        hi = mid;
      }
    }
    const bool growing = lo > 0.0 ? std::fabs(x_lo) > std::fabs(u[m])
                                  : (m >= 1 && std::fabs(u[m]) > std::fabs(u[m - 1]));
    if (capped || growing) {
      traj.status = BlowUp{grid.node(m) + 0.5 * (lo + hi)};
    } else {
      traj.status = StepFailure{grid.node(m) + hi, "nonlinear step equation has no root near the previous value"};
    }
    break;
  }
  return traj;
}

PicardResult picard_reference(const ProblemSpec& spec, const Grid& grid, int iterations) {
  if (iterations < 1) throw PreconditionError("picard_reference needs at least one iteration");
  if (!(grid.h > 0.0) || grid.n < 2) throw PreconditionError("picard_reference needs a grid with h > 0 and n >= 2");

  const std::size_t n = grid.n;
  const double h = grid.h;
  std::vector<double> forcing(n);
  for (std::size_t k = 0; k < n; ++k) forcing[k] = evaluate(spec.f, {.t = grid.node(k)});

  std::vector<double> current = forcing, next(n);
  double diff = std::numeric_limits<double>::infinity();
  try {
    for (int it = 1; it <= iterations; ++it) {
      next[0] = forcing[0];
      for (std::size_t k = 1; k < n; ++k) {
        const double t = grid.node(k);
        double sum = 0.5 * evaluate(spec.a, {.t = t, .s = grid.t0, .u = current[0]});
        for (std::size_t j = 1; j < k; ++j) sum += evaluate(spec.a, {.t = t, .s = grid.node(j), .u = current[j]});
        sum += 0.5 * evaluate(spec.a, {.t = t, .s = t, .u = current[k]});
        next[k] = forcing[k] + h * sum;
      }
      diff = 0.0;
      double scale = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        diff = std::max(diff, std::fabs(next[k] - current[k]));
        scale = std::max(scale, std::fabs(next[k]));
      }
      if (!std::isfinite(diff)) throw NonConvergence("Picard iterate overflowed", diff);
      current.swap(next);
      if (diff <= 1e-14 * (1.0 + scale))
        return PicardResult{Trajectory{grid, current, Completed{}}, it, diff};
    }
  } catch (const DomainError& err) {
    if (err.kind() != DomainError::Kind::NonFinite) throw;
    throw NonConvergence(fmt::format("Picard iterate overflowed: {}", err.what()),
                         std::numeric_limits<double>::infinity());
  }
  if (diff > 1e-8)
    throw NonConvergence(fmt::format("Picard iteration did not converge: sup difference {:.3g}", diff), diff);
  return PicardResult{Trajectory{grid, current, Completed{}}, iterations, diff};
}

}  // namespace volterra
