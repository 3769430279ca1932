#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "volterra/model.hpp"

namespace volterra {

/// Uniform time grid t_k = t0 + k*h, k = 0..n-1.
struct Grid {
  double t0 = 0.0;
  double t_end = 1.0;
  double h = 0.1;
  std::size_t n = 11;

  /// Grid on [0, t_end] with n = round(t_end/h) + 1 nodes.
  static Grid uniform(double t_end, double h);

  double node(std::size_t k) const { return t0 + static_cast<double>(k) * h; }
};

struct Completed {};
struct BlowUp {
  double t_star = 0.0;
};
struct StepFailure {
  double t = 0.0;
  std::string reason;
};
using RunStatus = std::variant<Completed, BlowUp, StepFailure>;

std::string describe(const RunStatus& status);

/// Discrete solution. On BlowUp or StepFailure `values` stops at the last
/// accepted node, so values.size() <= grid.n.
struct Trajectory {
  Grid grid;
  std::vector<double> values;
  RunStatus status;

  bool completed() const { return std::holds_alternative<Completed>(status); }
  double time(std::size_t k) const { return grid.node(k); }
};

struct SolveOptions {
  double newton_tol = 1e-12;
  double blowup_cap = 1e8;
  int max_halvings = 40;
};

/// Trapezoidal product-quadrature solution of u = f + int_0^t a(t,s,u(s)) ds.
///
/// Each node solves the implicit scalar equation
///   u_n = f(t_n) + h [ a(t_n,t_0,u_0)/2 + sum_{j=1}^{n-1} a(t_n,t_j,u_j) + a(t_n,t_n,u_n)/2 ]
/// by damped Newton from u_{n-1}, with bisection on a geometrically grown
/// bracket as fallback. A root is admissible when 1 - (h/2) a_u(t_n,t_n,u_n) > 0,
/// i.e. it continues the solution branch. When a step has no admissible root or |u_n| exceeds
/// the cap, the step is refined locally by bisection on a partial step length
/// (max_halvings times) and the run ends with BlowUp at the midpoint of the
/// final bracket if |u| was still growing into it, StepFailure otherwise.
Trajectory solve(const ProblemSpec& spec, const Grid& grid, const SolveOptions& options = {});

struct PicardResult {
  Trajectory trajectory;
  int iterations = 0;
  double last_difference = 0.0;
};

/// Fixed-point iteration u <- f + trapezoid(a(t, s, u)) on the whole grid,
/// starting from u = f. Stops once successive iterates agree to 1e-14 relative
/// in the sup norm. Throws NonConvergence if after `iterations` sweeps they
/// still differ by more than 1e-8, or if an iterate overflows.
PicardResult picard_reference(const ProblemSpec& spec, const Grid& grid, int iterations = 50);

}  // namespace volterra
