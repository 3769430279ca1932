#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "volterra/certificate.hpp"
#include "volterra/solver.hpp"

namespace volterra {

/// Solution of g' = -gamma(t) g + alpha(t, g) + beta(t), g(0) = g0. It
/// dominates |u| whenever the inequality data bounds |u|'.
struct MajorantCurve {
  Grid grid;
  std::vector<double> g_values;
  RunStatus status;  // Completed or BlowUp

  bool completed() const { return std::holds_alternative<Completed>(status); }
};

/// Classical RK4 on the grid. alpha is evaluated at max(g, 0). Stops with
/// BlowUp at the midpoint of the last step when g exceeds `blowup_cap` or
/// overflows.
MajorantCurve propagate_majorant(const InequalityData& data, const Grid& grid, double blowup_cap = 1e8);

struct NormSample {
  double t = 0.0;
  double u = 0.0;
  double du = 0.0;
};

struct NormDerivativeReport {
  /// max_i (|u_{i+1}| - |u_i|)/h - |u'(t_i)|
  double max_violation = 0.0;
  std::size_t worst_index = 0;
};

/// One-sided difference quotients of |u| against |u'|. Consecutive samples
/// must be spaced by h.
NormDerivativeReport norm_derivative_check(std::span<const NormSample> samples, double h);

/// Samples u and u' at t0, t0 + h, ..., up to t1.
std::vector<NormSample> sample_function(const std::function<double(double)>& u,
                                        const std::function<double(double)>& du, double t0, double t1, double h);

}  // namespace volterra
