#include "volterra/comparison.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "volterra/error.hpp"

namespace volterra {

MajorantCurve propagate_majorant(const InequalityData& data, const Grid& grid, double blowup_cap) {
  if (!(grid.h > 0.0) || grid.n < 2) throw PreconditionError("propagate_majorant needs a grid with h > 0 and n >= 2");
  if (!(blowup_cap > 0.0)) throw PreconditionError("blowup_cap must be positive");

  auto rhs = [&](double t, double g) {
    return -evaluate(data.gamma, {.t = t}) * g + alpha_at(data, t, std::max(g, 0.0)) + evaluate(data.beta, {.t = t});
  };

  MajorantCurve curve{.grid = grid, .g_values = {}, .status = Completed{}};
  curve.g_values.reserve(grid.n);
  curve.g_values.push_back(data.g0);

  const double h = grid.h;
  for (std::size_t n = 1; n < grid.n; ++n) {
    const double t = grid.node(n - 1);
    const double g = curve.g_values.back();
    double next = 0.0;
    try {
      const double k1 = rhs(t, g);
      const double k2 = rhs(t + 0.5 * h, g + 0.5 * h * k1);
      const double k3 = rhs(t + 0.5 * h, g + 0.5 * h * k2);
      const double k4 = rhs(t + h, g + h * k3);
      next = g + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    } catch (const DomainError& err) {
      if (err.kind() != DomainError::Kind::NonFinite) throw;
      next = std::numeric_limits<double>::infinity();
    }
    if (!std::isfinite(next) || std::fabs(next) > blowup_cap) {
      curve.status = BlowUp{t + 0.5 * h};
      break;
    }
    curve.g_values.push_back(std::max(next, 0.0));
  }
  return curve;
}

NormDerivativeReport norm_derivative_check(std::span<const NormSample> samples, double h) {
  if (!(h > 0.0)) throw PreconditionError("norm_derivative_check needs h > 0");
  NormDerivativeReport report{.max_violation = -std::numeric_limits<double>::infinity(), .worst_index = 0};
  for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
    const double spacing = samples[i + 1].t - samples[i].t;
    if (std::fabs(spacing - h) > 1e-9 * std::max(1.0, std::fabs(samples[i].t)))
      throw PreconditionError(fmt::format("samples {} and {} are not spaced by h", i, i + 1));
    const double quotient = (std::fabs(samples[i + 1].u) - std::fabs(samples[i].u)) / h;
    const double violation = quotient - std::fabs(samples[i].du);
    if (violation > report.max_violation) {
      report.max_violation = violation;
      report.worst_index = i;
    }
  }
  if (samples.size() < 2) report.max_violation = 0.0;
  return report;
}

std::vector<NormSample> sample_function(const std::function<double(double)>& u,
                                        const std::function<double(double)>& du, double t0, double t1, double h) {
  if (!(h > 0.0) || !(t1 >= t0)) throw PreconditionError("sample_function needs h > 0 and t1 >= t0");
  const auto steps = static_cast<std::size_t>(std::floor((t1 - t0) / h + 1e-9));
  std::vector<NormSample> out;
  out.reserve(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i) {
    const double t = t0 + static_cast<double>(i) * h;
    out.push_back({t, u(t), du(t)});
  }
  return out;
}

}  // namespace volterra
