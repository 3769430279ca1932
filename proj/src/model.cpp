#include "volterra/model.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>

#include "volterra/error.hpp"

namespace volterra {

double envelope(DecayProfile profile, double c, double rate, double t) {
  if (c == 0.0) return 0.0;
  if (profile == DecayProfile::Exponential) return c * std::exp(-rate * t);
  return c * std::pow(1.0 + t, -rate);
}

void check_envelopes(const ForcingEnvelope& forcing, const KernelEnvelope& kernel) {
  auto nonneg = [](double v, const char* name) {
    if (!std::isfinite(v) || v < 0.0)
      throw PreconditionError(fmt::format("envelope constant {} must be finite and >= 0 (got {})", name, v));
  };
  nonneg(forcing.c0, "c0");
  nonneg(forcing.b0, "b0");
  nonneg(kernel.c1, "c1");
  nonneg(kernel.b1, "b1");
  nonneg(kernel.c2, "c2");
  nonneg(kernel.b, "b");
  if (!std::isfinite(kernel.p) || kernel.p <= 0.0)
    throw PreconditionError(fmt::format("growth exponent p must be > 0 (got {})", kernel.p));
}

ProblemSpec build_problem(std::string_view f_text, std::string_view a_text,
                          const ForcingEnvelope& forcing, const KernelEnvelope& kernel,
                          DecayProfile profile) {
  check_envelopes(forcing, kernel);
  ProblemSpec spec;
  spec.f = parse(f_text);
  spec.a = parse(a_text);
  if (spec.f.uses(Var::S) || spec.f.uses(Var::U))
    throw VariableScopeError(fmt::format("forcing f may only depend on t: '{}'", f_text));
  spec.f_prime = differentiate(spec.f, Var::T);
  spec.a_t = differentiate(spec.a, Var::T);
  spec.a_u = differentiate(spec.a, Var::U);
  spec.forcing = forcing;
  spec.kernel = kernel;
  spec.profile = profile;
  return spec;
}

const char* hypothesis_id(Hypothesis h) {
  switch (h) {
    case Hypothesis::ForcingDecay: return "forcing-decay";
    case Hypothesis::DiagonalGrowth: return "diagonal-growth";
    case Hypothesis::DerivativeIntegral: return "derivative-integral";
    case Hypothesis::KernelMonotone: return "kernel-monotone";
  }
  return "?";
}

namespace {

double node(double lo, double hi, int n, int k) {
  return k == n - 1 ? hi : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
}

class Tracker {
 public:
  Tracker(Hypothesis id, double rel_tol) : rel_tol_(rel_tol) {
    check_.id = id;
    check_.worst_margin = std::numeric_limits<double>::infinity();
  }

  // `scale` is the envelope value at the sample; rounding within rel_tol of it is accepted.
  void sample(double margin, double scale, const SamplePoint& at) {
    if (check_.error) return;
    if (!(margin >= -rel_tol_ * scale)) violated_ = true;
    if (margin < check_.worst_margin) {
      check_.worst_margin = margin;
      check_.worst = at;
    }
  }

  void fail(const DomainError& err, const SamplePoint& at) {
    if (check_.error) return;
    check_.error = err.what();
    check_.worst_margin = -std::numeric_limits<double>::infinity();
    check_.worst = at;
  }

  HypothesisCheck finish() {
    check_.pass = !check_.error && !violated_;
    return check_;
  }

 private:
  HypothesisCheck check_;
  double rel_tol_;
  bool violated_ = false;
};

double growth(double u, double p) { return 1.0 + std::pow(std::fabs(u), 2.0 * p); }

double simpson_abs_at(const Expr& a_t, double t, double u, int panels) {
  if (t == 0.0) return 0.0;
  if (panels % 2 != 0) ++panels;
  const double h = t / panels;
  double sum = 0.0;
  for (int i = 0; i <= panels; ++i) {
    const double s = i == panels ? t : h * i;
    const double w = (i == 0 || i == panels) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    sum += w * std::fabs(evaluate(a_t, {.t = t, .s = s, .u = u}));
  }
  return sum * h / 3.0;
}

}  // namespace

ValidationReport validate_decay(const ProblemSpec& spec, const ValidationGrid& grid) {
  if (!(grid.t_max > 0.0) || !(grid.u_max > 0.0) || grid.t_samples < 2 || grid.u_samples < 2 ||
      grid.simpson_panels < 2 || !(grid.rel_tol >= 0.0))
    throw PreconditionError("validate_decay needs t_max > 0, u_max > 0 and at least 2 samples per axis");

  const auto& fe = spec.forcing;
  const auto& ke = spec.kernel;
  const int nt = grid.t_samples;
  const int nu = grid.u_samples;

  Tracker forcing(Hypothesis::ForcingDecay, grid.rel_tol);
  for (int i = 0; i < nt; ++i) {
    const double t = node(0.0, grid.t_max, nt, i);
    const SamplePoint at{.t = t};
    try {
      const double lhs = std::fabs(evaluate(spec.f, {.t = t})) + std::fabs(evaluate(spec.f_prime, {.t = t}));
      const double env = envelope(spec.profile, fe.c0, fe.b0, t);
      forcing.sample(env - lhs, env, at);
    } catch (const DomainError& err) {
      forcing.fail(err, at);
    }
  }

  Tracker diagonal(Hypothesis::DiagonalGrowth, grid.rel_tol);
  for (int i = 0; i < nt; ++i) {
    const double t = node(0.0, grid.t_max, nt, i);
    const double env = envelope(spec.profile, ke.c1, ke.b1, t);
    for (int j = 0; j < nu; ++j) {
      const double u = node(-grid.u_max, grid.u_max, nu, j);
      const SamplePoint at{.t = t, .s = t, .u = u};
      try {
        const double bound = env * growth(u, ke.p);
        diagonal.sample(bound - std::fabs(evaluate(spec.a, {.t = t, .s = t, .u = u})), bound, at);
      } catch (const DomainError& err) {
        diagonal.fail(err, at);
      }
    }
  }

  Tracker integral(Hypothesis::DerivativeIntegral, grid.rel_tol);
  for (int i = 0; i < nt; ++i) {
    const double t = node(0.0, grid.t_max, nt, i);
    const double bound = envelope(spec.profile, ke.c2, ke.b, t) * growth(grid.u_max, ke.p);
    for (double u : {grid.u_max, -grid.u_max}) {
      const SamplePoint at{.t = t, .u = u};
      try {
        integral.sample(bound - simpson_abs_at(spec.a_t, t, u, grid.simpson_panels), bound, at);
      } catch (const DomainError& err) {
        integral.fail(err, at);
      }
    }
  }

  Tracker monotone(Hypothesis::KernelMonotone, grid.rel_tol);
  for (int i = 0; i < nt; ++i) {
    const double t = node(0.0, grid.t_max, nt, i);
    for (int k = 0; k <= i; ++k) {
      const double s = node(0.0, grid.t_max, nt, k);
      for (int j = 0; j < nu; ++j) {
        const double u = node(-grid.u_max, grid.u_max, nu, j);
        const SamplePoint at{.t = t, .s = s, .u = u};
        try {
          monotone.sample(evaluate(spec.a_u, {.t = t, .s = s, .u = u}), 0.0, at);
        } catch (const DomainError& err) {
          monotone.fail(err, at);
        }
      }
    }
  }

  return ValidationReport{{forcing.finish(), diagonal.finish(), integral.finish(), monotone.finish()}};
}

}  // namespace volterra
