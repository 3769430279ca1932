#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "volterra/expr.hpp"

namespace volterra {

/// Shape of the decay envelopes: c*exp(-b*t) or c*(1+t)^(-b).
enum class DecayProfile { Exponential, Power };

/// Envelope value c*exp(-rate*t) or c*(1+t)^(-rate).
double envelope(DecayProfile profile, double c, double rate, double t);

/// Bound |f(t)| + |f'(t)| <= c0 * decay(b0, t).
struct ForcingEnvelope {
  double c0 = 0.0;
  double b0 = 0.0;
};

/// Kernel bounds:
///   |a(t,t,u)|                 <= c1 * decay(b1, t) * (1 + |u|^(2p))
///   int_0^t |a_t(t,s,u(s))| ds <= c2 * decay(b,  t) * (1 + |u(t)|^(2p))
struct KernelEnvelope {
  double c1 = 0.0;
  double b1 = 0.0;
  double c2 = 0.0;
  double b = 0.0;
  double p = 1.0;
};

/// u(t) = f(t) + int_0^t a(t, s, u(s)) ds on t >= 0, with the derivatives the
/// solver and the hypothesis checks need.
struct ProblemSpec {
  Expr f;
  Expr f_prime;
  Expr a;
  Expr a_t;
  Expr a_u;
  ForcingEnvelope forcing;
  KernelEnvelope kernel;
  DecayProfile profile = DecayProfile::Exponential;
};

/// Parses f (in t only) and a (in t, s, u) and differentiates them.
///
/// Throws SyntaxError, VariableScopeError, NonDifferentiable (abs in f or a)
/// and PreconditionError for negative or non-finite envelope constants or p <= 0.
ProblemSpec build_problem(std::string_view f_text, std::string_view a_text,
                          const ForcingEnvelope& forcing, const KernelEnvelope& kernel,
                          DecayProfile profile = DecayProfile::Exponential);

void check_envelopes(const ForcingEnvelope& forcing, const KernelEnvelope& kernel);

enum class Hypothesis {
  ForcingDecay,        // |f| + |f'| under the forcing envelope
  DiagonalGrowth,      // |a(t,t,u)| under the first kernel envelope
  DerivativeIntegral,  // int |a_t| under the second kernel envelope
  KernelMonotone,      // a_u >= 0
};

const char* hypothesis_id(Hypothesis h);

struct SamplePoint {
  double t = 0.0;
  std::optional<double> s{};
  std::optional<double> u{};
};

struct HypothesisCheck {
  Hypothesis id = Hypothesis::ForcingDecay;
  /// Smallest slack seen; for KernelMonotone the smallest sampled a_u.
  double worst_margin = 0.0;
  SamplePoint worst;
  bool pass = false;
  /// Set when evaluation raised a DomainError at `worst`.
  std::optional<std::string> error;
};

struct ValidationReport {
  std::array<HypothesisCheck, 4> checks;

  const HypothesisCheck& operator[](Hypothesis h) const { return checks[static_cast<int>(h)]; }
  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

struct ValidationGrid {
  double t_max = 10.0;
  double u_max = 10.0;
  int t_samples = 201;
  int u_samples = 41;
  /// Composite Simpson panels for int_0^t |a_t| ds.
  int simpson_panels = 200;
  /// A sample passes when its slack is >= -rel_tol times the envelope value
  /// there. a_u >= 0 is checked exactly.
  double rel_tol = 1e-12;
};

/// Samples the decay hypotheses on uniform grids (endpoints included).
///
/// The integral hypothesis is checked on the constant profiles u(s) = +u_max
/// and u(s) = -u_max. A DomainError at a sample fails that hypothesis and is
/// recorded in the report rather than thrown.
ValidationReport validate_decay(const ProblemSpec& spec, const ValidationGrid& grid);

}  // namespace volterra
