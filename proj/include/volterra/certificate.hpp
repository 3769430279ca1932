#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "volterra/expr.hpp"
#include "volterra/model.hpp"
#include "volterra/solver.hpp"

namespace volterra {

/// Envelope constants behind an inequality built from a problem's decay
/// hypotheses. Their presence lets the certificate reason about t -> infinity
/// in closed form instead of on a grid only.
struct EnvelopeStructure {
  DecayProfile profile = DecayProfile::Exponential;
  ForcingEnvelope forcing;
  KernelEnvelope kernel;
};

/// Scalar differential inequality
///   g' <= -gamma(t) g + alpha(t, g) + beta(t),   g(0) = g0,
/// with alpha >= 0 non-decreasing in g. `alpha` is an expression in t and g,
/// where g is bound to the variable u.
struct InequalityData {
  Expr gamma;
  Expr alpha;
  Expr beta;
  double g0 = 0.0;
  /// Set when the data came from envelopes (then gamma == 0).
  std::optional<EnvelopeStructure> structure;
};

double alpha_at(const InequalityData& data, double t, double g);

/// gamma = 0, beta = c0 d(b0) + c1 d(b1) + c2 d(b), alpha = (c1 d(b1) + c2 d(b)) g^(2p),
/// where d is the decay shape of the structure. Zero coefficients drop their terms.
InequalityData make_inequality(const EnvelopeStructure& structure, double g0);

/// Majorant inequality for g = |u| taken from the problem's envelopes, with
/// g0 = |f(0)|.
InequalityData derive_inequality(const ProblemSpec& spec);

struct ExponentialMu {
  double c3 = 1.0;
  double q = 1.0;
};
struct PowerMu {
  double c4 = 1.0;
  double r = 1.0;
};
struct TabulatedMu {
  Expr mu;  // in t
};
using MuFamily = std::variant<ExponentialMu, PowerMu, TabulatedMu>;

double mu_value(const MuFamily& mu, double t);
double mu_derivative(const MuFamily& mu, double t);
/// 1/mu(t), computed directly for the closed-form families.
double mu_inverse(const MuFamily& mu, double t);
/// 1/mu as an expression in t.
Expr bound_expression(const MuFamily& mu);
std::string family_name(const MuFamily& mu);

struct Certified {
  bool strict = true;
};
struct Refused {
  std::string reason;
};
using Verdict = std::variant<Certified, Refused>;

struct ExponentComparison {
  std::vector<double> exponents;
};
struct GridOnly {
  double t_max = 0.0;
};
using TailCheck = std::variant<ExponentComparison, GridOnly>;

struct Certificate {
  MuFamily mu;
  Verdict verdict;
  /// Smallest sampled slack of the mu condition. For a search that found
  /// nothing, the best normalized slack over all candidates instead.
  double margin_min = 0.0;
  /// mu(0) * g0.
  double mu0_g0 = 0.0;
  TailCheck tail;
  Expr bound;

  bool certified() const { return std::holds_alternative<Certified>(verdict); }
  bool strict() const { return certified() && std::get<Certified>(verdict).strict; }
};

/// Exponents lambda_i of the terms C_i exp(lambda_i t) (or C_i (1+t)^lambda_i)
/// left after dividing the mu condition by its right side. Terms with zero
/// coefficient are omitted. Empty when mu and the structure do not match.
std::vector<double> tail_exponents(const EnvelopeStructure& structure, const MuFamily& mu);

/// (c0 + c1 + c2) c + (c1 + c2) c^(1 - 2p): the normalized left side at t = 0,
/// to be compared with q (exponential) or r (power).
double scalar_condition(const EnvelopeStructure& structure, double c);

/// Exponents within this of zero count as zero.
inline constexpr double kTailTolerance = 1e-12;

/// Checks mu against the inequality on a uniform grid of [0, t_max]:
///   margin(t) = (1/mu)(gamma - mu'/mu) - alpha(t, 1/mu) - beta >= 0,
/// plus mu(0) g0 < 1 (strict) or == 1 (non-strict), plus the closed-form tail
/// test when the data carries a structure matching the mu family.
///
/// Throws InvalidMu if mu is not positive and finite on the grid.
Certificate check_mu(const InequalityData& data, const MuFamily& mu, double t_max, int n_samples);

struct SearchOptions {
  double t_max = 50.0;
  int n_samples = 5001;
  double sweep_min = 1e-3;
  double sweep_max = 1e3;
  int sweep_points = 601;
  double golden_tol = 1e-10;
};

/// Searches mu = c3 exp(-q t). For p > 1/2 the rate is fixed at the largest
/// one the tail admits, q = min(b1, b) / (2p - 1), and c3 minimizes the
/// scalar condition by golden section. Otherwise q is swept upward and, since
/// the scalar condition is then increasing in c3, the largest admissible c3
/// is taken. Returns a Refused certificate when nothing qualifies.
///
/// Requires `data.structure` with an exponential profile.
Certificate search_exponential(const InequalityData& data, const SearchOptions& options = {});

/// Same search over mu = c4 (1+t)^(-r) with power-law envelopes; r is always
/// swept, smallest certifying r wins.
Certificate search_power(const InequalityData& data, const SearchOptions& options = {});

struct BoundCheck {
  bool holds = false;
  double min_slack = 0.0;
  std::size_t worst_node = 0;
};

/// Checks |u_n| < 1/mu(t_n) at every node (<= for a non-strict certificate).
/// Throws PreconditionError unless the certificate is Certified and the
/// trajectory Completed.
BoundCheck verify_solution_bound(const Trajectory& traj, const Certificate& cert);

}  // namespace volterra
