#include "volterra/certificate.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "volterra/error.hpp"

namespace volterra {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::optional<Expr> decay_term(DecayProfile profile, double c, double rate) {
  if (c == 0.0) return std::nullopt;
  if (rate == 0.0) return constant(c);
  if (profile == DecayProfile::Exponential) return constant(c) * exp(constant(-rate) * t_var());
  return constant(c) * pow(constant(1.0) + t_var(), -rate);
}

Expr sum_of(const std::vector<Expr>& terms) {
  if (terms.empty()) return constant(0.0);
  Expr total = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) total = total + terms[i];
  return total;
}

bool overflows_or_nonpositive(double v) { return !std::isfinite(v) || !(v > 0.0); }

}  // namespace

double alpha_at(const InequalityData& data, double t, double g) {
  return evaluate(data.alpha, {.t = t, .u = g});
}

InequalityData make_inequality(const EnvelopeStructure& st, double g0) {
  check_envelopes(st.forcing, st.kernel);
  if (!std::isfinite(g0) || g0 < 0.0) throw PreconditionError("g0 must be finite and >= 0");

  std::vector<Expr> beta_terms, kernel_terms;
  if (auto e = decay_term(st.profile, st.forcing.c0, st.forcing.b0)) beta_terms.push_back(*e);
  for (auto [c, rate] : {std::pair{st.kernel.c1, st.kernel.b1}, std::pair{st.kernel.c2, st.kernel.b}}) {
    if (auto e = decay_term(st.profile, c, rate)) {
      beta_terms.push_back(*e);
      kernel_terms.push_back(*e);
    }
  }

  InequalityData data;
  data.gamma = constant(0.0);
  data.beta = sum_of(beta_terms);
  data.alpha = kernel_terms.empty() ? constant(0.0) : sum_of(kernel_terms) * pow(u_var(), 2.0 * st.kernel.p);
  data.g0 = g0;
  data.structure = st;
  return data;
}

InequalityData derive_inequality(const ProblemSpec& spec) {
  const double g0 = std::fabs(evaluate(spec.f, {.t = 0.0}));
  return make_inequality(EnvelopeStructure{spec.profile, spec.forcing, spec.kernel}, g0);
}

// ---------------------------------------------------------------------------
// mu families

double mu_value(const MuFamily& mu, double t) {
  if (const auto* e = std::get_if<ExponentialMu>(&mu)) return e->c3 * std::exp(-e->q * t);
  if (const auto* p = std::get_if<PowerMu>(&mu)) return p->c4 * std::pow(1.0 + t, -p->r);
  return evaluate(std::get<TabulatedMu>(mu).mu, {.t = t});
}

double mu_derivative(const MuFamily& mu, double t) {
  if (const auto* e = std::get_if<ExponentialMu>(&mu)) return -e->q * e->c3 * std::exp(-e->q * t);
  if (const auto* p = std::get_if<PowerMu>(&mu)) return -p->r * p->c4 * std::pow(1.0 + t, -p->r - 1.0);
  return evaluate(differentiate(std::get<TabulatedMu>(mu).mu, Var::T), {.t = t});
}

double mu_inverse(const MuFamily& mu, double t) {
  if (const auto* e = std::get_if<ExponentialMu>(&mu)) return std::exp(e->q * t) / e->c3;
  if (const auto* p = std::get_if<PowerMu>(&mu)) return std::pow(1.0 + t, p->r) / p->c4;
  return 1.0 / evaluate(std::get<TabulatedMu>(mu).mu, {.t = t});
}

Expr bound_expression(const MuFamily& mu) {
  if (const auto* e = std::get_if<ExponentialMu>(&mu)) return exp(constant(e->q) * t_var()) / constant(e->c3);
  if (const auto* p = std::get_if<PowerMu>(&mu)) return pow(constant(1.0) + t_var(), p->r) / constant(p->c4);
  return constant(1.0) / std::get<TabulatedMu>(mu).mu;
}

std::string family_name(const MuFamily& mu) {
  if (std::holds_alternative<ExponentialMu>(mu)) return "exponential";
  if (std::holds_alternative<PowerMu>(mu)) return "power";
  return "tabulated";
}

// ---------------------------------------------------------------------------
// Closed-form pieces

std::vector<double> tail_exponents(const EnvelopeStructure& st, const MuFamily& mu) {
  const auto& f = st.forcing;
  const auto& k = st.kernel;
  const double lift = 2.0 * k.p - 1.0;
  std::vector<double> out;
  if (const auto* e = std::get_if<ExponentialMu>(&mu); e && st.profile == DecayProfile::Exponential) {
    const double q = e->q;
    if (f.c0 > 0.0) out.push_back(-f.b0 - q);
    if (k.c1 > 0.0) out.push_back(-k.b1 - q);
    if (k.c2 > 0.0) out.push_back(-k.b - q);
    if (k.c1 > 0.0) out.push_back(lift * q - k.b1);
    if (k.c2 > 0.0) out.push_back(lift * q - k.b);
  } else if (const auto* p = std::get_if<PowerMu>(&mu); p && st.profile == DecayProfile::Power) {
    const double r = p->r;
    if (f.c0 > 0.0) out.push_back(1.0 - r - f.b0);
    if (k.c1 > 0.0) out.push_back(1.0 - r - k.b1);
    if (k.c2 > 0.0) out.push_back(1.0 - r - k.b);
    if (k.c1 > 0.0) out.push_back(lift * r + 1.0 - k.b1);
    if (k.c2 > 0.0) out.push_back(lift * r + 1.0 - k.b);
  }
  return out;
}

double scalar_condition(const EnvelopeStructure& st, double c) {
  const double a = st.forcing.c0 + st.kernel.c1 + st.kernel.c2;
  const double b = st.kernel.c1 + st.kernel.c2;
  return a * c + (b == 0.0 ? 0.0 : b * std::pow(c, 1.0 - 2.0 * st.kernel.p));
}

// ---------------------------------------------------------------------------
// check_mu

Certificate check_mu(const InequalityData& data, const MuFamily& mu, double t_max, int n_samples) {
  if (!(t_max > 0.0) || n_samples < 2) throw PreconditionError("check_mu needs t_max > 0 and n_samples >= 2");
  if (const auto* e = std::get_if<ExponentialMu>(&mu); e && !(e->c3 > 0.0 && e->q > 0.0))
    throw InvalidMu("exponential mu needs c3 > 0 and q > 0");
  if (const auto* p = std::get_if<PowerMu>(&mu); p && !(p->c4 > 0.0 && p->r > 0.0))
    throw InvalidMu("power mu needs c4 > 0 and r > 0");

  std::optional<Expr> tab_derivative;
  if (const auto* tab = std::get_if<TabulatedMu>(&mu)) tab_derivative = differentiate(tab->mu, Var::T);

  Certificate cert{.mu = mu, .verdict = Certified{}, .margin_min = kInf, .mu0_g0 = 0.0,
                   .tail = GridOnly{t_max}, .bound = bound_expression(mu)};
  std::optional<std::string> refusal;
  auto refuse = [&](std::string reason) {
    if (!refusal) refusal = std::move(reason);
  };

  const bool closed_form = data.structure && data.gamma.is_constant(0.0) &&
                           !std::holds_alternative<TabulatedMu>(mu) &&
                           ((std::holds_alternative<ExponentialMu>(mu) &&
                             data.structure->profile == DecayProfile::Exponential) ||
                            (std::holds_alternative<PowerMu>(mu) && data.structure->profile == DecayProfile::Power));
  if (closed_form) {
    auto exponents = tail_exponents(*data.structure, mu);
    for (double lambda : exponents) {
      if (lambda > kTailTolerance) {
        refuse(fmt::format("positive tail exponent {:.6g}: the condition fails as t grows", lambda));
        break;
      }
    }
    cert.tail = ExponentComparison{std::move(exponents)};
  }

  // Tabulated mu may leave its domain or overflow; both make it invalid.
  auto guarded = [](auto&& fn, double t) {
    try {
      return fn(t);
    } catch (const DomainError& err) {
      throw InvalidMu(fmt::format("mu cannot be evaluated at t = {:.6g}: {}", t, err.what()));
    }
  };
  auto mu_at = [&](double t) { return mu_value(mu, t); };
  auto dmu_at = [&](double t) { return tab_derivative ? evaluate(*tab_derivative, {.t = t}) : mu_derivative(mu, t); };

  const double mu0 = guarded(mu_at, 0.0);
  if (overflows_or_nonpositive(mu0)) throw InvalidMu(fmt::format("mu(0) = {} is not positive", mu0));
  cert.mu0_g0 = mu0 * data.g0;
  bool strict = cert.mu0_g0 < 1.0;
  if (cert.mu0_g0 > 1.0) refuse(fmt::format("initial condition fails: mu(0) g0 = {:.6g} > 1", cert.mu0_g0));

  bool alpha_ok = true;
  for (int i = 0; i < n_samples; ++i) {
    const double t = i == n_samples - 1 ? t_max : t_max * i / (n_samples - 1);
    const double m = guarded(mu_at, t);
    if (overflows_or_nonpositive(m))
      throw InvalidMu(fmt::format("mu({:.6g}) = {} is not positive and finite", t, m));
    const double dm = guarded(dmu_at, t);
    const double inv = tab_derivative ? 1.0 / m : mu_inverse(mu, t);
    if (!std::isfinite(inv)) throw InvalidMu(fmt::format("1/mu overflows at t = {:.6g}", t));

    // An overflowing alpha cannot be dominated: the margin is -inf there.
    try {
      const double margin = inv * (evaluate(data.gamma, {.t = t}) - dm * inv) - alpha_at(data, t, inv) -
                            evaluate(data.beta, {.t = t});
      cert.margin_min = std::min(cert.margin_min, margin);
    } catch (const DomainError& err) {
      if (err.kind() != DomainError::Kind::NonFinite) throw;
      cert.margin_min = -kInf;
    }

    if (alpha_ok) {
      try {
        double prev = alpha_at(data, t, 0.0);
        alpha_ok = prev >= 0.0;
        for (int k = 1; k <= 8 && alpha_ok; ++k) {
          const double cur = alpha_at(data, t, inv * k / 8.0);
          alpha_ok = cur >= prev - 1e-12 * std::fabs(prev);
          prev = cur;
        }
      } catch (const DomainError& err) {
        if (err.kind() != DomainError::Kind::NonFinite) throw;
      }
    }
  }

  if (!(cert.margin_min >= 0.0))
    refuse(fmt::format("mu condition violated on the grid: minimum margin {:.6g}", cert.margin_min));
  if (!alpha_ok) refuse("alpha is not non-negative and non-decreasing in g on the sampled range");

  if (refusal)
    cert.verdict = Refused{*refusal};
  else
    cert.verdict = Certified{strict};
  return cert;
}

// ---------------------------------------------------------------------------
// Searches

namespace {

double golden_minimize(const std::function<double(double)>& fn, double lo, double hi, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = fn(x1), f2 = fn(x2);
  while (hi - lo > tol) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = fn(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = fn(x2);
    }
  }
  return 0.5 * (lo + hi);
}

class ScaleChooser {
 public:
  ScaleChooser(const EnvelopeStructure& st, double g0, double golden_tol)
      : st_(st), g0_(g0), tol_(golden_tol) {}

  /// Scale constant (c3 or c4) for a given rate, or empty if none satisfies
  /// the scalar condition together with c g0 < 1.
  std::optional<double> choose(double rate) const {
    const double a = st_.forcing.c0 + st_.kernel.c1 + st_.kernel.c2;
    const double b = st_.kernel.c1 + st_.kernel.c2;
    const double cap = g0_ > 0.0 ? (1.0 - 1e-9) / g0_ : kInf;
    const double p = st_.kernel.p;
    auto h = [&](double c) { return scalar_condition(st_, c); };

    if (b == 0.0) {
      // alpha == 0: the condition is a c <= rate.
      double c = a > 0.0 ? rate / a : kInf;
      c = std::min(c, cap);
      if (!std::isfinite(c)) c = 1.0;
      return c;
    }
    if (p > 0.5) {
      const double hi = std::min(cap, 1e6);
      const double c = golden_minimize(h, hi * 1e-12, hi, tol_);
      if (h(c) <= rate) return c;
      return std::nullopt;
    }
    // p <= 1/2: h increases in c; take the largest admissible c.
    const double floor = p == 0.5 ? b : 0.0;
    if (floor >= rate) return std::nullopt;
    double hi = cap;
    if (!std::isfinite(hi)) {
      hi = 1.0;
      while (h(hi) <= rate && hi < 1e12) hi *= 2.0;
    }
    if (h(hi) <= rate) return hi;
    double lo = 0.0;
    for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
      const double mid = 0.5 * (lo + hi);
      (h(mid) <= rate ? lo : hi) = mid;
    }
    if (!(lo > 0.0)) return std::nullopt;
    return lo * (1.0 - 1e-9);
  }

  /// min(1 - h(c)/rate, -max exponent): positive iff the closed form certifies.
  double normalized_slack(double rate, double c, const std::vector<double>& exponents) const {
    double worst = -kInf;
    for (double e : exponents) worst = std::max(worst, e);
    const double tail = exponents.empty() ? kInf : -worst;
    return std::min(1.0 - scalar_condition(st_, c) / rate, tail);
  }

 private:
  const EnvelopeStructure& st_;
  double g0_;
  double tol_;
};

std::vector<double> log_sweep(const SearchOptions& o) {
  if (!(o.sweep_min > 0.0) || !(o.sweep_max >= o.sweep_min) || o.sweep_points < 1)
    throw PreconditionError("sweep needs 0 < sweep_min <= sweep_max and at least one point");
  std::vector<double> out(o.sweep_points);
  const double l0 = std::log(o.sweep_min), l1 = std::log(o.sweep_max);
  for (int i = 0; i < o.sweep_points; ++i)
    out[i] = o.sweep_points == 1 ? o.sweep_min : std::exp(l0 + (l1 - l0) * i / (o.sweep_points - 1));
  return out;
}

// Keeps exp(rate * t) and its 2p-th power representable on the check grid.
double check_horizon(const SearchOptions& o, double rate, double p, bool exponential) {
  if (!exponential) return o.t_max;
  return std::min(o.t_max, 250.0 / (rate * std::max(1.0, 2.0 * p)));
}

Certificate refusal(const InequalityData& data, MuFamily mu, std::string reason, double best_slack,
                    const SearchOptions& o) {
  Certificate cert{.mu = mu, .verdict = Refused{std::move(reason)}, .margin_min = best_slack,
                   .mu0_g0 = mu_value(mu, 0.0) * data.g0, .tail = GridOnly{o.t_max}, .bound = bound_expression(mu)};
  if (data.structure) cert.tail = ExponentComparison{tail_exponents(*data.structure, mu)};
  return cert;
}

template <typename MakeMu>
Certificate sweep_search(const InequalityData& data, const SearchOptions& o, bool exponential, MakeMu make_mu,
                         const char* rate_name) {
  const auto& st = *data.structure;
  const ScaleChooser chooser(st, data.g0, o.golden_tol);
  double best = -kInf;
  std::optional<MuFamily> best_mu;
  std::optional<Certificate> last_checked;

  for (double rate : log_sweep(o)) {
    const auto c = chooser.choose(rate);
    const double c_eval = c.value_or(1.0);
    const MuFamily mu = make_mu(c_eval, rate);
    const auto exponents = tail_exponents(st, mu);
    const double slack = chooser.normalized_slack(rate, c_eval, exponents);
    if (slack > best || !best_mu) {
      best = slack;
      best_mu = mu;
    }
    if (!c) continue;
    bool tail_ok = true;
    for (double e : exponents) tail_ok = tail_ok && e <= kTailTolerance;
    if (!tail_ok) continue;

    auto cert = check_mu(data, mu, check_horizon(o, rate, st.kernel.p, exponential), o.n_samples);
    if (cert.certified()) return cert;
    last_checked = std::move(cert);
  }
  if (last_checked) return *last_checked;
  return refusal(data, *best_mu,
                 fmt::format("no certificate: no {} in [{:g}, {:g}] satisfies the tail and scalar conditions",
                             rate_name, o.sweep_min, o.sweep_max),
                 best, o);
}

void require_structure(const InequalityData& data, DecayProfile profile, const char* who) {
  if (!data.structure || data.structure->profile != profile || !data.gamma.is_constant(0.0))
    throw PreconditionError(fmt::format("{} needs inequality data built from {} envelopes", who,
                                        profile == DecayProfile::Exponential ? "exponential" : "power-law"));
}

}  // namespace

Certificate search_exponential(const InequalityData& data, const SearchOptions& o) {
  require_structure(data, DecayProfile::Exponential, "search_exponential");
  const auto& st = *data.structure;
  const auto& k = st.kernel;
  auto make = [](double c, double q) -> MuFamily { return ExponentialMu{c, q}; };

  if (k.c1 + k.c2 == 0.0 || k.p <= 0.5) return sweep_search(data, o, true, make, "q");

  // p > 1/2: the growth terms carry exponent (2p-1) q - b_i, so q is capped.
  double q_max = kInf;
  if (k.c1 > 0.0) q_max = std::min(q_max, k.b1 / (2.0 * k.p - 1.0));
  if (k.c2 > 0.0) q_max = std::min(q_max, k.b / (2.0 * k.p - 1.0));

  const ScaleChooser chooser(st, data.g0, o.golden_tol);
  const double hi = data.g0 > 0.0 ? (1.0 - 1e-9) / data.g0 : 1e6;
  const double c_min =
      golden_minimize([&](double x) { return scalar_condition(st, x); }, hi * 1e-12, hi, o.golden_tol);

  if (!(q_max > 0.0)) {
    // Report the best the sweep could do; every q has a positive tail exponent.
    double best = -kInf;
    MuFamily best_mu = ExponentialMu{c_min, o.sweep_min};
    for (double q : log_sweep(o)) {
      const MuFamily mu = ExponentialMu{c_min, q};
      const double slack = chooser.normalized_slack(q, c_min, tail_exponents(st, mu));
      if (slack > best) {
        best = slack;
        best_mu = mu;
      }
    }
    return refusal(data, best_mu,
                   fmt::format("no certificate: tail exponent (2p-1)q - min(b1, b) is positive for every q > 0 "
                               "(p = {:g})",
                               k.p),
                   best, o);
  }

  const double q = q_max;
  const auto c3 = chooser.choose(q);
  if (!c3) {
    const MuFamily mu = ExponentialMu{c_min, q};
    return refusal(data, mu,
                   fmt::format("no certificate: min over c3 of the scalar condition is {:.6g} > q = {:.6g}",
                               scalar_condition(st, c_min), q),
                   chooser.normalized_slack(q, c_min, tail_exponents(st, mu)), o);
  }
  return check_mu(data, ExponentialMu{*c3, q}, check_horizon(o, q, k.p, true), o.n_samples);
}

Certificate search_power(const InequalityData& data, const SearchOptions& o) {
  require_structure(data, DecayProfile::Power, "search_power");
  auto make = [](double c, double r) -> MuFamily { return PowerMu{c, r}; };
  return sweep_search(data, o, false, make, "r");
}

// ---------------------------------------------------------------------------

BoundCheck verify_solution_bound(const Trajectory& traj, const Certificate& cert) {
  if (!cert.certified()) throw PreconditionError("verify_solution_bound needs a certified certificate");
  if (!traj.completed()) throw PreconditionError("verify_solution_bound needs a completed trajectory");

  BoundCheck out{.holds = true, .min_slack = kInf, .worst_node = 0};
  const bool strict = cert.strict();
  for (std::size_t k = 0; k < traj.values.size(); ++k) {
    const double slack = mu_inverse(cert.mu, traj.time(k)) - std::fabs(traj.values[k]);
    if (slack < out.min_slack) {
      out.min_slack = slack;
      out.worst_node = k;
    }
    if (strict ? !(slack > 0.0) : !(slack >= 0.0)) out.holds = false;
  }
  return out;
}

}  // namespace volterra
