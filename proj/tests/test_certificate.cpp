#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "volterra/certificate.hpp"
#include "volterra/error.hpp"

using namespace volterra;

namespace {

EnvelopeStructure exp_structure(double c0, double b0, double c1, double b1, double c2, double b, double p) {
  return {DecayProfile::Exponential, {c0, b0}, {c1, b1, c2, b, p}};
}

InequalityData plain(const char* gamma, const char* alpha, const char* beta, double g0) {
  InequalityData d;
  d.gamma = parse(gamma);
  d.alpha = parse(alpha);
  d.beta = parse(beta);
  d.g0 = g0;
  return d;
}

// Condition divided by its right side e^{qt}/c, written out term by term:
//   q - sum_i C_i exp(lambda_i t).
double normalized_condition(const EnvelopeStructure& st, double c, double q, double t) {
  const auto& f = st.forcing;
  const auto& k = st.kernel;
  const double lift = 2.0 * k.p - 1.0;
  double sum = 0.0;
  sum += f.c0 * c * std::exp(-(f.b0 + q) * t);
  sum += k.c1 * c * std::exp(-(k.b1 + q) * t);
  sum += k.c2 * c * std::exp(-(k.b + q) * t);
  sum += k.c1 * std::pow(c, 1.0 - 2.0 * k.p) * std::exp((lift * q - k.b1) * t);
  sum += k.c2 * std::pow(c, 1.0 - 2.0 * k.p) * std::exp((lift * q - k.b) * t);
  return q - sum;
}

}  // namespace

TEST(DeriveInequality, AtanProblem) {
  const double hp = std::numbers::pi / 2.0;
  const ProblemSpec spec =
      build_problem("3*exp(-t)", "exp(-(t+s))*atan(u)", {6.0, 1.0}, {hp, 2.0, hp, 1.0, 0.5});
  const InequalityData d = derive_inequality(spec);
  EXPECT_EQ(d.g0, 3.0);
  EXPECT_TRUE(d.gamma.is_constant(0.0));
  ASSERT_TRUE(d.structure.has_value());
  for (double t : {0.0, 0.7, 4.0}) {
    const double kernel = hp * std::exp(-2.0 * t) + hp * std::exp(-t);
    EXPECT_DOUBLE_EQ(evaluate(d.beta, {.t = t}), 6.0 * std::exp(-t) + kernel);
    EXPECT_DOUBLE_EQ(alpha_at(d, t, 2.5), kernel * 2.5);
  }
}

TEST(DeriveInequality, ZeroCoefficientsDropTerms) {
  const InequalityData d = make_inequality(exp_structure(1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0), 0.5);
  EXPECT_TRUE(d.alpha.is_constant(0.0));
  EXPECT_TRUE(d.beta.is_constant(1.0));
}

TEST(DeriveInequality, PowerProfile) {
  const EnvelopeStructure st{DecayProfile::Power, {1.0, 2.0}, {0.5, 3.0, 0.0, 0.0, 1.0}};
  const InequalityData d = make_inequality(st, 0.2);
  EXPECT_DOUBLE_EQ(evaluate(d.beta, {.t = 1.0}), 0.25 + 0.5 / 8.0);
  EXPECT_DOUBLE_EQ(alpha_at(d, 1.0, 2.0), 0.5 / 8.0 * 4.0);
}

TEST(MuFamilies, ValuesAndInverse) {
  const MuFamily e = ExponentialMu{2.0, 0.5};
  EXPECT_DOUBLE_EQ(mu_value(e, 2.0), 2.0 * std::exp(-1.0));
  EXPECT_DOUBLE_EQ(mu_derivative(e, 2.0), -std::exp(-1.0));
  EXPECT_DOUBLE_EQ(mu_inverse(e, 2.0), std::exp(1.0) / 2.0);
  const MuFamily p = PowerMu{4.0, 2.0};
  EXPECT_DOUBLE_EQ(mu_value(p, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(mu_derivative(p, 1.0), -1.0);
  EXPECT_DOUBLE_EQ(evaluate(bound_expression(p), {.t = 1.0}), 1.0);
  const MuFamily tab = TabulatedMu{parse("1/(1+t)")};
  EXPECT_DOUBLE_EQ(mu_inverse(tab, 3.0), 4.0);
  EXPECT_EQ(family_name(tab), "tabulated");
}

TEST(CheckMu, ConstantMuWithZeroData) {
  const Certificate cert = check_mu(plain("0", "0", "0", 0.5), TabulatedMu{parse("1")}, 10.0, 101);
  EXPECT_TRUE(cert.certified());
  EXPECT_TRUE(cert.strict());
  EXPECT_EQ(cert.margin_min, 0.0);
  EXPECT_EQ(cert.mu0_g0, 0.5);
  EXPECT_TRUE(std::holds_alternative<GridOnly>(cert.tail));
}

TEST(CheckMu, EqualityAtStartIsNonStrict) {
  const Certificate cert = check_mu(plain("0", "0", "0", 1.0), TabulatedMu{parse("1")}, 10.0, 101);
  EXPECT_TRUE(cert.certified());
  EXPECT_FALSE(cert.strict());
}

TEST(CheckMu, InitialConditionRefused) {
  const Certificate cert = check_mu(plain("0", "0", "0", 2.0), TabulatedMu{parse("1")}, 10.0, 101);
  EXPECT_FALSE(cert.certified());
  EXPECT_NE(std::get<Refused>(cert.verdict).reason.find("initial condition"), std::string::npos);
}

TEST(CheckMu, QuadraticKernelRefusedByTail) {
  const InequalityData d = make_inequality(exp_structure(1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0), 1.0);
  const Certificate cert = check_mu(d, ExponentialMu{0.5, 1.0}, 50.0, 501);
  ASSERT_FALSE(cert.certified());
  EXPECT_NE(std::get<Refused>(cert.verdict).reason.find("tail exponent"), std::string::npos);
  const auto& ex = std::get<ExponentComparison>(cert.tail).exponents;
  EXPECT_EQ(*std::max_element(ex.begin(), ex.end()), 1.0);
}

TEST(CheckMu, ClosedFormInstanceCertified) {
  const InequalityData d = make_inequality(exp_structure(0.1, 2.0, 0.1, 2.0, 0.1, 2.0, 1.0), 0.1);
  const Certificate cert = check_mu(d, ExponentialMu{std::sqrt(2.0 / 3.0), 2.0}, 50.0, 5001);
  EXPECT_TRUE(cert.certified());
  EXPECT_TRUE(cert.strict());
  EXPECT_GE(cert.margin_min, -1e-12);
}

TEST(CheckMu, InvalidMu) {
  const InequalityData d = plain("0", "0", "0", 0.5);
  EXPECT_THROW(check_mu(d, TabulatedMu{parse("1 - t")}, 2.0, 11), InvalidMu);
  EXPECT_THROW(check_mu(d, TabulatedMu{parse("exp(1000*t)")}, 2.0, 11), InvalidMu);
  EXPECT_THROW(check_mu(d, TabulatedMu{parse("log(1 - t)")}, 2.0, 11), InvalidMu);
  EXPECT_THROW(check_mu(d, ExponentialMu{0.0, 1.0}, 2.0, 11), InvalidMu);
}

TEST(CheckMu, DecreasingAlphaRefused) {
  const Certificate cert = check_mu(plain("0", "-u", "0", 0.0), TabulatedMu{parse("exp(-t)")}, 2.0, 21);
  EXPECT_FALSE(cert.certified());
}

TEST(SearchExponential, ClosedFormInstance) {
  const InequalityData d = make_inequality(exp_structure(0.1, 2.0, 0.1, 2.0, 0.1, 2.0, 1.0), 0.1);
  const Certificate cert = search_exponential(d);
  ASSERT_TRUE(cert.certified());
  const auto& mu = std::get<ExponentialMu>(cert.mu);
  EXPECT_EQ(mu.q, 2.0);
  EXPECT_NEAR(mu.c3, std::sqrt(2.0 / 3.0), 1e-6);
}

TEST(SearchExponential, QuadraticKernelRefused) {
  const InequalityData d = make_inequality(exp_structure(1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0), 1.0);
  const Certificate cert = search_exponential(d);
  ASSERT_FALSE(cert.certified());
  EXPECT_NE(std::get<Refused>(cert.verdict).reason.find("tail exponent"), std::string::npos);
  EXPECT_LT(cert.margin_min, 0.0);
}

TEST(SearchExponential, PureForcing) {
  const InequalityData d = make_inequality(exp_structure(1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0), 0.5);
  const Certificate cert = search_exponential(d);
  ASSERT_TRUE(cert.certified());
  const auto& mu = std::get<ExponentialMu>(cert.mu);
  // The smallest swept q certifies with c3 = q / c0.
  EXPECT_DOUBLE_EQ(mu.q, 1e-3);
  EXPECT_DOUBLE_EQ(mu.c3, 1e-3);
}

TEST(SearchExponential, SublinearKernel) {
  const double hp = std::numbers::pi / 2.0;
  const InequalityData d = make_inequality(exp_structure(2.0, 1.0, hp, 2.0, hp, 1.0, 0.5), 1.0);
  const Certificate cert = search_exponential(d);
  ASSERT_TRUE(cert.certified());
  const auto& mu = std::get<ExponentialMu>(cert.mu);
  // With p = 1/2 the scalar condition is a c + (c1 + c2) <= q, so q > pi.
  EXPECT_GT(mu.q, std::numbers::pi);
  EXPECT_LE(scalar_condition(*d.structure, mu.c3), mu.q);
}

TEST(SearchExponential, NeedsStructure) {
  EXPECT_THROW(search_exponential(plain("0", "0", "1", 0.0)), PreconditionError);
  const EnvelopeStructure st{DecayProfile::Power, {1.0, 2.0}, {0.5, 3.0, 0.0, 0.0, 1.0}};
  EXPECT_THROW(search_exponential(make_inequality(st, 0.1)), PreconditionError);
}

TEST(SearchPower, PowerEnvelopes) {
  const EnvelopeStructure st{DecayProfile::Power, {1.0, 2.0}, {0.5, 3.0, 0.0, 0.0, 1.0}};
  const Certificate cert = search_power(make_inequality(st, 0.1));
  ASSERT_TRUE(cert.certified()) << std::get<Refused>(cert.verdict).reason;
  const auto& mu = std::get<PowerMu>(cert.mu);
  // The tail needs r <= b1 - 1 = 2; the scalar condition needs r >= 2 sqrt(0.75).
  EXPECT_LE(mu.r, 2.0);
  EXPECT_GE(mu.r, 2.0 * std::sqrt(0.75));
  EXPECT_GE(cert.margin_min, 0.0);
}

TEST(VerifyBound, Cases) {
  const Grid grid = Grid::uniform(1.0, 0.5);
  const Trajectory traj{grid, {0.5, 0.8, 1.3}, Completed{}};
  Certificate cert{ExponentialMu{1.0, 1.0}, Certified{true}, 0.0, 0.5, GridOnly{1.0}, constant(1.0)};
  const BoundCheck ok = verify_solution_bound(traj, cert);
  EXPECT_TRUE(ok.holds);
  EXPECT_DOUBLE_EQ(ok.min_slack, 0.5);
  EXPECT_EQ(ok.worst_node, 0u);

  cert.mu = ExponentialMu{1.0, 0.1};
  const BoundCheck bad = verify_solution_bound(traj, cert);
  EXPECT_FALSE(bad.holds);
  EXPECT_EQ(bad.worst_node, 2u);

  // Touching the bound is allowed only for a non-strict certificate.
  cert.mu = ExponentialMu{2.0, 1.0};
  EXPECT_FALSE(verify_solution_bound(traj, cert).holds);
  cert.verdict = Certified{false};
  EXPECT_TRUE(verify_solution_bound(traj, cert).holds);

  cert.verdict = Refused{"no"};
  EXPECT_THROW(verify_solution_bound(traj, cert), PreconditionError);
  cert.verdict = Certified{true};
  EXPECT_THROW(verify_solution_bound(Trajectory{grid, {0.5}, BlowUp{0.3}}, cert), PreconditionError);
}

// Property: the grid verdict of check_mu agrees with the closed-form reduction
// (all tail exponents <= 0, scalar condition <= q, c3 g0 <= 1) whenever the
// closed form is decided with room to spare.
TEST(CertificateProperty, ReductionEquivalence) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> coef(0.0, 0.3), rate(0.0, 3.0), pw(0.3, 1.5), qd(0.05, 2.0),
      cd(0.05, 3.0), unit(0.0, 1.0);
  int compared = 0, certified = 0;
  for (int i = 0; i < 2000 && compared < 200; ++i) {
    const EnvelopeStructure st = exp_structure(coef(rng), rate(rng), coef(rng), rate(rng), coef(rng), rate(rng), pw(rng));
    const double c = cd(rng), q = qd(rng);
    const double g0 = unit(rng) / c;
    const auto ex = tail_exponents(st, ExponentialMu{c, q});
    const double worst = ex.empty() ? -1.0 : *std::max_element(ex.begin(), ex.end());
    const double hq = scalar_condition(st, c);

    bool expect = false;
    if (worst <= 0.0) {
      if (std::fabs(hq - q) < 0.02 * q) continue;
      expect = hq <= q;
    } else if (worst < 0.05 || normalized_condition(st, c, q, 50.0) > -0.05 * q) {
      continue;
    }
    const Certificate cert = check_mu(make_inequality(st, g0), ExponentialMu{c, q}, 50.0, 2001);
    EXPECT_EQ(cert.certified(), expect) << "c=" << c << " q=" << q << " h=" << hq << " worst=" << worst;
    ++compared;
    certified += expect;
  }
  EXPECT_EQ(compared, 200);
  EXPECT_GT(certified, 20);
}

// Property: for p <= 1/2 a certificate at rate q stays valid for every larger q.
TEST(CertificateProperty, MonotoneInRateForSublinearKernels) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> coef(0.0, 1.0), rate(0.0, 2.0), pw(0.2, 0.5);
  int checked = 0;
  for (int i = 0; i < 500 && checked < 30; ++i) {
    const EnvelopeStructure st = exp_structure(coef(rng), rate(rng), coef(rng), rate(rng), coef(rng), rate(rng), pw(rng));
    const InequalityData d = make_inequality(st, 0.2);
    const double c = 0.5, q = 4.0 * coef(rng) + 0.1;
    if (!check_mu(d, ExponentialMu{c, q}, 20.0, 401).certified()) continue;
    for (double f : {1.5, 2.0, 4.0}) EXPECT_TRUE(check_mu(d, ExponentialMu{c, f * q}, 20.0, 401).certified());
    ++checked;
  }
  EXPECT_EQ(checked, 30);
}

// Property: the certificate is strict exactly when mu(0) g0 < 1.
TEST(CertificateProperty, StrictnessFollowsInitialCondition) {
  const EnvelopeStructure st = exp_structure(0.1, 2.0, 0.1, 2.0, 0.1, 2.0, 1.0);
  for (double c3 : {0.5, 1.0, 2.0}) {
    for (double scale : {0.5, 1.0}) {
      const double g0 = scale / c3;
      const Certificate cert = check_mu(make_inequality(st, g0), ExponentialMu{c3, 2.0}, 50.0, 1001);
      if (!cert.certified()) continue;
      EXPECT_EQ(cert.strict(), c3 * g0 < 1.0);
    }
  }
}
