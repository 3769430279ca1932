#include <fmt/format.h>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "volterra/error.hpp"
#include "volterra/model.hpp"

using namespace volterra;

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;

ProblemSpec atan_problem() {
  return build_problem("exp(-t)", "exp(-(t+s))*atan(u)", {2.0, 1.0}, {kHalfPi, 2.0, kHalfPi, 1.0, 0.5});
}

std::string fmt_kernel(double k, double m) { return fmt::format("({:.17g})*u + ({:.17g})*u^3", k, m); }

}  // namespace

TEST(BuildProblem, DerivativesOfAtanProblem) {
  const ProblemSpec spec = atan_problem();
  EXPECT_DOUBLE_EQ(evaluate(spec.f_prime, {.t = 0.5}), -std::exp(-0.5));
  const Bindings b{.t = 1.0, .s = 0.25, .u = 2.0};
  EXPECT_DOUBLE_EQ(evaluate(spec.a_t, b), -std::exp(-1.25) * std::atan(2.0));
  EXPECT_DOUBLE_EQ(evaluate(spec.a_u, b), std::exp(-1.25) / 5.0);
}

TEST(BuildProblem, ForcingMustDependOnTOnly) {
  EXPECT_THROW(build_problem("exp(-s)", "u", {1.0, 0.0}, {1.0, 0.0, 0.0, 0.0, 1.0}), VariableScopeError);
  EXPECT_THROW(build_problem("u", "u", {1.0, 0.0}, {1.0, 0.0, 0.0, 0.0, 1.0}), VariableScopeError);
}

TEST(BuildProblem, RejectsBadEnvelopes) {
  EXPECT_THROW(build_problem("1", "u", {-1.0, 0.0}, {1.0, 0.0, 0.0, 0.0, 1.0}), PreconditionError);
  EXPECT_THROW(build_problem("1", "u", {1.0, 0.0}, {1.0, 0.0, 0.0, 0.0, 0.0}), PreconditionError);
  EXPECT_THROW(build_problem("1", "u", {1.0, 0.0}, {1.0, -0.5, 0.0, 0.0, 1.0}), PreconditionError);
  EXPECT_THROW(build_problem("1", "u", {INFINITY, 0.0}, {1.0, 0.0, 0.0, 0.0, 1.0}), PreconditionError);
}

TEST(BuildProblem, AbsInKernelIsRejected) {
  EXPECT_THROW(build_problem("1", "abs(u)", {1.0, 0.0}, {1.0, 0.0, 0.0, 0.0, 1.0}), NonDifferentiable);
}

TEST(Envelope, Shapes) {
  EXPECT_DOUBLE_EQ(envelope(DecayProfile::Exponential, 2.0, 1.0, 1.0), 2.0 * std::exp(-1.0));
  EXPECT_DOUBLE_EQ(envelope(DecayProfile::Power, 2.0, 2.0, 1.0), 0.5);
  EXPECT_EQ(envelope(DecayProfile::Exponential, 3.0, 0.0, 100.0), 3.0);
}

TEST(ValidateDecay, AtanProblemPasses) {
  const ValidationReport report = validate_decay(atan_problem(), {});
  EXPECT_TRUE(report.all_pass());
  // |f| + |f'| = 2 exp(-t) touches the envelope everywhere.
  EXPECT_NEAR(report[Hypothesis::ForcingDecay].worst_margin, 0.0, 1e-15);
  EXPECT_GE(report[Hypothesis::DerivativeIntegral].worst_margin, 0.0);
  EXPECT_GT(report[Hypothesis::KernelMonotone].worst_margin, 0.0);
}

TEST(ValidateDecay, SquareKernelDiagonalMargin) {
  const ProblemSpec spec = build_problem("1", "u^2", {1.0, 0.0}, {1.0, 0.0, 0.0, 0.0, 1.0});
  const ValidationReport report = validate_decay(spec, {});
  EXPECT_DOUBLE_EQ(report[Hypothesis::DiagonalGrowth].worst_margin, 1.0);
  EXPECT_TRUE(report[Hypothesis::DiagonalGrowth].pass);
  // a_u = 2u is negative for u < 0.
  EXPECT_FALSE(report[Hypothesis::KernelMonotone].pass);
  EXPECT_DOUBLE_EQ(report[Hypothesis::KernelMonotone].worst_margin, -20.0);
  EXPECT_EQ(report[Hypothesis::KernelMonotone].worst.u, -10.0);
}

TEST(ValidateDecay, ViolatedForcingEnvelope) {
  const ProblemSpec spec = build_problem("exp(-t)", "0", {1.0, 1.0}, {0.0, 0.0, 0.0, 0.0, 1.0});
  const ValidationReport report = validate_decay(spec, {});
  EXPECT_FALSE(report[Hypothesis::ForcingDecay].pass);
  EXPECT_DOUBLE_EQ(report[Hypothesis::ForcingDecay].worst_margin, -1.0);
  EXPECT_EQ(report[Hypothesis::ForcingDecay].worst.t, 0.0);
}

TEST(ValidateDecay, RoundingAtEqualityWithinTolerance) {
  // 0.3 (1 + 1.7) rounds below |f| + |f'| at some samples.
  const ProblemSpec spec = build_problem("0.3*exp(-1.7*t)", "0", {0.3 * (1.0 + 1.7), 1.7}, {0.0, 0.0, 0.0, 0.0, 1.0});
  EXPECT_TRUE(validate_decay(spec, {})[Hypothesis::ForcingDecay].pass);
  ValidationGrid exact;
  exact.rel_tol = 0.0;
  const auto& check = validate_decay(spec, exact)[Hypothesis::ForcingDecay];
  EXPECT_EQ(check.pass, check.worst_margin >= 0.0);
}

TEST(ValidateDecay, DomainErrorIsRecorded) {
  const ProblemSpec spec = build_problem("1", "log(u)", {1.0, 0.0}, {1.0, 0.0, 1.0, 0.0, 1.0});
  ValidationReport report;
  ASSERT_NO_THROW(report = validate_decay(spec, {}));
  EXPECT_FALSE(report[Hypothesis::DiagonalGrowth].pass);
  EXPECT_TRUE(report[Hypothesis::DiagonalGrowth].error.has_value());
}

TEST(ValidateDecay, HypothesisIds) {
  EXPECT_STREQ(hypothesis_id(Hypothesis::ForcingDecay), "forcing-decay");
  EXPECT_STREQ(hypothesis_id(Hypothesis::DiagonalGrowth), "diagonal-growth");
  EXPECT_STREQ(hypothesis_id(Hypothesis::DerivativeIntegral), "derivative-integral");
  EXPECT_STREQ(hypothesis_id(Hypothesis::KernelMonotone), "kernel-monotone");
}

TEST(ValidateDecay, Deterministic) {
  const ValidationReport a = validate_decay(atan_problem(), {});
  const ValidationReport b = validate_decay(atan_problem(), {});
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(a.checks[i].worst_margin, b.checks[i].worst_margin);
    EXPECT_EQ(a.checks[i].worst.t, b.checks[i].worst.t);
  }
}

// Property: the monotone verdict agrees with the sign of the smallest a_u,
// here known in closed form for a = k*u + m*u^3 on |u| <= u_max.
TEST(ValidateDecay, MonotoneVerdictMatchesSignOfMinimumDerivative) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  for (int i = 0; i < 50; ++i) {
    const double k = coef(rng), m = coef(rng);
    const ProblemSpec spec = build_problem("1", fmt_kernel(k, m), {1.0, 0.0}, {100.0, 0.0, 0.0, 0.0, 2.0});
    ValidationGrid grid;
    grid.t_max = 1.0;
    grid.t_samples = 3;
    const ValidationReport report = validate_decay(spec, grid);
    // a_u = k + 3 m u^2, extremes at u = 0 and u = +-u_max.
    const double min_au = std::min(k, k + 3.0 * m * grid.u_max * grid.u_max);
    EXPECT_EQ(report[Hypothesis::KernelMonotone].pass, min_au >= 0.0) << k << " " << m;
    EXPECT_NEAR(report[Hypothesis::KernelMonotone].worst_margin, min_au, 1e-12 * (1.0 + std::fabs(min_au)));
  }
}
