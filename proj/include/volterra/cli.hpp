#pragma once

#include <iosfwd>

namespace volterra::cli {

// Exit codes. A run's code depends only on the verdicts it reaches.
inline constexpr int kOk = 0;
inline constexpr int kError = 1;
inline constexpr int kNoCertificate = 2;  // certify/verify: no certificate or bound violated
inline constexpr int kBlowUp = 3;         // solve: finite-time blow-up detected

/// Entry point for the `volterra` tool: solve | certify | verify | demo-blowup.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace volterra::cli
