#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "volterra/certificate.hpp"
#include "volterra/comparison.hpp"
#include "volterra/error.hpp"
#include "volterra/model.hpp"
#include "volterra/solver.hpp"

namespace volterra {

class IoError : public Error {
 public:
  using Error::Error;
};

/// Problem file: {"f", "a", "c0", "b0", "c1", "b1", "c2", "b", "p"} plus an
/// optional "decay": "exponential" | "power". See docs/problem-format.md.
ProblemSpec parse_problem(const nlohmann::json& j);
ProblemSpec load_problem(const std::filesystem::path& path);

/// 17 significant digits; round-trips binary64.
std::string format_real(double v);

/// Header `t,u`, one row per accepted node, then `# status=...`.
std::string trajectory_csv(const Trajectory& traj);
/// Header `t,g`, same layout as trajectory_csv.
std::string majorant_csv(const MajorantCurve& curve);

nlohmann::json to_json(const MuFamily& mu);
MuFamily mu_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Certificate& cert);
/// Reads a certificate as written by to_json. The bound expression is rebuilt
/// from the mu family.
Certificate certificate_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ValidationReport& report);

/// Writes through a temporary file in the same directory and renames it over
/// `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace volterra
