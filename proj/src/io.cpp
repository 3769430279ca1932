#include "volterra/io.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <sstream>

namespace volterra {

using nlohmann::json;

namespace {

double number_field(const json& j, const char* key) {
  if (!j.contains(key)) throw IoError(fmt::format("problem file is missing '{}'", key));
  const auto& v = j.at(key);
  if (!v.is_number()) throw IoError(fmt::format("problem field '{}' must be a number", key));
  return v.get<double>();
}

std::string string_field(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string())
    throw IoError(fmt::format("problem field '{}' must be an expression string", key));
  return j.at(key).get<std::string>();
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_or_inf(const json& v) {
  return v.is_null() ? std::numeric_limits<double>::infinity() : v.get<double>();
}

}  // namespace

ProblemSpec parse_problem(const json& j) {
  if (!j.is_object()) throw IoError("problem file must hold a JSON object");
  DecayProfile profile = DecayProfile::Exponential;
  if (j.contains("decay")) {
    const auto d = j.at("decay").get<std::string>();
    if (d == "power")
      profile = DecayProfile::Power;
    else if (d != "exponential")
      throw IoError(fmt::format("unknown decay profile '{}'", d));
  }
  const ForcingEnvelope forcing{number_field(j, "c0"), number_field(j, "b0")};
  const KernelEnvelope kernel{number_field(j, "c1"), number_field(j, "b1"), number_field(j, "c2"),
                              number_field(j, "b"), number_field(j, "p")};
  return build_problem(string_field(j, "f"), string_field(j, "a"), forcing, kernel, profile);
}

ProblemSpec load_problem(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& err) {
    throw IoError(fmt::format("{}: invalid JSON: {}", path.string(), err.what()));
  }
  return parse_problem(j);
}

std::string format_real(double v) { return fmt::format("{:.17g}", v); }

namespace {
std::string series_csv(const char* column, const Grid& grid, const std::vector<double>& values,
                       const RunStatus& status) {
  std::string out = fmt::format("t,{}\n", column);
  for (std::size_t k = 0; k < values.size(); ++k)
    out += fmt::format("{:.17g},{:.17g}\n", grid.node(k), values[k]);
  out += "# status=" + describe(status) + "\n";
  return out;
}
}  // namespace

std::string trajectory_csv(const Trajectory& traj) {
  return series_csv("u", traj.grid, traj.values, traj.status);
}

std::string majorant_csv(const MajorantCurve& curve) {
  return series_csv("g", curve.grid, curve.g_values, curve.status);
}

json to_json(const MuFamily& mu) {
  if (const auto* e = std::get_if<ExponentialMu>(&mu)) return {{"family", "exponential"}, {"c3", e->c3}, {"q", e->q}};
  if (const auto* p = std::get_if<PowerMu>(&mu)) return {{"family", "power"}, {"c4", p->c4}, {"r", p->r}};
  return {{"family", "tabulated"}, {"expr", to_string(std::get<TabulatedMu>(mu).mu)}};
}

MuFamily mu_from_json(const json& j) {
  const auto family = j.at("family").get<std::string>();
  if (family == "exponential") return ExponentialMu{j.at("c3").get<double>(), j.at("q").get<double>()};
  if (family == "power") return PowerMu{j.at("c4").get<double>(), j.at("r").get<double>()};
  if (family == "tabulated") return TabulatedMu{parse(j.at("expr").get<std::string>())};
  throw IoError(fmt::format("unknown mu family '{}'", family));
}

json to_json(const Certificate& cert) {
  json j;
  j["mu"] = to_json(cert.mu);
  if (const auto* c = std::get_if<Certified>(&cert.verdict)) {
    j["verdict"] = "certified";
    j["strict"] = c->strict;
  } else {
    j["verdict"] = "refused";
    j["reason"] = std::get<Refused>(cert.verdict).reason;
  }
  j["margin_min"] = finite_or_null(cert.margin_min);
  j["mu0_g0"] = cert.mu0_g0;
  if (const auto* e = std::get_if<ExponentComparison>(&cert.tail))
    j["tail"] = {{"kind", "exponents"}, {"exponents", e->exponents}};
  else
    j["tail"] = {{"kind", "grid_only"}, {"t_max", std::get<GridOnly>(cert.tail).t_max}};
  j["bound"] = to_string(cert.bound);
  return j;
}

Certificate certificate_from_json(const json& j) {
  try {
    Certificate cert{.mu = mu_from_json(j.at("mu")), .verdict = Certified{}, .margin_min = 0.0, .mu0_g0 = 0.0,
                     .tail = GridOnly{}, .bound = {}};
    const auto verdict = j.at("verdict").get<std::string>();
    if (verdict == "certified")
      cert.verdict = Certified{j.value("strict", true)};
    else if (verdict == "refused")
      cert.verdict = Refused{j.value("reason", std::string{})};
    else
      throw IoError(fmt::format("unknown verdict '{}'", verdict));
    cert.margin_min = number_or_inf(j.at("margin_min"));
    cert.mu0_g0 = j.at("mu0_g0").get<double>();
    const auto& tail = j.at("tail");
    if (tail.at("kind") == "exponents")
      cert.tail = ExponentComparison{tail.at("exponents").get<std::vector<double>>()};
    else
      cert.tail = GridOnly{tail.at("t_max").get<double>()};
    cert.bound = bound_expression(cert.mu);
    return cert;
  } catch (const json::exception& err) {
    throw IoError(fmt::format("malformed certificate: {}", err.what()));
  }
}

json to_json(const ValidationReport& report) {
  json checks = json::array();
  for (const auto& c : report.checks) {
    json entry{{"hypothesis", hypothesis_id(c.id)},
               {"worst_margin", finite_or_null(c.worst_margin)},
               {"verdict", c.pass ? "pass" : "fail"},
               {"worst_point", {{"t", c.worst.t}}}};
    if (c.worst.s) entry["worst_point"]["s"] = *c.worst.s;
    if (c.worst.u) entry["worst_point"]["u"] = *c.worst.u;
    if (c.error) entry["error"] = *c.error;
    checks.push_back(std::move(entry));
  }
  return {{"checks", checks}, {"all_pass", report.all_pass()}};
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot write {}", tmp.string()));
    out << content;
    out.flush();
    if (!out) throw IoError(fmt::format("short write to {}", tmp.string()));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError(fmt::format("cannot rename {} to {}: {}", tmp.string(), path.string(), ec.message()));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace volterra
