#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "volterra/cli.hpp"
#include "volterra/io.hpp"

namespace fs = std::filesystem;
using namespace volterra;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("volterra_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "volterra");
    args.push_back("--out");
    args.push_back(dir_.string());
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    out_.str("");
    err_.str("");
    return cli::run(static_cast<int>(argv.size()), argv.data(), out_, err_);
  }

  static std::string problem(const char* name) { return (fs::path(VOLTERRA_PROBLEMS_DIR) / name).string(); }

  fs::path dir_;
  std::ostringstream out_, err_;
};

}  // namespace

TEST_F(CliTest, SolveZeroKernel) {
  EXPECT_EQ(run({"solve", "--problem", problem("zero_kernel.json"), "--t-end", "1", "--step", "0.1"}), cli::kOk);
  const std::string csv = read_file(dir_ / "trajectory.csv");
  EXPECT_EQ(csv.rfind("t,u\n0,1\n", 0), 0u);
  EXPECT_NE(csv.find("# status=completed"), std::string::npos);
}

TEST_F(CliTest, SolveQuadraticKernelBlowsUp) {
  EXPECT_EQ(run({"solve", "--problem", problem("example1.json"), "--t-end", "2", "--step", "1e-3"}), cli::kBlowUp);
  EXPECT_EQ(out_.str(), "blow-up detected near t=1.00\n");
}

TEST_F(CliTest, CertifyAtan) {
  EXPECT_EQ(run({"certify", "--problem", problem("atan_kernel.json")}), cli::kOk);
  EXPECT_EQ(out_.str().rfind("certified: ", 0), 0u);
  const auto j = nlohmann::json::parse(read_file(dir_ / "certificate.json"));
  EXPECT_EQ(j.at("verdict"), "certified");
  EXPECT_EQ(j.at("mu").at("family"), "exponential");
  EXPECT_TRUE(j.at("validation").at("all_pass").get<bool>());
}

TEST_F(CliTest, CertifyQuadraticKernelRefused) {
  EXPECT_EQ(run({"certify", "--problem", problem("example1.json")}), cli::kNoCertificate);
  EXPECT_NE(out_.str().find("tail exponent"), std::string::npos);
  const auto j = nlohmann::json::parse(read_file(dir_ / "certificate.json"));
  EXPECT_EQ(j.at("verdict"), "refused");
}

TEST_F(CliTest, VerifyAtan) {
  EXPECT_EQ(run({"verify", "--problem", problem("atan_kernel.json"), "--t-end", "20"}), cli::kOk);
  EXPECT_TRUE(fs::exists(dir_ / "bound.csv"));
  const auto report = nlohmann::json::parse(read_file(dir_ / "report.json"));
  EXPECT_TRUE(report.is_object());
  EXPECT_EQ(read_file(dir_ / "bound.csv").rfind("t,u,g,mu_inv\n", 0), 0u);
}

TEST_F(CliTest, VerifyWithViolatedCertificate) {
  EXPECT_EQ(run({"verify", "--problem", problem("atan_kernel.json"), "--t-end", "20", "--certificate",
                 problem("atan_forced_violation_certificate.json")}),
            cli::kNoCertificate);
  EXPECT_EQ(out_.str().rfind("bound violated at t=", 0), 0u);
}

TEST_F(CliTest, VerifyQuadraticKernel) {
  EXPECT_EQ(run({"verify", "--problem", problem("example1.json"), "--t-end", "2", "--step", "1e-3"}),
            cli::kNoCertificate);
  EXPECT_EQ(out_.str(), "no certificate; solution blows up near t=1.00\n");
}

TEST_F(CliTest, Errors) {
  EXPECT_EQ(run({"solve", "--problem", "/nonexistent.json"}), cli::kError);
  EXPECT_EQ(run({"certify", "--problem", problem("bad_envelope.json")}), cli::kError);
  EXPECT_NE(err_.str().find("error: "), std::string::npos);
  EXPECT_EQ(run({"frobnicate"}), cli::kError);
  EXPECT_EQ(run({"solve", "--problem", problem("zero_kernel.json"), "--step", "-1"}), cli::kError);
}

TEST_F(CliTest, DemoBlowup) {
  EXPECT_EQ(run({"demo-blowup", "--step", "1e-3"}), cli::kOk);
  EXPECT_NE(out_.str().find("blow-up detected near t=1.00"), std::string::npos);
}

TEST_F(CliTest, RepeatedRunsAreByteIdentical) {
  ASSERT_EQ(run({"verify", "--problem", problem("atan_kernel.json"), "--t-end", "5"}), cli::kOk);
  const std::string bound = read_file(dir_ / "bound.csv"), report = read_file(dir_ / "report.json");
  const std::string printed = out_.str();
  ASSERT_EQ(run({"verify", "--problem", problem("atan_kernel.json"), "--t-end", "5"}), cli::kOk);
  EXPECT_EQ(read_file(dir_ / "bound.csv"), bound);
  EXPECT_EQ(read_file(dir_ / "report.json"), report);
  EXPECT_EQ(out_.str(), printed);
}
