#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "emd/cli.hpp"
#include "emd/instance_io.hpp"
#include "emd/error.hpp"
#include "json.hpp"

namespace emd {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "emd");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string value_of(const std::string& report, const std::string& key) {
  std::istringstream is(report);
  std::string line;
  while (std::getline(is, line))
    if (line.rfind(key + "=", 0) == 0) return line.substr(key.size() + 1);
  return {};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("emd_cli_test_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p, std::ios::binary) << text;
    return p.string();
  }

  fs::path dir_;
};

constexpr const char* kPair = R"({"m":1,"n":2,"a":[1,1],"b":[1],"z":[0.5,0.5]})";
constexpr const char* kScalar = R"({"m":1,"n":1,"a":[1],"b":[1],"z":[1]})";

TEST_F(CliTest, SolveConverges) {
  const Outcome o = run_cli({"solve", write("pair.json", kPair), "--method", "md-polyak"});
  EXPECT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(value_of(o.out, "status"), "Converged");
  EXPECT_LE(std::stod(value_of(o.out, "f_final")), 1e-20);
}

TEST_F(CliTest, SolveWritesTrace) {
  const std::string trace = (dir_ / "trace.csv").string();
  const Outcome o = run_cli({"solve", write("pair.json", kPair), "--trace", trace, "--eta", "2"});
  ASSERT_EQ(o.code, 0) << o.err;
  std::ifstream is(trace);
  std::string header;
  std::getline(is, header);
  EXPECT_EQ(header, "iter,f,stepsize,l1_norm,d_h_to_ref");
}

TEST_F(CliTest, SolveExitCodes) {
  const std::string scalar = write("scalar.json", kScalar);
  EXPECT_EQ(run_cli({"solve", scalar, "--iters", "1", "--x0-scale", "2"}).code, 2);
  const Outcome blowup = run_cli({"solve", scalar, "--method", "md-const:1000", "--x0-scale", "0.1"});
  EXPECT_EQ(blowup.code, 3);
  EXPECT_EQ(value_of(blowup.out, "status"), "NumericalBreakdown");
}

TEST_F(CliTest, SolveRejectsBadInput) {
  EXPECT_EQ(run_cli({"solve", write("bad.json", "{not json")}).code, 1);
  EXPECT_EQ(run_cli({"solve", write("short.json", R"({"m":1,"n":2,"a":[1],"b":[1]})")}).code, 1);
  EXPECT_EQ(run_cli({"solve", write("neg.json", R"({"m":0,"n":2,"a":[],"b":[]})")}).code, 1);
  EXPECT_EQ(run_cli({"solve", (dir_ / "missing.json").string()}).code, 1);
  EXPECT_EQ(run_cli({"solve", write("pair.json", kPair), "--method", "gd"}).code, 1);
  EXPECT_EQ(run_cli({"solve", write("pair.json", kPair), "--eta", "1", "--x0-scale", "1"}).code, 1);
  const Outcome o = run_cli({"solve", write("bad2.json", "[1,2]")});
  EXPECT_EQ(o.code, 1);
  EXPECT_EQ(std::count(o.err.begin(), o.err.end(), '\n'), 1);
}

TEST_F(CliTest, NoSubcommandIsUsageError) { EXPECT_EQ(run_cli({}).code, 1); }

TEST_F(CliTest, HelpSucceeds) {
  const Outcome o = run_cli({"--help"});
  EXPECT_EQ(o.code, 0);
  EXPECT_NE(o.out.find("solve"), std::string::npos);
}

TEST_F(CliTest, Project) {
  const Outcome o = run_cli({"project", write("pair.json", kPair), "--eta", "3"});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_NEAR(std::stod(value_of(o.out, "l1_norm")), 1.0, 1e-10);
}

TEST_F(CliTest, BiasSymmetric) {
  const Outcome o = run_cli({"bias", write("pair.json", kPair), "--eta", "3"});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_LE(std::stod(value_of(o.out, "orthogonality_residual")), 1e-12);
  EXPECT_NEAR(std::stod(value_of(o.out, "exact_gap")), 0.0, 1e-10);
}

TEST_F(CliTest, BiasConstruct) {
  const Outcome o = run_cli({"bias", "--construct", "10", "10"});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(value_of(o.out, "sandwich_holds"), "true");
}

TEST_F(CliTest, BiasNeedsEta) {
  const Outcome o = run_cli({"bias", write("pair.json", kPair)});
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.err.find("--eta"), std::string::npos);
}

TEST_F(CliTest, RateCert) {
  const std::string inst = write("id.json", R"({"m":2,"n":2,"a":[1,0,0,1],"b":[0.5,0.5],"z":[0.5,0.5]})");
  const Outcome o = run_cli({"rate-cert", inst});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_DOUBLE_EQ(std::stod(value_of(o.out, "local_factor")), 0.9375);
  EXPECT_EQ(run_cli({"rate-cert", write("noz.json", R"({"m":1,"n":1,"a":[1],"b":[1]})")}).code, 1);
}

TEST_F(CliTest, Instability) {
  const Outcome o = run_cli({"instability", write("scalar.json", kScalar), "--alpha", "1", "--iters", "1000"});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_DOUBLE_EQ(std::stod(value_of(o.out, "t_scale")), 3.0);
  EXPECT_NEAR(std::stod(value_of(o.out, "jacobian_spectral_radius")), 2.0, 1e-12);
  EXPECT_GE(std::stod(value_of(o.out, "relative_max_distance")), 0.1);
  EXPECT_EQ(value_of(o.out, "polyak_status"), "Converged");
  EXPECT_EQ(run_cli({"instability", write("s2.json", kScalar)}).code, 1);
}

TEST_F(CliTest, JsonFormat) {
  const Outcome o = run_cli({"--format", "json", "solve", write("pair.json", kPair)});
  ASSERT_EQ(o.code, 0) << o.err;
  const auto doc = nlohmann::json::parse(o.out);
  EXPECT_EQ(doc.at("status"), "Converged");
  EXPECT_EQ(doc.at("x").size(), 2u);
}

TEST_F(CliTest, ExperimentsWriteFiles) {
  const std::string out = (dir_ / "results").string();
  const Outcome e1 = run_cli({"--seed", "3", "--out", out, "exp1", "--m", "5", "--n", "8", "--sparsity", "2",
                              "--iters", "50", "--limit-extra", "50"});
  ASSERT_EQ(e1.code, 0) << e1.err;
  EXPECT_TRUE(fs::exists(fs::path(out) / "exp1_cummin_f.csv"));
  const Outcome e2 = run_cli({"--seed", "3", "--out", out, "exp2", "--m", "5", "--n", "8", "--sparsity", "2",
                              "--iters", "50"});
  ASSERT_EQ(e2.code, 0) << e2.err;
  EXPECT_TRUE(fs::exists(fs::path(out) / "exp2_sparse.csv"));
  EXPECT_TRUE(fs::exists(fs::path(out) / "exp2_dense.csv"));
  EXPECT_EQ(run_cli({"exp1", "--methods", "eg-pm", "--iters", "5", "--m", "2", "--n", "3", "--sparsity", "1",
                     "--out", out})
                .code,
            1);
}

TEST(InstanceIo, RoundTrip) {
  const ProblemInstance p = parse_instance_json(kPair);
  const ProblemInstance q = parse_instance_json(instance_to_json(p));
  EXPECT_EQ(p.a, q.a);
  EXPECT_EQ(p.b, q.b);
  EXPECT_EQ(p.planted, q.planted);
}

TEST(InstanceIo, RejectsInfeasiblePlant) {
  EXPECT_THROW(parse_instance_json(R"({"m":1,"n":2,"a":[1,1],"b":[1],"z":[1,1]})"), Error);
  EXPECT_THROW(parse_instance_json(R"({"m":1,"n":2,"a":[1,"x"],"b":[1]})"), Error);
  EXPECT_THROW(parse_instance_json(R"({"m":1.5,"n":2,"a":[1,1],"b":[1]})"), Error);
}

}  // namespace
}  // namespace emd
