#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "roa/io.hpp"
#include "test_util.hpp"

namespace roa {
namespace {

namespace fs = std::filesystem;

class Cli : public ::testing::Test {
 protected:
  static fs::path dir() {
    static const fs::path d = [] {
      const fs::path p = fs::temp_directory_path() / ("roa_cli_" + std::to_string(::getpid()));
      fs::create_directories(p);
      return p;
    }();
    return d;
  }
  static std::string path(const std::string& name) { return (dir() / name).string(); }
  static std::string shipped(const std::string& name) { return testing::systems_dir() + "/" + name; }

  static void write(const std::string& name, const std::string& text) { std::ofstream(path(name)) << text; }
  static std::string read(const std::string& name) {
    std::ifstream in(path(name));
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  // exit code; stderr lands in err.txt
  static int run(const std::string& args) {
    const std::string cmd = std::string(ROA_CLI_PATH) + " " + args + " > " + path("out.txt") + " 2> " + path("err.txt");
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  }

  // cached Example 1 k = 6 certificate
  static std::string vdp_cert() {
    static bool done = false;
    if (!done) {
      EXPECT_EQ(run("synthesize " + shipped("vdp.json") + " --k 6 --out " + path("vdp6.json")), 0);
      done = true;
    }
    return path("vdp6.json");
  }

  static void write_scalar(const std::string& name, double rate) {
    auto s = testing::scalar_spec(rate);
    write(name, system_to_json(s).dump());
  }
};

TEST_F(Cli, SynthesizeWritesCertificate) {
  const std::string cert = vdp_cert();
  const auto j = json::parse(std::ifstream(cert));
  EXPECT_EQ(j.at("degrees").at("k"), 6);
  EXPECT_EQ(j.at("degrees").at("d_s"), 12);
  EXPECT_EQ(j.at("degrees").at("d_s_prime"), 10);
  EXPECT_TRUE(j.contains("system_hash"));
  EXPECT_EQ(j.at("system_hash"), load_system(shipped("vdp.json")).hash);
}

TEST_F(Cli, MalformedJson) {
  write("bad.json", "{\n  \"state_vars\": [\"x\",\n  oops\n}");
  EXPECT_EQ(run("synthesize " + path("bad.json") + " --k 2"), 1);
  const std::string err = read("err.txt");
  EXPECT_NE(err.find("line 3"), std::string::npos) << err;
}

TEST_F(Cli, EvenDelta) {
  EXPECT_EQ(run("synthesize " + shipped("vdp.json") + " --k 6 --delta 2"), 1);
  EXPECT_NE(read("err.txt").find("δ must be odd"), std::string::npos) << read("err.txt");
}

TEST_F(Cli, MissingFile) {
  EXPECT_EQ(run("synthesize " + path("nope.json") + " --k 2"), 1);
}

TEST_F(Cli, UnknownFlag) {
  EXPECT_EQ(run("synthesize " + shipped("vdp.json") + " --frobnicate"), 1);
}

TEST_F(Cli, DegreeDeficit) {
  write_scalar("scalar.json", -1.0);
  EXPECT_EQ(run("synthesize " + path("scalar.json") + " --k 0 --ds 2 --dsprime 0"), 1);
}

TEST_F(Cli, Infeasible) {
  write_scalar("scalar.json", -1.0);
  EXPECT_EQ(run("synthesize " + path("scalar.json") + " --delta 3 --k 6 --ds 8 --dsprime 4"), 2);
}

TEST_F(Cli, NumericalTroubleOnIterationLimit) {
  write_scalar("scalar.json", -1.0);
  EXPECT_EQ(run("synthesize " + path("scalar.json") + " --k 2 --ds 4 --dsprime 2 --max-iter 2"), 3);
}

TEST_F(Cli, VerifyValidPair) {
  const std::string cert = vdp_cert();
  EXPECT_EQ(run("verify " + shipped("vdp.json") + " " + cert +
                " --samples 5000 --traj-points 20 --traj-traces 2 --out " + path("rep.json")),
            0)
      << read("err.txt");
  const auto j = json::parse(std::ifstream(path("rep.json")));
  EXPECT_TRUE(j.at("passed").get<bool>());
  // stored and recomputed residuals agree
  EXPECT_NEAR(j.at("reconstruction_residual").get<double>(),
              j.at("stored").at("reconstruction_residual").get<double>(), 1e-9);
}

TEST_F(Cli, VerifyCorruptedGram) {
  auto j = json::parse(std::ifstream(vdp_cert()));
  auto& q = j.at("grams").at(0).at("Q");
  q.at(0).at(1) = q.at(0).at(1).get<double>() + 1e-2;
  write("corrupt.json", j.dump());
  EXPECT_EQ(run("verify " + shipped("vdp.json") + " " + path("corrupt.json") +
                " --samples 2000 --no-trajectories --out " + path("rep.json")),
            4);
  const auto r = json::parse(std::ifstream(path("rep.json")));
  EXPECT_GT(r.at("reconstruction_residual").get<double>(), 1e-6);
  EXPECT_FALSE(r.at("passed").get<bool>());
}

TEST_F(Cli, VerifyZeroSamples) {
  EXPECT_EQ(run("verify " + shipped("vdp.json") + " " + vdp_cert() + " --samples 0"), 1);
}

TEST_F(Cli, VerifyHashMismatch) {
  auto j = json::parse(std::ifstream(shipped("vdp.json")));
  j["ball_R"] = 1.02;
  write("vdp_r.json", j.dump());
  EXPECT_EQ(run("verify " + path("vdp_r.json") + " " + vdp_cert() + " --samples 100"), 1);
  EXPECT_NE(read("err.txt").find("different system"), std::string::npos);
}

TEST_F(Cli, VerifyIsReproducible) {
  const std::string args = "verify " + shipped("vdp.json") + " " + vdp_cert() + " --samples 3000 --seed 9 --traj-points 5 --traj-traces 2";
  ASSERT_EQ(run(args), 0);
  const std::string a = read("out.txt");
  ASSERT_EQ(run(args), 0);
  auto ja = json::parse(a), jb = json::parse(read("out.txt"));
  EXPECT_EQ(ja, jb);
}

TEST_F(Cli, ContourGrid) {
  ASSERT_EQ(run("contour " + shipped("vdp.json") + " " + vdp_cert() + " --res 7 --out " + path("u.csv")), 0);
  std::ifstream in(path("u.csv"));
  const Grid g = read_grid_csv(in);
  EXPECT_EQ(g.axes, (std::vector<std::string>{"x", "y"}));
  EXPECT_EQ(g.values.size(), 49u);
  // centre row: u at the origin
  const auto c = certificate_from_json(json::parse(std::ifstream(vdp_cert())), 2).cert;
  EXPECT_NEAR(g.values[24], c.u.eval({0.0, 0.0}), 1e-9);
}

TEST_F(Cli, ContourNeedsSliceAboveTwoDimensions) {
  EXPECT_EQ(run("contour " + shipped("seven_dim.json") + " " + vdp_cert() + " --res 5"), 1);
}

TEST_F(Cli, RoaSimSliceAndReproducibility) {
  const std::string args = "roa-sim " + shipped("seven_dim.json") + " --res 6 --policies 2 --T 5 --seed 3 --slice x1,x2";
  ASSERT_EQ(run(args + " --out " + path("g1.csv")), 0) << read("err.txt");
  ASSERT_EQ(run(args + " --out " + path("g2.csv")), 0);
  EXPECT_EQ(read("g1.csv"), read("g2.csv"));
  std::ifstream in(path("g1.csv"));
  const Grid g = read_grid_csv(in);
  EXPECT_EQ(g.values.size(), 36u);
  for (double v : g.values) EXPECT_TRUE(v == 0.0 || v == 1.0);
  EXPECT_EQ(run("roa-sim " + shipped("seven_dim.json") + " --res 6"), 1);
  EXPECT_EQ(run("roa-sim " + shipped("seven_dim.json") + " --res 6 --slice x1,x1"), 1);
  EXPECT_EQ(run("roa-sim " + shipped("seven_dim.json") + " --res 6 --slice x1,q9"), 1);
}

TEST_F(Cli, VerifyWithRoaGrid) {
  ASSERT_EQ(run("roa-sim " + shipped("vdp.json") + " --res 40 --out " + path("roa.csv")), 0);
  ASSERT_EQ(run("verify " + shipped("vdp.json") + " " + vdp_cert() + " --samples 1000 --no-trajectories --roa-grid " +
                path("roa.csv") + " --mc 20000 --out " + path("rep.json")),
            0)
      << read("err.txt");
  const auto r = json::parse(std::ifstream(path("rep.json")));
  const double e = r.at("volume_error").at("percent").get<double>();
  EXPECT_GT(e, 0.0);
  EXPECT_LT(e, 30.0);
}

TEST_F(Cli, ExportSdpaRoundTrips) {
  ASSERT_EQ(run("export-sdpa " + shipped("vdp.json") + " --k 4 --out " + path("p.dat-s")), 0);
  const auto sf = load_system(shipped("vdp.json"));
  const auto low = lower_to_sdp(assemble_program(sf.spec, default_degrees(sf.spec, 4)));
  std::ifstream in(path("p.dat-s"));
  EXPECT_EQ(import_sdpa(in), low.sdp);
}

TEST_F(Cli, DegreesFromFile) {
  // vdp.json carries k = 6, d_s = 12, d_s' = 10
  ASSERT_EQ(run("export-sdpa " + shipped("vdp.json") + " --out " + path("f.dat-s")), 0);
  const auto sf = load_system(shipped("vdp.json"));
  const auto low = lower_to_sdp(assemble_program(sf.spec, DegreeConfig{6, 12, 10}));
  std::ifstream in(path("f.dat-s"));
  EXPECT_EQ(import_sdpa(in), low.sdp);
}

}  // namespace
}  // namespace roa
