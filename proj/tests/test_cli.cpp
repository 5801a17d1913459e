#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli_app.hpp"

namespace fs = std::filesystem;
using snnf::cli::runCli;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  std::vector<std::string> full{"--log-level", "warn"};
  full.insert(full.end(), args.begin(), args.end());
  const int code = runCli(full, out, err);
  return {code, out.str(), err.str()};
}

std::size_t lineCount(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) n += line.empty() ? 0 : 1;
  return n;
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / "snnf_cli_test";
    fs::remove_all(root_);
    fs::create_directories(root_);
    const CliResult r = cli({"--seed", "4", "synth", "--frames", "20", "--out", (root_ / "dolly").string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }

  static fs::path root_;
};

fs::path CliTest::root_;

}  // namespace

TEST_F(CliTest, SynthWritesSequence) {
  const fs::path dir = root_ / "dolly";
  EXPECT_TRUE(fs::exists(dir / "calib.txt"));
  EXPECT_EQ(lineCount(dir / "poses_gt.txt"), 20u);
  for (const char* ext : {"pgm", "semg", "idep"}) {
    EXPECT_TRUE(fs::exists(snnf::cli::framePath(dir, 19, ext))) << ext;
  }
  EXPECT_EQ(snnf::cli::countFrames(dir), 20);
}

TEST_F(CliTest, TrackWritesOnePoseLinePerFrame) {
  const fs::path est = root_ / "est.txt";
  const CliResult r = cli({"track", (root_ / "dolly").string(), "--out", est.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lineCount(est), 20u);
  EXPECT_NE(r.out.find("frames 20"), std::string::npos);
  EXPECT_NE(r.out.find("lost 0"), std::string::npos);
  const CliResult ate = cli({"eval-ate", est.string(), (root_ / "dolly" / "poses_gt.txt").string(),
                       "--discard", "0"});
  ASSERT_EQ(ate.code, 0) << ate.err;
  std::istringstream in(ate.out);
  std::string key;
  double rmse = 1.0;
  in >> key >> rmse;
  EXPECT_EQ(key, "ate_rmse_m");
  EXPECT_LT(rmse, 0.01);
}

TEST_F(CliTest, EvalAteOfIdenticalFilesIsZero) {
  const std::string gt = (root_ / "dolly" / "poses_gt.txt").string();
  const CliResult r = cli({"eval-ate", gt, gt});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("ate_rmse_m 0.0", 0), 0u) << r.out;
  EXPECT_NE(r.out.find("alignment none"), std::string::npos);
}

TEST_F(CliTest, RegisterFromOffset) {
  const CliResult r = cli({"register", (root_ / "dolly").string(), "--ref", "0", "--cur", "1",
                     "--offset", "0.3", "0", "-0.2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("pose ", 0), 0u);
  const auto at = r.out.find("translation_error_m ");
  ASSERT_NE(at, std::string::npos);
  EXPECT_LT(std::stod(r.out.substr(at + 20)), 0.01);
}

TEST_F(CliTest, EvalRepeatOnRenderedPair) {
  const CliResult r = cli({"eval-repeat", (root_ / "dolly").string(), "--ref", "0", "--cur", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("repeatability 1.000000"), std::string::npos) << r.out;
}

TEST_F(CliTest, MissingInputIsDataError) {
  const std::string missing = (root_ / "does_not_exist.txt").string();
  const CliResult r = cli({"eval-ate", missing, missing});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find(missing), std::string::npos);
}

TEST_F(CliTest, CorruptContainerIsDataError) {
  const fs::path dir = root_ / "corrupt";
  fs::create_directories(dir);
  for (const auto& e : fs::directory_iterator(root_ / "dolly")) {
    fs::copy_file(e.path(), dir / e.path().filename(), fs::copy_options::overwrite_existing);
  }
  const fs::path semg = snnf::cli::framePath(dir, 1, "semg");
  fs::resize_file(semg, fs::file_size(semg) - 100);
  const CliResult r = cli({"register", dir.string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("truncated"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("plane 1"), std::string::npos) << r.err;
}

TEST_F(CliTest, MalformedPoseFileIsDataError) {
  const fs::path bad = root_ / "bad_poses.txt";
  std::ofstream(bad) << "1 0 0 0 0 1 0 0 0 0 1 0\n1 0 0 0 0 1 0 0 0 0 1\n";
  const CliResult r = cli({"eval-ate", bad.string(), bad.string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
}

TEST(Cli, UnknownSubcommandIsUsageError) {
  const CliResult r = cli({"frobnicate"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("Usage"), std::string::npos) << r.err;
  EXPECT_EQ(cli({}).code, 1);
}

TEST(Cli, HelpSucceeds) {
  const CliResult r = cli({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("bench-basin"), std::string::npos);
}

TEST(Cli, BadConfigIsUsageError) {
  const fs::path cfg = fs::temp_directory_path() / "snnf_cli_bad.cfg";
  std::ofstream(cfg) << "no_such_key = 3\n";
  EXPECT_EQ(cli({"--config", cfg.string(), "eval-ate", "a", "b"}).code, 1);
  std::ofstream(cfg) << "huber_gamma = -1\n";
  EXPECT_EQ(cli({"--config", cfg.string(), "eval-ate", "a", "b"}).code, 1);
  fs::remove(cfg);
  EXPECT_EQ(cli({"--log-level", "loud", "eval-ate", "a", "b"}).code, 1);
}

TEST(Cli, FuseAndDump) {
  const fs::path dir = fs::temp_directory_path() / "snnf_cli_fuse";
  fs::create_directories(dir);
  snnf::GrayImage edge(16, 12);
  snnf::GrayImage seg_a(16, 12, 1.0f);
  snnf::GrayImage seg_b(16, 12);
  edge(3, 4) = 1.0f;
  edge(10, 8) = 1.0f;
  seg_b(10, 8) = 1.0f;
  snnf::io::writePgm(edge, dir / "edge.pgm");
  snnf::io::writePgm(seg_a, dir / "a.pgm");
  snnf::io::writePgm(seg_b, dir / "b.pgm");
  const fs::path semg = dir / "fused.semg";
  CliResult r = cli({"fuse", "--edge", (dir / "edge.pgm").string(), "--seg", (dir / "a.pgm").string(),
               "--seg", (dir / "b.pgm").string(), "--names", "road,car", "--out", semg.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const snnf::SemanticEdgeMap m = snnf::io::readSemanticEdges(semg);
  EXPECT_EQ(m.class_names, (std::vector<std::string>{"road", "car"}));
  EXPECT_EQ(m.planes[1](10, 8), 1.0f);
  EXPECT_EQ(m.planes[1](3, 4), 0.0f);

  r = cli({"nnf-dump", semg.string(), "--out-prefix", (dir / "nnf").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("class0 seeds 2"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("class1 seeds 1"), std::string::npos) << r.out;
  EXPECT_TRUE(fs::exists(dir / "nnf_annf.pgm"));
  fs::remove_all(dir);
}

TEST(Cli, ExitCodeMapping) {
  using snnf::ErrorKind;
  EXPECT_EQ(snnf::cli::exitCodeFor(ErrorKind::kConfig), 1);
  EXPECT_EQ(snnf::cli::exitCodeFor(ErrorKind::kFormat), 2);
  EXPECT_EQ(snnf::cli::exitCodeFor(ErrorKind::kParse), 2);
  EXPECT_EQ(snnf::cli::exitCodeFor(ErrorKind::kIo), 2);
  EXPECT_EQ(snnf::cli::exitCodeFor(ErrorKind::kNumeric), 3);
  EXPECT_EQ(snnf::cli::exitCodeFor(ErrorKind::kRankDeficient), 3);
}
