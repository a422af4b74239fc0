#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "dctscene_test_cli";

struct CliRun {
  int status = 0;
  std::string out;
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

CliRun run(const std::string& args) {
  const fs::path log = kWork / "last_output.txt";
  const std::string cmd = std::string("\"") + DCTSCENE_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  CliRun r;
  r.status = std::system(cmd.c_str());
  r.out = slurp(log);
  return r;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
    const CliRun s = run("synth --out " + q(kWork / "corpus") + " --sequences 2 --seed 500 --frames 110 --width 96 --height 64");
    ASSERT_EQ(s.status, 0) << s.out;
    const CliRun t = run("train --corpus " + q(kWork / "corpus") + " --iterations 3 --out " + q(kWork / "model.txt"));
    ASSERT_EQ(t.status, 0) << t.out;
  }
  static void TearDownTestSuite() { fs::remove_all(kWork); }

  static fs::path frames() { return kWork / "corpus" / "seq000" / "frames"; }
  static std::string model() { return " --model " + q(kWork / "model.txt"); }
};

}  // namespace

TEST_F(Cli, MissingModelPointsAtTrainingAndDefaults) {
  const CliRun r = run("detect --input " + q(frames()) + " --out " + q(kWork / "none") + " --model " +
                    q(kWork / "absent.model"));
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.out.find("not found"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("dctscene train"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("shipped defaults"), std::string::npos) << r.out;
}

TEST_F(Cli, MissingInputIsAnError) {
  const CliRun r = run("detect --input " + q(kWork / "nothing.mjpeg") + " --out " + q(kWork / "none") + model());
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.out.find("does not exist"), std::string::npos) << r.out;
}

TEST_F(Cli, SingleFrameInputGivesNoBlobs) {
  const CliRun r = run("detect --input " + q(frames() / "000000.jpg") + " --out " + q(kWork / "one") + model());
  ASSERT_EQ(r.status, 0) << r.out;
  std::istringstream blobs(slurp(kWork / "one" / "blobs.txt"));
  std::string line;
  int records = 0;
  while (std::getline(blobs, line)) records += !line.empty() && line[0] != '#';
  EXPECT_EQ(records, 0);
  EXPECT_TRUE(fs::exists(kWork / "one" / "masks" / "000000.pgm"));
}

TEST_F(Cli, DetectIsDeterministicAndEmitsExtras) {
  const std::string common = "detect --input " + q(frames()) + model() + " --emit-age-images --emit-scores --out ";
  ASSERT_EQ(run(common + q(kWork / "a")).status, 0);
  ASSERT_EQ(run(common + q(kWork / "b")).status, 0);
  const std::string a = slurp(kWork / "a" / "blobs.txt");
  EXPECT_EQ(a, slurp(kWork / "b" / "blobs.txt"));
  EXPECT_NE(a.find("young"), std::string::npos);
  EXPECT_TRUE(fs::exists(kWork / "a" / "age" / "000050.pgm"));
  EXPECT_TRUE(fs::exists(kWork / "a" / "scores" / "000050.txt"));
  EXPECT_NE(slurp(kWork / "a" / "stats.txt").find("frames 110"), std::string::npos);
}

TEST_F(Cli, EvalScoresDetections) {
  const fs::path det = kWork / "det";
  for (const char* seq : {"seq000", "seq001"}) {
    ASSERT_EQ(run("detect --input " + q(kWork / "corpus" / seq / "frames") + " --out " + q(det / seq) + model()).status, 0);
  }
  const CliRun r = run("eval --detections " + q(det) + " --gt " + q(kWork / "corpus") + " --csv " + q(kWork / "eval.csv"));
  ASSERT_EQ(r.status, 0) << r.out;
  EXPECT_NE(r.out.find("sequences:            2"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("F1:"), std::string::npos);
  const std::string csv = slurp(kWork / "eval.csv");
  EXPECT_EQ(csv.rfind("sequence,frames,", 0), 0u);
  EXPECT_NE(csv.find("\nseq000,110,"), std::string::npos) << csv;
  EXPECT_NE(csv.find("\nall,220,"), std::string::npos) << csv;

  const CliRun single = run("eval --detections " + q(det / "seq001") + " --gt " + q(kWork / "corpus" / "seq001"));
  ASSERT_EQ(single.status, 0) << single.out;
  EXPECT_NE(single.out.find("\nseq001,110,"), std::string::npos) << single.out;
}

TEST_F(Cli, BenchMemoryMatchesPerBlockSum) {
  const CliRun r = run("bench --input " + q(frames()) + " --frames 40" + model());
  ASSERT_EQ(r.status, 0) << r.out;
  EXPECT_NE(r.out.find("(consistent)"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("frames per second:"), std::string::npos);
}
