#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qnr/dataset_io.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("qnr_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  Result run(const std::string& args) const {
    const std::string cmd = std::string("cd '") + dir_.string() + "' && '" QNR_CLI_PATH "' " + args + " >stdout.txt 2>stderr.txt";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(dir_ / "stdout.txt"), slurp(dir_ / "stderr.txt")};
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run("--help").code, 0);
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("gen-data --samples 5 --out a.jsonl --bogus 1").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
}

TEST_F(Cli, GenDataWritesRequestedRecords) {
  const Result r = run("gen-data --channel 'Z(0.2)' --qubits 1 --samples 30 --seed 1 --out d.jsonl");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto ds = qnr::load_dataset(path("d.jsonl"));
  EXPECT_EQ(ds.size(), 30u);
  EXPECT_EQ(ds.seed, 1u);
  EXPECT_EQ(ds.channel_spec, "Z(0.2)");
}

TEST_F(Cli, GenDataClassification) {
  const Result r = run("gen-data --classify --channels 'Z(0.2);GAD(0.5,0.3)' --mode IN --samples 40 --seed 2 --out c.jsonl");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto ds = qnr::load_class_dataset(path("c.jsonl"));
  ASSERT_EQ(ds.size(), 40u);
  EXPECT_EQ(ds.num_classes(), 2);
  int zeros = 0;
  for (const auto& rec : ds.records) zeros += rec.label == 0;
  EXPECT_EQ(zeros, 20);
}

TEST_F(Cli, BadSpecReportsPosition) {
  const Result r = run("gen-data --channel 'Z(0.2' --samples 3 --seed 1 --out d.jsonl");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("5"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(path("d.jsonl")));
}

TEST_F(Cli, TrainEvalAndDeterminism) {
  ASSERT_EQ(run("gen-data --channel 'Z(0.2)' --samples 30 --seed 1 --out train.jsonl").code, 0);
  ASSERT_EQ(run("gen-data --channel 'Z(0.2)' --samples 100 --seed 2 --out test.jsonl").code, 0);

  const Result a = run("train --data train.jsonl --test-data test.jsonl --epochs 50 --seed 3 --out m1.json");
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_NE(a.out.find("ATF="), std::string::npos);
  EXPECT_TRUE(fs::exists(path("m1.json.metrics.csv")));
  const Result b = run("train --data train.jsonl --test-data test.jsonl --epochs 50 --seed 3 --out m2.json");
  ASSERT_EQ(b.code, 0);
  EXPECT_EQ(slurp(path("m1.json")), slurp(path("m2.json")));
  EXPECT_EQ(slurp(path("m1.json.metrics.csv")), slurp(path("m2.json.metrics.csv")));

  EXPECT_EQ(run("train --data train.jsonl --test-data test.jsonl --epochs 5 --loss infidelity --seed 3 --out i.json").code, 0);
  EXPECT_EQ(run("train --data train.jsonl --test-data test.jsonl --epochs 5 --loss mse --seed 3 --out s.json").code, 0);
  EXPECT_EQ(run("train --data train.jsonl --test-data test.jsonl --loss cce --seed 3 --out x.json").code, 2);
  EXPECT_EQ(run("train --data missing.jsonl --test-data test.jsonl --out y.json").code, 2);

  const Result ev = run("eval --model m1.json --data test.jsonl");
  EXPECT_EQ(ev.code, 0);
  EXPECT_EQ(ev.err.find("overlap"), std::string::npos);
  const std::string atf = a.out.substr(a.out.find("ATF="));
  EXPECT_EQ(ev.out, atf);

  const Result overlap = run("eval --model m1.json --data train.jsonl");
  EXPECT_EQ(overlap.code, 0);
  EXPECT_NE(overlap.err.find("warning: train/test overlap"), std::string::npos);
}

TEST_F(Cli, SeedIsPrintedWhenDrawn) {
  const Result r = run("gen-data --channel 'X(0.2)' --samples 3 --out d.jsonl");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("seed=", 0), 0u);
  const std::uint64_t seed = std::stoull(r.out.substr(5));
  EXPECT_EQ(qnr::load_dataset(path("d.jsonl")).seed, seed);
}

TEST_F(Cli, SweepPrintsOneRowPerSize) {
  const Result r = run("sweep --channel 'Z(0.2)' --sizes 10,30,100,300 --repeats 1 --test-size 20 --epochs 3 --seed 1 --out s.csv");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 7);  // seed, header, 4 rows, table path
  const std::string csv = slurp(path("s.csv"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}

TEST_F(Cli, BlochCloud) {
  ASSERT_EQ(run("bloch-cloud --channel 'GAD(0.5,0.3)' --samples 200 --seed 4 --out c.csv").code, 0);
  std::istringstream in(slurp(path("c.csv")));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "clean_x,clean_y,clean_z,noisy_x,noisy_y,noisy_z");
  int rows = 0;
  while (std::getline(in, line)) {
    double v[6];
    ASSERT_EQ(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf", v, v + 1, v + 2, v + 3, v + 4, v + 5), 6);
    EXPECT_NEAR(v[5], 0.7 * v[2], 1e-9);
    ++rows;
  }
  EXPECT_EQ(rows, 200);
  EXPECT_EQ(run("bloch-cloud --channel 'CAD(0.1,0.2)' --samples 5 --out c2.csv").code, 2);
}

TEST_F(Cli, ConfigFile) {
  {
    std::ofstream cfg(path("gen.ini"));
    cfg << "channel = \"X(0.2)\"\nsamples = 7\nseed = 9\n";
  }
  ASSERT_EQ(run("gen-data --config gen.ini --out a.jsonl").code, 0);
  const auto a = qnr::load_dataset(path("a.jsonl"));
  EXPECT_EQ(a.size(), 7u);
  EXPECT_EQ(a.seed, 9u);
  EXPECT_EQ(a.channel_spec, "X(0.2)");

  ASSERT_EQ(run("gen-data --config gen.ini --samples 4 --out b.jsonl").code, 0);
  EXPECT_EQ(qnr::load_dataset(path("b.jsonl")).size(), 4u);

  {
    std::ofstream cfg(path("bad.ini"));
    cfg << "nonsense = 1\n";
  }
  EXPECT_EQ(run("gen-data --config bad.ini --samples 3 --out c.jsonl").code, 2);
  EXPECT_EQ(run("gen-data --config absent.ini --samples 3 --out c.jsonl").code, 2);
}
