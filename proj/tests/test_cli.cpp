#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "vpseg/image_io.hpp"
#include "vpseg/layer.hpp"
#include "vpseg/segmenter.hpp"

namespace fs = std::filesystem;
using namespace vpseg;

namespace {

struct Result {
  int code;
  std::string err;
};

Result run(const std::string& args) {
  const fs::path err = fs::temp_directory_path() / "vpseg_cli_stderr.txt";
  const std::string cmd = std::string(VPSEG_CLI_PATH) + " " + args + " 2> " + err.string() + " > /dev/null";
  const int status = std::system(cmd.c_str());
  std::ifstream in(err);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, text};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("vpseg_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    ASSERT_EQ(run("synth --kind circle --size 32 --noise 0.01 --seed 3 --out " + (dir_ / "syn").string()).code, 0);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

}  // namespace

TEST_F(Cli, SynthIsDeterministic) {
  ASSERT_EQ(run("synth --kind circle --size 32 --noise 0.01 --seed 3 --out " + (dir_ / "again").string()).code, 0);
  EXPECT_EQ(slurp(dir_ / "syn" / "image.png"), slurp(dir_ / "again" / "image.png"));
  EXPECT_TRUE(fs::exists(dir_ / "syn" / "truth.png"));
  EXPECT_EQ(run("synth --size 8 --out " + (dir_ / "tiny").string()).code, 1);
}

TEST_F(Cli, SegmentWritesAllOutputs) {
  const fs::path out = dir_ / "seg";
  const auto r = run("segment --input " + (dir_ / "syn" / "image.png").string() +
                     " --phases 2 --volume 35,65 --lambda 0.05 --ground-truth " +
                     (dir_ / "syn" / "truth.png").string() + " --out " + out.string());
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"labels.png", "labels_palette.png", "mask_0.pgm", "mask_1.pgm", "trace.csv",
                        "metrics.csv", "soft.vptv"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  const std::string metrics = slurp(out / "metrics.csv");
  EXPECT_NE(metrics.find("# eps=0.01"), std::string::npos);
  EXPECT_NE(metrics.find("dice_1,"), std::string::npos);
  const std::string trace = slurp(out / "trace.csv");
  EXPECT_NE(trace.find("iteration,residual,rowsum_error_0,rowsum_error_1,dual_objective"),
            std::string::npos);
}

TEST_F(Cli, RejectsRatiosNotSummingToOne) {
  const auto r = run("segment --input " + (dir_ / "syn" / "image.png").string() +
                     " --volume 0.3,0.6 --out " + (dir_ / "bad").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("volume"), std::string::npos) << r.err;
}

TEST_F(Cli, MissingInputIsIoError) {
  const auto r = run("segment --input " + (dir_ / "nope.png").string() + " --out " + (dir_ / "x").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("nope.png"), std::string::npos) << r.err;
}

TEST_F(Cli, EmtvModeMatchesLibraryBitForBit) {
  const fs::path out = dir_ / "emtv";
  ASSERT_EQ(run("segment --input " + (dir_ / "syn" / "image.png").string() +
                " --volume off --eps 1 --cost emtv --lambda 0.1 --seed 5 --out " + out.string())
                .code,
            0);
  const Image h = read_image(dir_ / "syn" / "image.png");
  SegParams p;
  p.eps = 1.0;
  p.lambda = 0.1;
  p.cost = CostKind::emtv;
  const SegmentResult r = segment(h, 2, std::nullopt, p, 5);
  const FeatureTensor u = to_feature(read_tensors(out / "soft.vptv").at(0));
  EXPECT_EQ(u.values, r.u.u);
  EXPECT_EQ(labels_from_image(read_image(out / "labels.png")).labels, r.labels.labels);
}

TEST_F(Cli, ConfigFileWithFlagOverride) {
  const fs::path cfg = dir_ / "run.cfg";
  {
    std::ofstream c(cfg);
    c << "input=" << (dir_ / "syn" / "image.png").string() << "\nphases=2\neps=0.5\nlambda=0.02\n"
      << "max-iter=3\nout=" << (dir_ / "cfg").string() << "\n";
  }
  ASSERT_EQ(run("segment --config " + cfg.string() + " --eps 0.25").code, 0);
  const std::string trace = slurp(dir_ / "cfg" / "trace.csv");
  EXPECT_NE(trace.find("# eps=0.25"), std::string::npos);
  EXPECT_NE(trace.find("# lambda=0.02"), std::string::npos);
  EXPECT_NE(trace.find("# max_iter=3"), std::string::npos);
}

TEST_F(Cli, Fig1WritesCouplingsAndSummary) {
  ASSERT_EQ(run("fig1 --eps 0.1,1,10 --out " + (dir_ / "fig1").string()).code, 0);
  EXPECT_TRUE(fs::exists(dir_ / "fig1" / "coupling_eps_0.1.csv"));
  std::ifstream in(dir_ / "fig1" / "summary.csv");
  std::string line;
  std::vector<double> entropy;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 'e') continue;
    std::stringstream ss(line);
    std::string eps, h;
    std::getline(ss, eps, ',');
    std::getline(ss, h, ',');
    entropy.push_back(std::stod(h));
  }
  ASSERT_EQ(entropy.size(), 3u);
  EXPECT_LT(entropy[0], entropy[1]);
  EXPECT_LT(entropy[1], entropy[2]);
  EXPECT_EQ(run("fig1 --eps 0,1 --out " + (dir_ / "f2").string()).code, 1);
}

TEST_F(Cli, SweepRunsEveryCombination) {
  ASSERT_EQ(run("sweep --input " + (dir_ / "syn" / "image.png").string() +
                " --eps-list 0.01,0.1 --lambda-list 0.05 --volume-list \"off;35,65\" --max-iter 50 --out " +
                (dir_ / "sw").string())
                .code,
            0);
  for (int k = 0; k < 4; ++k) EXPECT_TRUE(fs::exists(dir_ / "sw" / ("run_" + std::to_string(k)) / "labels.png"));
  EXPECT_TRUE(fs::exists(dir_ / "sw" / "sweep.csv"));
}

TEST_F(Cli, LayerForwardBackward) {
  FeatureTensor o{2, 3, Matrix(2, 6)};
  for (std::size_t k = 0; k < 12; ++k) o.values.data()[k] = 0.1 * static_cast<double>(k % 5);
  write_tensors(dir_ / "o.vptv", {to_tensor(o)});
  ASSERT_EQ(run("layer forward --logits " + (dir_ / "o.vptv").string() + " --lambda 0.2 --iterations 5 --out " +
                (dir_ / "lf").string())
                .code,
            0);
  LayerConfig cfg;
  cfg.lambda = 0.2;
  cfg.iterations = 5;
  const LayerOutput ref = vptv_forward(o, cfg);
  EXPECT_EQ(to_feature(read_tensors(dir_ / "lf" / "u.vptv").at(0)).values, ref.u.u);

  FeatureTensor g{2, 3, Matrix(2, 6, 0.0)};
  g.values(0, 1) = 1.0;
  write_tensors(dir_ / "g.vptv", {to_tensor(g)});
  ASSERT_EQ(run("layer backward --cache " + (dir_ / "lf" / "cache.vptv").string() + " --grad " +
                (dir_ / "g.vptv").string() + " --out " + (dir_ / "go.vptv").string())
                .code,
            0);
  EXPECT_EQ(to_feature(read_tensors(dir_ / "go.vptv").at(0)).values,
            vptv_backward(g, ref.cache, cfg).values);
  EXPECT_EQ(run("layer backward --cache " + (dir_ / "lf" / "cache.vptv").string() + " --grad " +
                (dir_ / "g.vptv").string() + " --eps 0.5 --out " + (dir_ / "x.vptv").string())
                .code,
            1);
}
