#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "algaeid/formats.hpp"
#include "support.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(ALGAEID_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
  const auto dir = testing_support::scratch_dir("cli_help");
  EXPECT_EQ(run("--help", dir / "h.log"), 0);
  EXPECT_NE(slurp(dir / "h.log").find("pipeline"), std::string::npos);
  EXPECT_EQ(run("pipeline --help", dir / "p.log"), 0);
  EXPECT_NE(slurp(dir / "p.log").find("svm.C"), std::string::npos);
  EXPECT_EQ(run("pipeline --synth 2 --set no.such.key=1 --out " + (dir / "o").string(), dir / "k.log"), 1);
  EXPECT_EQ(run("pipeline --synth 2 --C -1 --out " + (dir / "o").string(), dir / "c.log"), 1);
  EXPECT_EQ(run("frobnicate", dir / "f.log"), 1);
  EXPECT_EQ(run("pipeline --in " + (dir / "absent.csv").string() + " --out " + (dir / "o").string(), dir / "m.log"), 2);
  EXPECT_FALSE(slurp(dir / "m.log").empty());
}

TEST(Cli, PipelineReport) {
  const auto dir = testing_support::scratch_dir("cli_pipe");
  const fs::path out = dir / "run";
  ASSERT_EQ(run("pipeline --synth 6 --seed 2 --k 3 --no-grid --out " + out.string(), dir / "run.log"), 0)
      << slurp(dir / "run.log");
  for (const char* f : {"report.json", "hoover.csv", "model.bin", "counts.csv"}) EXPECT_TRUE(fs::exists(out / f)) << f;
  const auto report = nlohmann::json::parse(slurp(out / "report.json"));
  for (const char* k : {"format_version", "timestamp", "seed", "config", "input", "segmentation", "classifier",
                        "classification", "mean_accuracy", "std_accuracy"}) {
    EXPECT_TRUE(report.contains(k)) << k;
  }
  EXPECT_EQ(report["seed"], 2);
  EXPECT_EQ(report["input"]["frames"], 24);
  EXPECT_EQ(report["classification"]["k"], 3);
  EXPECT_TRUE(report["selection"].is_null());
  const std::string counts = slurp(out / "counts.csv");
  EXPECT_EQ(counts.rfind("source,cells_1,cells_2,cells_4,cells_8,failed,total\n", 0), 0u);
}

TEST(Cli, StageByStage) {
  const auto dir = testing_support::scratch_dir("cli_chain");
  const std::string d = dir.string();
  ASSERT_EQ(run("synth --per-class 6 --seed 4 --out " + d + "/corpus", dir / "1.log"), 0) << slurp(dir / "1.log");
  ASSERT_TRUE(fs::exists(dir / "corpus/manifest.csv"));
  ASSERT_EQ(run("segment --in " + d + "/corpus/manifest.csv --out " + d + "/patches", dir / "2.log"), 0)
      << slurp(dir / "2.log");
  ASSERT_TRUE(fs::exists(dir / "patches/patches.csv"));
  ASSERT_EQ(run("features --patches " + d + "/patches --out " + d + "/features.csv", dir / "3.log"), 0)
      << slurp(dir / "3.log");
  const auto rows = algaeid::read_features_csv(dir / "features.csv");
  EXPECT_GE(rows.size(), 20u);
  ASSERT_EQ(run("select --features " + d + "/features.csv --folds 3 --out " + d + "/ranking.json", dir / "4.log"), 0)
      << slurp(dir / "4.log");
  const auto ranking = algaeid::ranking_from_json(algaeid::read_json(dir / "ranking.json"));
  EXPECT_EQ(ranking.first.order.size(), 215u);
  ASSERT_EQ(run("train --features " + d + "/features.csv --ranking " + d + "/ranking.json --model svm --no-grid --out " +
                    d + "/model.bin",
                dir / "5.log"),
            0)
      << slurp(dir / "5.log");
  EXPECT_TRUE(fs::exists(dir / "model.bin"));
  ASSERT_EQ(run("evaluate --features " + d + "/features.csv --ranking " + d + "/ranking.json --k 3 --out " + d +
                    "/eval.json",
                dir / "6.log"),
            0)
      << slurp(dir / "6.log");
  const auto eval = nlohmann::json::parse(slurp(dir / "eval.json"));
  EXPECT_EQ(eval["classification"]["fold_accuracies"].size(), 3u);

  std::ofstream(dir / "junk.bin") << "junk";
  EXPECT_EQ(run("timing --synth 8 --model " + d + "/junk.bin", dir / "7.log"), 2);
}

TEST(Cli, TimingNeedsThirtyPatches) {
  const auto dir = testing_support::scratch_dir("cli_timing");
  EXPECT_EQ(run("timing --synth 2", dir / "t.log"), 2);
  EXPECT_NE(slurp(dir / "t.log").find("TooFewPatches"), std::string::npos);
}
