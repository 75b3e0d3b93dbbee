#include "fixtures.hpp"

#include "cli.hpp"

#include "lt3lssl/data/profile.hpp"
#include "lt3lssl/train/config.hpp"

#include <gtest/gtest.h>

#include <fstream>

using namespace lt3lssl;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "lt3lssl");
  return cli::run(args);
}

// Small synthetic setup that trains in well under a second.
fs::path write_tiny_config(const fs::path& dir) {
  train::TrainConfig cfg;
  cfg.data.name = "cifar10-lt";
  cfg.data.source = "synthetic";
  cfg.data.n_max = 12;
  cfg.data.beta = 4.0;
  cfg.data.test_per_class = 2;
  cfg.data.probe_per_class = 0;
  cfg.model.backbone = {"linear", 6};
  cfg.model.projector_hidden = 8;
  cfg.model.embedding_dim = 4;
  cfg.queue_capacity = 16;
  cfg.optim.batch_size = 16;
  cfg.optim.epochs = 1;
  cfg.finetune.epochs = 1;
  cfg.augment = "cifar";
  const auto path = dir / "tiny.ini";
  train::write_config(path, cfg);
  return path;
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

}  // namespace

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run({}), cli::kExitUsage);
  EXPECT_EQ(run({"bogus"}), cli::kExitUsage);
  EXPECT_EQ(run({"train", "--seed", "1"}), cli::kExitUsage);  // --out missing
  EXPECT_EQ(run({"train", "--out", "x", "--stages", "7"}), cli::kExitUsage);
  EXPECT_EQ(run({"train", "--out", "x", "--set", "optim.speed=1"}), cli::kExitUsage);
  EXPECT_EQ(run({"train", "--out", "x", "--set", "ssl.losses=h,a"}), cli::kExitUsage);
}

TEST(Cli, MissingRequiredFlagLeavesNoOutputs) {
  test_support::TempDir dir("cli_missing");
  EXPECT_EQ(run({"viz", "curves", "--out", (dir / "curves").string()}), cli::kExitUsage);
  EXPECT_FALSE(fs::exists(dir / "curves"));
}

TEST(Cli, RuntimeErrorsExitTwo) {
  test_support::TempDir dir("cli_runtime");
  {
    std::ofstream out(dir / "bad.bin");
    out << "garbage";
  }
  EXPECT_EQ(run({"eval", "--checkpoint", (dir / "bad.bin").string(), "--out", (dir / "e").string()}),
            cli::kExitRuntime);
}

TEST(Cli, BuildDataWritesManifestAndProfile) {
  test_support::TempDir dir("cli_build");
  const auto out = dir / "d";
  ASSERT_EQ(run({"build-data", "--dataset", "mnist-cifar-lt", "--beta", "100", "--seed", "0", "--set",
                 "data.n_max=100", "--set", "data.source=synthetic", "--set", "data.test_per_class=1", "--out",
                 out.string()}),
            cli::kExitOk);
  const auto profile = data::read_profile_csv(out / "profile.csv");
  EXPECT_EQ(profile.counts.front(), 100);
  EXPECT_EQ(profile.counts.back(), 1);
  EXPECT_TRUE(fs::exists(out / "train.csv"));
  EXPECT_TRUE(fs::exists(out / "test.csv"));
  EXPECT_EQ(line_count(out / "train.csv"), static_cast<std::size_t>(profile.total() + 1));
}

TEST(Cli, TrainFinetuneEvalAndViz) {
  test_support::TempDir dir("cli_pipeline");
  const auto cfg = write_tiny_config(dir.path()).string();
  const auto run_dir = dir / "run";
  ASSERT_EQ(run({"train", "--config", cfg, "--out", run_dir.string()}), cli::kExitOk);
  const auto ckpt = (run_dir / "checkpoint.bin").string();
  EXPECT_TRUE(fs::exists(run_dir / "metrics.jsonl"));
  EXPECT_TRUE(fs::exists(run_dir / "queue.csv"));

  EXPECT_EQ(run({"finetune", "--checkpoint", ckpt, "--out", (dir / "ft").string()}), cli::kExitOk);
  EXPECT_TRUE(fs::exists(dir / "ft" / "report_finetuned.csv"));
  EXPECT_EQ(run({"eval", "--checkpoint", ckpt, "--out", (dir / "ev").string()}), cli::kExitOk);
  EXPECT_EQ(line_count(dir / "ev" / "eval.csv"), 2u);

  EXPECT_EQ(run({"viz", "curves", "--metrics", (run_dir / "metrics.jsonl").string(), "--out",
                 (dir / "curves").string()}),
            cli::kExitOk);
  EXPECT_EQ(run({"viz", "queue", "--snapshot", (run_dir / "queue.csv").string(), "--profile",
                 (run_dir / "profile.csv").string(), "--out", (dir / "queue").string()}),
            cli::kExitOk);
  EXPECT_TRUE(fs::exists(dir / "queue" / "queue_distribution.csv"));
  EXPECT_EQ(run({"viz", "cam", "--checkpoint", ckpt, "--from-test", "2", "--out", (dir / "cam").string()}),
            cli::kExitOk);
  EXPECT_TRUE(fs::exists(dir / "cam" / "manifest.json"));
  EXPECT_EQ(run({"viz", "embeddings", "--checkpoint", ckpt, "--out", (dir / "emb").string()}), cli::kExitOk);
  EXPECT_EQ(line_count(dir / "emb" / "embeddings.csv"), 21u);
}

TEST(Cli, AblateTable7WritesFiveRows) {
  test_support::TempDir dir("cli_ablate");
  const auto cfg = write_tiny_config(dir.path()).string();
  ASSERT_EQ(run({"ablate", "--matrix", "table7", "--config", cfg, "--out", (dir / "abl").string()}), cli::kExitOk);
  fs::path csv;
  for (const auto& e : fs::directory_iterator(dir / "abl"))
    if (e.path().extension() == ".csv") csv = e.path();
  ASSERT_FALSE(csv.empty());
  EXPECT_EQ(line_count(csv), 6u);
}
