#include "cli.hpp"

#include "lt3lssl/common/error.hpp"
#include "lt3lssl/data/catalog.hpp"
#include "lt3lssl/data/mnist_cifar.hpp"
#include "lt3lssl/data/sources.hpp"
#include "lt3lssl/eval/report.hpp"
#include "lt3lssl/eval/sb_probe.hpp"
#include "lt3lssl/models/checkpoint.hpp"
#include "lt3lssl/train/ablation.hpp"
#include "lt3lssl/train/config.hpp"
#include "lt3lssl/train/finetune.hpp"
#include "lt3lssl/train/trainer.hpp"
#include "lt3lssl/viz/exporters.hpp"

#include <CLI11.hpp>
#include <torch/torch.h>

#include <cstdio>
#include <iostream>
#include <optional>

namespace lt3lssl::cli {
namespace {

namespace fs = std::filesystem;

// Raised for bad user input discovered after CLI11 parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<double> beta;
  std::string dataset;
  std::optional<std::int64_t> stages;
  std::string queue_variant;
  std::vector<std::string> sets;

  void attach(CLI::App* app, bool out_required) {
    app->add_option("--config", config, "key = value config file")->check(CLI::ExistingFile);
    app->add_option("--seed", seed, "run and data seed");
    auto* o = app->add_option("--out", out, "output directory");
    if (out_required) o->required();
    app->add_option("--beta", beta, "imbalance ratio N_max/N_min");
    app->add_option("--dataset", dataset, "mnist-cifar-lt | cifar10-lt | cifar100-lt | manifest");
    app->add_option("--stages", stages, "masking stages")->check(CLI::Range(1, 3));
    app->add_option("--queue-variant", queue_variant, "single | cprime | ctruth")
        ->check(CLI::IsMember({"single", "cprime", "ctruth"}));
    app->add_option("--set", sets, "config override key=value (repeatable)");
  }

  train::TrainConfig resolve(const std::string& fallback_config = "") const {
    train::TrainConfig cfg;
    try {
      if (!config.empty()) cfg = train::read_config(config);
      else if (!fallback_config.empty() && fs::exists(fallback_config)) cfg = train::read_config(fallback_config);
      std::vector<std::pair<std::string, std::string>> kv;
      for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + s + "'");
        kv.emplace_back(s.substr(0, eq), s.substr(eq + 1));
      }
      train::apply_overrides(cfg, kv);
      if (seed) {
        cfg.seed = *seed;
        cfg.data.seed = *seed;
      }
      if (beta) cfg.data.beta = *beta;
      if (!dataset.empty()) cfg.data.name = dataset;
      if (stages) cfg.mask_stages = *stages;
      if (!queue_variant.empty()) cfg.queue_variant = train::parse_queue_variant(queue_variant);
      if (!out.empty()) cfg.out_dir = out;
      cfg.validate();
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
    return cfg;
  }
};

void print_epoch(const train::EpochRecord& r) {
  std::printf("epoch %3lld  total %.4f  cls %.4f  sim1 %.4f  sim2 %.4f  sim3 %.4f", static_cast<long long>(r.epoch),
              r.loss.total, r.loss.cls, r.loss.sim1, r.loss.sim2, r.loss.sim3);
  if (r.probe) std::printf("  probe %.2f", r.probe->acc_all);
  for (const auto& [k, v] : r.variant_acc) std::printf("  %s %.2f", k.c_str(), v);
  std::printf("\n");
  std::fflush(stdout);
}

void print_report(const std::string& name, const eval::EvalReport& r) {
  auto f = [](const std::optional<double>& v) { return v ? *v : -1.0; };
  std::printf("%-12s %-10s all %6.2f  many %6.2f  medium %6.2f  few %6.2f  (n=%lld)\n", name.c_str(),
              r.variant.c_str(), r.acc_all, f(r.acc_many), f(r.acc_medium), f(r.acc_few),
              static_cast<long long>(r.n_eval));
}

fs::path sibling_config(const std::string& checkpoint) { return fs::path(checkpoint).parent_path() / "config.ini"; }

int cmd_build_data(const CommonFlags& flags) {
  auto cfg = flags.resolve();
  auto bundle = data::load_dataset(cfg.data, data::data_root_from_env());
  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  data::write_profile_csv(out / "profile.csv", bundle.profile);
  data::write_manifest(out, bundle.train, "train");
  data::write_manifest(out, bundle.test, "test");
  if (bundle.concat) {
    const data::ConcatDataset test(bundle.test);
    for (auto v : {data::EvalVariant::kMnistOnly, data::EvalVariant::kCifarOnly}) {
      const auto name = std::string(data::variant_name(v));
      data::write_manifest(out, data::make_eval_variant(test, v, cfg.data.seed, cfg.data.fill).samples(),
                           "test_" + name);
    }
  }
  train::write_config(out / "config.ini", cfg);
  std::printf("%s: %lld train / %lld test samples%s -> %s\n", cfg.data.name.c_str(),
              static_cast<long long>(bundle.train.size()), static_cast<long long>(bundle.test.size()),
              bundle.synthetic ? " (procedural stand-in)" : "", out.string().c_str());
  return kExitOk;
}

int cmd_train(const CommonFlags& flags) {
  auto cfg = flags.resolve();
  auto result = train::run_training(cfg, {print_epoch});
  for (const auto& [name, r] : result.test) print_report("test", r);
  std::printf("checkpoint: %s\n", result.checkpoint.string().c_str());
  return kExitOk;
}

int cmd_finetune(const CommonFlags& flags, const std::string& checkpoint) {
  auto cfg = flags.resolve(sibling_config(checkpoint).string());
  auto ckpt = models::load_checkpoint(checkpoint);
  auto bundle = data::load_dataset(cfg.data, data::data_root_from_env());
  auto tuned = train::finetune_classifier_balanced(ckpt, bundle.train, cfg);
  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  models::save_checkpoint(out / "checkpoint_finetuned.bin", tuned);
  auto model = tuned.restore();
  std::vector<std::pair<std::string, eval::EvalReport>> rows;
  for (const auto& [name, r] : train::evaluate_bundle(model, bundle)) {
    print_report("finetuned", r);
    rows.emplace_back("finetuned", r);
  }
  eval::write_reports_csv(out / "report_finetuned.csv", rows);
  return kExitOk;
}

int cmd_eval(const CommonFlags& flags, const std::string& checkpoint, const std::string& variant) {
  auto cfg = flags.resolve(sibling_config(checkpoint).string());
  auto ckpt = models::load_checkpoint(checkpoint);
  auto bundle = data::load_dataset(cfg.data, data::data_root_from_env());
  auto model = ckpt.restore();
  auto reports = train::evaluate_bundle(model, bundle);
  std::vector<std::pair<std::string, eval::EvalReport>> rows;
  for (const auto& [name, r] : reports) {
    if (!variant.empty() && name != variant) continue;
    print_report("eval", r);
    rows.emplace_back("eval", r);
  }
  if (rows.empty()) throw UsageError("variant '" + variant + "' does not apply to " + cfg.data.name);
  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  eval::write_reports_csv(out / "eval.csv", rows);
  return kExitOk;
}

int cmd_probe(const CommonFlags& flags, bool no_oracle) {
  auto cfg = flags.resolve();
  if (cfg.data.name != "mnist-cifar-lt") {
    if (!flags.dataset.empty()) throw UsageError("probe-sb needs --dataset mnist-cifar-lt");
    cfg.data.name = "mnist-cifar-lt";
  }
  eval::ProbeOptions opts;
  opts.with_oracle = !no_oracle;
  opts.hooks.on_epoch = print_epoch;
  auto report = eval::sb_probe(cfg, opts);
  for (const auto& [name, r] : report.standard) print_report("standard", r);
  if (report.oracle) print_report("oracle", *report.oracle);
  if (report.gap) std::printf("gap (cifar_only - oracle): all %.2f\n", report.gap->all);
  std::printf("probe table: %s\n", (fs::path(cfg.out_dir) / "probe.csv").string().c_str());
  return kExitOk;
}

int cmd_ablate(const CommonFlags& flags, const std::string& matrix_name) {
  auto cfg = flags.resolve();
  std::vector<train::AblationEntry> matrix;
  try {
    matrix = train::ablation_matrix(matrix_name);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  const auto csv = fs::path(cfg.out_dir) / ("ablation_" + matrix_name + ".csv");
  fs::create_directories(cfg.out_dir);
  auto rows = train::run_ablation_suite(cfg, matrix, csv, {print_epoch});
  for (const auto& row : rows) print_report(row.entry.name, row.report);
  std::printf("table: %s\n", csv.string().c_str());
  return kExitOk;
}

void finish(const viz::ExportManifest& m) {
  m.check_complete();
  for (const auto& w : m.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  std::printf("%zu files written\n", m.files.size());
}

}  // namespace

int run(const std::vector<std::string>& args) {
  torch::set_num_threads(1);
  CLI::App app{"Long-tailed recognition with triple-level self-supervision", "lt3lssl"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  CommonFlags build_flags, train_flags, ft_flags, eval_flags, probe_flags, ablate_flags, emb_flags;
  std::string checkpoint, variant, matrix = "table7";
  bool no_oracle = false;

  auto* build = app.add_subcommand("build-data", "materialize a long-tailed dataset as PNG manifests");
  build_flags.attach(build, true);
  build->add_option("--variant", variant, "unused; accepted for symmetry")->check(
      CLI::IsMember({"full", "mnist_only", "cifar_only"}));

  auto* tr = app.add_subcommand("train", "train a model");
  train_flags.attach(tr, true);

  auto* ft = app.add_subcommand("finetune", "class-balanced classifier fine-tune on a frozen backbone");
  ft_flags.attach(ft, true);
  ft->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on the test set");
  eval_flags.attach(ev, true);
  ev->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  ev->add_option("--variant", variant)->check(CLI::IsMember({"full", "mnist_only", "cifar_only"}));

  auto* probe = app.add_subcommand("probe-sb", "simplicity-bias probe with the oracle control");
  probe_flags.attach(probe, true);
  probe->add_flag("--no-oracle", no_oracle, "skip the oracle model");

  auto* ab = app.add_subcommand("ablate", "train an ablation matrix");
  ablate_flags.attach(ab, true);
  ab->add_option("--matrix", matrix)->check(CLI::IsMember({"table7", "table8", "table9"}));

  auto* viz_cmd = app.add_subcommand("viz", "export figures");
  viz_cmd->require_subcommand(1);
  std::vector<std::string> images;
  std::string out, snapshot, profile_csv, metrics, projector;
  std::int64_t from_test = 0;
  auto* cam = viz_cmd->add_subcommand("cam", "activation heatmaps");
  cam->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  cam->add_option("--images", images, "PNG files");
  cam->add_option("--from-test", from_test, "use the first N test images of the checkpoint's config");
  cam->add_option("--out", out)->required();
  auto* queue = viz_cmd->add_subcommand("queue", "queue class distribution");
  queue->add_option("--snapshot", snapshot)->required()->check(CLI::ExistingFile);
  queue->add_option("--profile", profile_csv)->required()->check(CLI::ExistingFile);
  queue->add_option("--out", out)->required();
  auto* emb = viz_cmd->add_subcommand("embeddings", "pooled feature dump");
  emb->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  emb->add_option("--split", variant, "train | test")->check(CLI::IsMember({"train", "test"}));
  emb->add_option("--project", projector, "external 2-D projection command");
  emb_flags.attach(emb, true);
  auto* curves = viz_cmd->add_subcommand("curves", "learning curves");
  curves->add_option("--metrics", metrics)->required()->check(CLI::ExistingFile);
  curves->add_option("--out", out)->required();

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kExitUsage;
  }

  try {
    if (*build) return cmd_build_data(build_flags);
    if (*tr) return cmd_train(train_flags);
    if (*ft) return cmd_finetune(ft_flags, checkpoint);
    if (*ev) return cmd_eval(eval_flags, checkpoint, variant);
    if (*probe) return cmd_probe(probe_flags, no_oracle);
    if (*ab) return cmd_ablate(ablate_flags, matrix);
    if (*cam) {
      auto ckpt = models::load_checkpoint(checkpoint);
      auto model = ckpt.restore();
      if (!images.empty()) {
        std::vector<fs::path> paths(images.begin(), images.end());
        finish(viz::export_cam_heatmaps(model, paths, out));
      } else {
        if (from_test <= 0) throw UsageError("viz cam needs --images or --from-test N");
        auto cfg = train::read_config(sibling_config(checkpoint));
        auto bundle = data::load_dataset(cfg.data, data::data_root_from_env());
        std::vector<viz::CamItem> items;
        for (std::int64_t i = 0; i < std::min(from_test, bundle.test.size()); ++i)
          items.push_back({"test_" + std::to_string(bundle.test.sample_ids[static_cast<std::size_t>(i)]),
                           bundle.test.images[i], bundle.test.labels[static_cast<std::size_t>(i)]});
        finish(viz::export_cam_heatmaps(model, items, out));
      }
      return kExitOk;
    }
    if (*queue) {
      finish(viz::export_queue_distribution(snapshot, data::read_profile_csv(profile_csv), out));
      return kExitOk;
    }
    if (*emb) {
      auto cfg = emb_flags.resolve(sibling_config(checkpoint).string());
      auto ckpt = models::load_checkpoint(checkpoint);
      auto model = ckpt.restore();
      auto bundle = data::load_dataset(cfg.data, data::data_root_from_env());
      const auto& set = variant == "train" ? bundle.train : bundle.test;
      std::optional<std::string> hook;
      if (!projector.empty()) hook = projector;
      finish(viz::export_embeddings(model, set, cfg.out_dir, hook));
      return kExitOk;
    }
    if (*curves) {
      finish(viz::export_learning_curves(metrics, out));
      return kExitOk;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  std::cerr << app.help();
  return kExitUsage;
}

}  // namespace lt3lssl::cli
