#pragma once

#include "lt3lssl/data/augment.hpp"
#include "lt3lssl/data/catalog.hpp"
#include "lt3lssl/eval/report.hpp"
#include "lt3lssl/models/checkpoint.hpp"
#include "lt3lssl/models/model.hpp"
#include "lt3lssl/ssl/losses.hpp"
#include "lt3lssl/ssl/queue.hpp"
#include "lt3lssl/train/config.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace lt3lssl::train {

struct TrainState {
  TrainConfig cfg;
  data::LongTailProfile profile;
  models::ModelBundle model;
  ssl::AugmentedQueue queue;
  // Key queue for the InfoNCE baseline, seeded with random unit vectors.
  std::optional<ssl::AugmentedQueue> keys;
  std::unique_ptr<torch::optim::SGD> optimizer;
  std::int64_t step = 0;
  std::int64_t epoch = 0;
  std::int64_t total_steps = 0;

  // `cfg.model.num_classes` is taken from the profile.
  static TrainState create(const TrainConfig& cfg, const data::LongTailProfile& profile,
                           std::int64_t steps_per_epoch);

  // Linear warm-up followed by cosine decay to 0 at total_steps.
  double lr_at(std::int64_t step) const;
};

// Loss terms of one batch as graph-connected tensors, before any update.
struct StepLosses {
  torch::Tensor sim1, sim2, sim3, cls;  // scalars; disabled terms are constant 0
  torch::Tensor total;
  torch::Tensor key_embeddings;  // normalized momentum embeddings of x' [B, e], or undefined
  std::vector<std::int64_t> queue_labels;  // label each key embedding is stored under
  ssl::LossBreakdown breakdown() const;
};

// Forward passes and losses only; mutates nothing except batch-norm running
// statistics of the modules it runs.
StepLosses compute_losses(TrainState& state, const data::TwoViewBatch& batch);

// One optimization step: losses, backward, momentum update of the momentum
// encoder/projector from the pre-step online parameters, optimizer step,
// queue push. Throws NumericError on a non-finite loss before any update.
ssl::LossBreakdown train_step(TrainState& state, const data::TwoViewBatch& batch);

struct EpochRecord {
  std::int64_t epoch = 0;
  ssl::LossBreakdown loss;
  std::optional<eval::EvalReport> probe;
  std::map<std::string, double> variant_acc;  // mnist-cifar-lt probe variants
};

struct TrainResult {
  std::filesystem::path out_dir;
  std::filesystem::path checkpoint;
  std::filesystem::path metrics;
  std::optional<std::filesystem::path> queue_csv;
  std::vector<EpochRecord> history;
  std::map<std::string, eval::EvalReport> test;  // keyed by variant name
  models::Checkpoint final_state;
};

struct TrainHooks {
  std::function<void(const EpochRecord&)> on_epoch;
};

// Writes config.ini, profile.csv, metrics.jsonl (one line per epoch),
// checkpoint.bin, report.csv and, with A-SSL, queue.csv +
// queue_embeddings.bin to cfg.out_dir. On a non-finite loss a nan_dump.json is written first.
TrainResult run_training(const TrainConfig& cfg, const TrainHooks& hooks = {});
TrainResult run_training(const TrainConfig& cfg, const data::DatasetBundle& bundle, const TrainHooks& hooks = {});

// Test-set reports of a model: {full, mnist_only, cifar_only} for the
// concatenated dataset, {full} otherwise. Variants are seeded by data.seed.
std::map<std::string, eval::EvalReport> evaluate_bundle(models::ModelBundle& model, const data::DatasetBundle& bundle);

std::string metrics_json_line(const EpochRecord& record);

}  // namespace lt3lssl::train
