#pragma once

#include "lt3lssl/data/catalog.hpp"
#include "lt3lssl/models/model.hpp"
#include "lt3lssl/ssl/losses.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace lt3lssl::train {

// Which queue entries form the augmented positive of a sample.
enum class QueueVariant {
  kSingle,  // most recent entry with pseudo-label c'
  kCPrime,  // mean of all entries with pseudo-label c'
  kCTruth,  // mean of all entries stored under ground-truth label c
};
std::string_view queue_variant_name(QueueVariant v);
QueueVariant parse_queue_variant(std::string_view name);

// k3lssl: the triple-level objective. kMoco: cross-entropy plus InfoNCE
// against a key queue; the InfoNCE term is reported in the holistic slot.
enum class TrainMode { k3lssl, kMoco };

struct OptimConfig {
  double lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::int64_t epochs = 200;
  std::int64_t batch_size = 128;
  std::int64_t warmup_epochs = 0;
};

struct FinetuneConfig {
  std::int64_t epochs = 10;
  double lr = 0.05;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::int64_t batch_size = 128;
};

struct TrainConfig {
  data::DatasetSpec data;
  models::ModelSpec model;
  // sim1 = H-SSL, sim2 = P-SSL, sim3 = A-SSL, cls = CE.
  ssl::LossSwitches losses;
  TrainMode mode = TrainMode::k3lssl;
  std::int64_t queue_capacity = 1024;
  QueueVariant queue_variant = QueueVariant::kCPrime;
  std::int64_t mask_stages = 1;
  bool cam_predicted = false;  // CAM of the predicted instead of the true class
  double alpha = 0.999;
  bool logit_adjust = true;
  double temperature = 0.2;
  std::int64_t moco_queue = 4096;
  std::string augment = "moco_v2";
  OptimConfig optim;
  FinetuneConfig finetune;
  std::int64_t probe_every = 1;
  std::uint64_t seed = 0;
  std::string out_dir = "runs/default";

  // Throws InvalidArgument when the configuration is inconsistent.
  void validate() const;
  // Stable hash of every field except out_dir.
  std::uint64_t hash() const;
  // Canonical `[section]` / `key = value` text.
  std::string to_ini() const;
};

// Dotted keys `section.name` (e.g. `optim.lr`, `ssl.losses`); see config.cpp
// for the table. Throws InvalidArgument for unknown keys or unparsable values.
void set_config_value(TrainConfig& cfg, const std::string& key, const std::string& value);
std::string get_config_value(const TrainConfig& cfg, const std::string& key);
std::vector<std::string> config_keys();

TrainConfig parse_config(const std::string& ini_text);
TrainConfig read_config(const std::filesystem::path& path);
void write_config(const std::filesystem::path& path, const TrainConfig& cfg);
void apply_overrides(TrainConfig& cfg, const std::vector<std::pair<std::string, std::string>>& overrides);

// "ce,h,p,a" in any order; "none" disables every term.
ssl::LossSwitches parse_losses(std::string_view text);
std::string losses_to_string(const ssl::LossSwitches& s);

}  // namespace lt3lssl::train
