#pragma once

#include "lt3lssl/data/groups.hpp"
#include "lt3lssl/data/image_set.hpp"
#include "lt3lssl/data/mnist_cifar.hpp"
#include "lt3lssl/data/profile.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace lt3lssl::data {

// Names: "mnist-cifar-lt", "cifar10-lt", "cifar100-lt", "manifest".
struct DatasetSpec {
  std::string name = "cifar10-lt";
  double beta = 100.0;
  std::int64_t n_max = 0;           // 0: 5000 for 10-class sets, 500 for cifar100-lt
  std::string source = "auto";      // auto | real | synthetic
  std::int64_t test_per_class = 0;  // 0: every real test image (800 for mnist-cifar-lt), 100 synthetic
  std::int64_t probe_per_class = 20;
  bool oracle = false;              // mnist-cifar-lt only: train on randomized digit halves
  FillPolicy fill = FillPolicy::kUniformNoise;
  std::string groups = "auto";      // auto | thresholds | fixed343
  std::string manifest;             // train manifest CSV for name == "manifest"
  std::string test_manifest;
  std::uint64_t seed = 0;
};

struct DatasetBundle {
  DatasetSpec spec;
  std::int64_t num_classes = 0;
  LongTailProfile profile;
  LabeledImageSet train;
  LabeledImageSet test;  // balanced; the "full" variant for mnist-cifar-lt
  GroupSplit groups;
  bool synthetic = false;
  bool concat = false;  // 3x64x32 digit-over-object samples
};

std::int64_t default_n_max(const std::string& name);

// Builds the training and test sets described by `spec`. With source "auto",
// real files under `data_root` are used when present and procedural
// stand-ins otherwise; "real" throws DataError when files are missing.
DatasetBundle load_dataset(const DatasetSpec& spec, const std::optional<std::filesystem::path>& data_root);

}  // namespace lt3lssl::data
