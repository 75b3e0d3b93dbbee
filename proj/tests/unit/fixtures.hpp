#pragma once

#include "lt3lssl/data/image_set.hpp"

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

namespace lt3lssl::test_support {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 gen{std::random_device{}()};
    path_ = std::filesystem::temp_directory_path() / ("lt3lssl_" + tag + "_" + std::to_string(gen()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Images whose every pixel equals `value_of(label)`; `per_class` per label.
template <typename F>
data::LabeledImageSet constant_images(std::int64_t num_classes, std::int64_t per_class, std::int64_t channels,
                                      std::int64_t h, std::int64_t w, F value_of) {
  data::LabeledImageSet s;
  const auto n = num_classes * per_class;
  s.images = torch::empty({n, channels, h, w});
  for (std::int64_t i = 0; i < n; ++i) {
    const auto y = i % num_classes;
    s.images[i].fill_(value_of(y));
    s.labels.push_back(y);
    s.sample_ids.push_back(i);
  }
  return s;
}

}  // namespace lt3lssl::test_support
