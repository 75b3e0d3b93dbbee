#pragma once

#include "lt3lssl/common/seed.hpp"
#include "lt3lssl/data/image_set.hpp"

#include <torch/torch.h>

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace lt3lssl::data {

namespace transforms {

struct Identity {};

// Crop a random region with area fraction in [scale_min, scale_max] and aspect
// ratio in [ratio_min, ratio_max], then resize back (bilinear).
struct RandomResizedCrop {
  double scale_min = 0.2;
  double scale_max = 1.0;
  double ratio_min = 3.0 / 4.0;
  double ratio_max = 4.0 / 3.0;
};

// Zero-pad by `pad` pixels and crop back to the original size at a random
// offset.
struct PadCrop {
  std::int64_t pad = 4;
};

struct HorizontalFlip {
  double p = 0.5;
};

struct ColorJitter {
  double p = 0.8;
  double brightness = 0.4;
  double contrast = 0.4;
  double saturation = 0.4;
  double hue = 0.1;
};

struct Grayscale {
  double p = 0.2;
};

struct GaussianBlur {
  double p = 0.5;
  double sigma_min = 0.1;
  double sigma_max = 2.0;
};

}  // namespace transforms

using Transform = std::variant<transforms::Identity, transforms::RandomResizedCrop, transforms::PadCrop,
                               transforms::HorizontalFlip, transforms::ColorJitter, transforms::Grayscale,
                               transforms::GaussianBlur>;

// Ordered list of stochastic transforms. Every transform keeps the image
// shape and keeps values in [0, 1].
//
// Text form, comma separated, parameters after colons:
//   identity | rrc:smin:smax | pad_crop:pad | hflip:p |
//   jitter:p:brightness:contrast:saturation:hue | gray:p | blur:p:smin:smax
class AugmentationPipeline {
 public:
  AugmentationPipeline() = default;
  explicit AugmentationPipeline(std::vector<Transform> steps) : steps_(std::move(steps)) {}

  // Random resized crop, flip, color jitter, grayscale and blur.
  static AugmentationPipeline moco_v2();
  // Pad-crop, flip, color jitter and grayscale; suited to 32-pixel images.
  static AugmentationPipeline cifar();
  static AugmentationPipeline identity();

  // Throws InvalidArgument on unknown transform names or bad parameters.
  static AugmentationPipeline parse(std::string_view text);
  std::string to_string() const;

  const std::vector<Transform>& steps() const { return steps_; }

  // image: [C, H, W] float in [0, 1]. Returns a new tensor.
  torch::Tensor apply(const torch::Tensor& image, Rng& rng) const;

 private:
  std::vector<Transform> steps_;
};

// Two independent draws from the same pipeline.
std::pair<torch::Tensor, torch::Tensor> two_view_augment(const torch::Tensor& image,
                                                         const AugmentationPipeline& pipeline,
                                                         std::uint64_t seed);

struct TwoViewBatch {
  torch::Tensor x;        // query views [B, C, H, W]
  torch::Tensor x_prime;  // key views   [B, C, H, W]
  torch::Tensor labels;   // int64 [B]
  std::vector<std::int64_t> sample_ids;

  std::int64_t size() const { return x.size(0); }
};

// Views of the samples at `indices`. The randomness of sample i depends only
// on (seed, epoch, sample_ids[i]), so the batch is independent of worker
// scheduling.
TwoViewBatch make_two_view_batch(const LabeledImageSet& data, std::span<const std::int64_t> indices,
                                 const AugmentationPipeline& pipeline, std::uint64_t seed,
                                 std::int64_t epoch);

}  // namespace lt3lssl::data
