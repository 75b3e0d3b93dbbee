#pragma once

#include "lt3lssl/data/image_set.hpp"
#include "lt3lssl/data/profile.hpp"

#include <array>
#include <cstdint>
#include <string_view>

namespace lt3lssl::data {

// Digit/object class pairing of the concatenated dataset: digit d is joined
// with object class d.
inline constexpr std::array<std::string_view, 10> kJointClassNames = {
    "0-airplane", "1-automobile", "2-bird", "3-cat", "4-deer",
    "5-dog",      "6-frog",       "7-horse", "8-ship", "9-truck"};

// A set of 3x64x32 samples: rows [0, 32) hold the channel-replicated digit,
// rows [32, 64) the object image.
class ConcatDataset {
 public:
  static constexpr std::int64_t kChannels = 3;
  static constexpr std::int64_t kHeight = 64;
  static constexpr std::int64_t kWidth = 32;
  static constexpr std::int64_t kPartBoundary = 32;

  ConcatDataset() = default;
  // Throws InvalidArgument when the geometry is not 3x64x32.
  explicit ConcatDataset(LabeledImageSet samples);

  const LabeledImageSet& samples() const { return samples_; }
  std::int64_t size() const { return samples_.size(); }

 private:
  LabeledImageSet samples_;
};

// Pairs digits with objects class by class. Digits are 28x28 (zero-padded by
// two pixels) or already 32x32, one or three channels; objects are 3x32x32.
ConcatDataset build_mnist_cifar_lt(const LabeledImageSet& digits, const LabeledImageSet& objects,
                                   const LongTailProfile& profile, std::uint64_t seed);

enum class EvalVariant { kFull, kMnistOnly, kCifarOnly };

std::string_view variant_name(EvalVariant v);
// Throws InvalidArgument for unknown names.
EvalVariant parse_variant(std::string_view name);

enum class FillPolicy { kUniformNoise, kZero };

// full: identity. mnist_only: object half replaced. cifar_only: digit half
// replaced. Noise depends only on (seed, sample_id).
ConcatDataset make_eval_variant(const ConcatDataset& dataset, EvalVariant variant, std::uint64_t seed,
                                FillPolicy fill = FillPolicy::kUniformNoise);

// Digit half of every sample replaced by per-sample uniform noise.
ConcatDataset make_oracle_train(const ConcatDataset& dataset, std::uint64_t seed);

}  // namespace lt3lssl::data
