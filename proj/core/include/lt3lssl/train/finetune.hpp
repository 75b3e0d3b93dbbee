#pragma once

#include "lt3lssl/common/seed.hpp"
#include "lt3lssl/data/image_set.hpp"
#include "lt3lssl/models/checkpoint.hpp"
#include "lt3lssl/train/config.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace lt3lssl::train {

// Draws a class uniformly among classes with samples, then a sample
// uniformly within it.
class ClassBalancedSampler {
 public:
  ClassBalancedSampler(std::span<const std::int64_t> labels, std::int64_t num_classes);
  std::int64_t draw(Rng& rng) const;
  std::int64_t num_nonempty_classes() const { return static_cast<std::int64_t>(classes_.size()); }

 private:
  std::vector<std::vector<std::int64_t>> classes_;
};

// Retrains only the classifier on frozen pooled features (eval mode) with
// class-balanced batches and plain cross-entropy. Every other set in the
// checkpoint is carried over unchanged.
models::Checkpoint finetune_classifier_balanced(const models::Checkpoint& checkpoint,
                                                const data::LabeledImageSet& train_set, const TrainConfig& cfg);

}  // namespace lt3lssl::train
