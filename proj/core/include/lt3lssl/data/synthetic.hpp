#pragma once

#include "lt3lssl/data/image_set.hpp"

#include <cstdint>

namespace lt3lssl::data {

// Procedural stand-ins for the digit and object sources, used when the real
// datasets are not available locally. The digit images are a fixed glyph per
// class with small jitter (a simple, near-linearly separable cue); the object
// images combine a shape, a fill texture and a hue family over a cluttered,
// noisy background (a cue that needs many samples to learn).

struct SyntheticDigitOptions {
  double noise = 0.05;
};

// 1x28x28 images, labels 0..9, per_class samples each.
LabeledImageSet synthetic_digits(std::int64_t per_class, std::uint64_t seed,
                                 const SyntheticDigitOptions& options = {});

struct SyntheticObjectOptions {
  std::int64_t distractors = 2;
  double noise = 0.08;
  double min_size = 12.0;
  double max_size = 22.0;
};

// 3x32x32 images, labels 0..num_classes-1 (num_classes <= 100).
LabeledImageSet synthetic_objects(std::int64_t num_classes, std::int64_t per_class, std::uint64_t seed,
                                  const SyntheticObjectOptions& options = {});

}  // namespace lt3lssl::data
