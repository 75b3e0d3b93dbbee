#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <span>
#include <vector>

namespace lt3lssl::data {

// A labeled batch of images held as one float tensor [N, C, H, W] in [0, 1].
// sample_ids are stable identifiers used to derive per-sample randomness.
struct LabeledImageSet {
  torch::Tensor images;
  std::vector<std::int64_t> labels;
  std::vector<std::int64_t> sample_ids;

  std::int64_t size() const { return static_cast<std::int64_t>(labels.size()); }
  bool empty() const { return labels.empty(); }
  std::int64_t channels() const { return images.size(1); }
  std::int64_t height() const { return images.size(2); }
  std::int64_t width() const { return images.size(3); }

  // Number of samples per class for classes [0, num_classes).
  std::vector<std::int64_t> class_counts(std::int64_t num_classes) const;
  std::int64_t max_label() const;

  // Rows `indices`, in the given order.
  LabeledImageSet select(std::span<const std::int64_t> indices) const;

  // Throws InvalidArgument unless images/labels/ids agree in length and the
  // tensor is a 4-d float tensor.
  void validate() const;
};

// Concatenates sets with identical image geometry.
LabeledImageSet concat(const std::vector<LabeledImageSet>& parts);

}  // namespace lt3lssl::data
