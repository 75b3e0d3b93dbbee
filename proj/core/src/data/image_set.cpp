#include "lt3lssl/data/image_set.hpp"

#include "lt3lssl/common/error.hpp"

#include <algorithm>
#include <string>

namespace lt3lssl::data {

std::vector<std::int64_t> LabeledImageSet::class_counts(std::int64_t num_classes) const {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (auto y : labels) {
    if (y >= 0 && y < num_classes) ++counts[static_cast<std::size_t>(y)];
  }
  return counts;
}

std::int64_t LabeledImageSet::max_label() const {
  return labels.empty() ? -1 : *std::max_element(labels.begin(), labels.end());
}

LabeledImageSet LabeledImageSet::select(std::span<const std::int64_t> indices) const {
  LabeledImageSet out;
  std::vector<std::int64_t> idx(indices.begin(), indices.end());
  out.images = images.index_select(0, torch::tensor(idx, torch::kInt64)).contiguous();
  out.labels.reserve(idx.size());
  out.sample_ids.reserve(idx.size());
  for (auto i : idx) {
    out.labels.push_back(labels.at(static_cast<std::size_t>(i)));
    out.sample_ids.push_back(sample_ids.at(static_cast<std::size_t>(i)));
  }
  return out;
}

void LabeledImageSet::validate() const {
  if (!images.defined() || images.dim() != 4) throw InvalidArgument("images must be a 4-d tensor [N,C,H,W]");
  if (images.scalar_type() != torch::kFloat32) throw InvalidArgument("images must be float32");
  if (images.size(0) != size() || sample_ids.size() != labels.size()) {
    throw InvalidArgument("image/label/id counts disagree: " + std::to_string(images.size(0)) + "/" +
                          std::to_string(labels.size()) + "/" + std::to_string(sample_ids.size()));
  }
}

LabeledImageSet concat(const std::vector<LabeledImageSet>& parts) {
  if (parts.empty()) throw InvalidArgument("concat of zero sets");
  std::vector<torch::Tensor> tensors;
  LabeledImageSet out;
  for (const auto& p : parts) {
    if (p.images.sizes().slice(1) != parts.front().images.sizes().slice(1)) {
      throw InvalidArgument("concat: image geometry differs between parts");
    }
    tensors.push_back(p.images);
    out.labels.insert(out.labels.end(), p.labels.begin(), p.labels.end());
    out.sample_ids.insert(out.sample_ids.end(), p.sample_ids.begin(), p.sample_ids.end());
  }
  out.images = torch::cat(tensors, 0);
  return out;
}

}  // namespace lt3lssl::data
