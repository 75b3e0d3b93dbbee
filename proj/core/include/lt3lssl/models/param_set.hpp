#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace lt3lssl::models {

// Ordered, named view of a component's tensors. Entries alias the module's
// storage, so in-place updates act on the module.
class ParamSet {
 public:
  using Entry = std::pair<std::string, torch::Tensor>;

  ParamSet() = default;
  explicit ParamSet(std::vector<Entry> entries) : entries_(std::move(entries)) {}

  // Trainable parameters only.
  static ParamSet parameters_of(const torch::nn::Module& module);
  // Parameters followed by buffers (e.g. batch-norm running statistics).
  static ParamSet state_of(const torch::nn::Module& module);

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::int64_t numel() const;

  // Deep copy with fresh storage.
  ParamSet clone() const;
  // Throws InvalidArgument when names or shapes differ.
  void check_same_layout(const ParamSet& other) const;
  // Copies values from `src` into this set's storage.
  void copy_from(const ParamSet& src);
  // FNV-1a over names, shapes and raw bytes.
  std::uint64_t fingerprint() const;

 private:
  std::vector<Entry> entries_;
};

// theta_k <- alpha * theta_k + (1 - alpha) * theta_q, elementwise, in place.
void momentum_update(ParamSet& theta_k, const ParamSet& theta_q, double alpha);

}  // namespace lt3lssl::models
