#pragma once

#include "lt3lssl/data/profile.hpp"

#include <torch/torch.h>

#include <cstdint>

namespace lt3lssl::models {

// Two affine layers with a rectifier in between.
struct ProjectorSpec {
  std::int64_t input_dim = 64;
  std::int64_t hidden_dim = 2048;
  std::int64_t output_dim = 128;
};

class ProjectorImpl : public torch::nn::Module {
 public:
  explicit ProjectorImpl(const ProjectorSpec& spec);
  torch::Tensor forward(const torch::Tensor& pooled);
  const ProjectorSpec& spec() const { return spec_; }

  torch::nn::Linear fc1{nullptr};
  torch::nn::Linear fc2{nullptr};

 private:
  ProjectorSpec spec_;
};
TORCH_MODULE(Projector);

// Raw (not normalized) embedding of pooled features [B, d] or [d].
torch::Tensor project(Projector& projector, const torch::Tensor& pooled);

// Linear classifier W with shape [C, d] and an optional bias.
class ClassifierImpl : public torch::nn::Module {
 public:
  ClassifierImpl(std::int64_t feature_dim, std::int64_t num_classes, bool bias = true);
  torch::Tensor forward(const torch::Tensor& pooled);
  const torch::Tensor& weight() const { return fc->weight; }
  std::int64_t num_classes() const { return num_classes_; }
  std::int64_t feature_dim() const { return feature_dim_; }

  torch::nn::Linear fc{nullptr};

 private:
  std::int64_t feature_dim_;
  std::int64_t num_classes_;
};
TORCH_MODULE(Classifier);

// logits = W * pooled (+ bias) for [B, d] or [d] inputs.
torch::Tensor classify(Classifier& classifier, const torch::Tensor& pooled);

// Adds ln(N_c / sum_j N_j) to every logit. Used for the training-time
// classification loss only; predictions use raw logits.
torch::Tensor adjust_logits(const torch::Tensor& logits, const data::LongTailProfile& profile);

// The additive offsets themselves, float32 [C].
torch::Tensor log_prior(const data::LongTailProfile& profile);

}  // namespace lt3lssl::models
