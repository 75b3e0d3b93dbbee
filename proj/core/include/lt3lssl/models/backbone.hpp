#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <memory>
#include <string>

namespace lt3lssl::models {

// Last convolutional activations and their global average pool.
struct BackboneOutput {
  torch::Tensor feature_map;  // [B, d, h, w]
  torch::Tensor pooled;       // [B, d]
};

// Convolutional encoder contract. Implementations return the final feature
// map before pooling so class activation maps can be computed from it.
class Backbone : public torch::nn::Module {
 public:
  virtual BackboneOutput forward(const torch::Tensor& images) = 0;
  virtual std::int64_t feature_dim() const = 0;
  virtual std::int64_t in_channels() const { return 3; }
};

// Name-based construction. Known names:
//   resnet32           CIFAR ResNet, 3 stages x 5 basic blocks, widths 16/32/64
//   resnet<6n+2>       CIFAR ResNet with n blocks per stage (resnet8, resnet20, ...)
//   resnet50           ImageNet bottleneck ResNet-50, d = 2048
//   linear             1x1 convolution "stub", d = width
// `width` scales the CIFAR ResNet base width (16 by default) and sets d of
// the linear stub; ResNet-50 ignores it.
struct BackboneSpec {
  std::string name = "resnet32";
  std::int64_t width = 16;
};

std::shared_ptr<Backbone> make_backbone(const BackboneSpec& spec);

// Checks the input shape and runs the encoder.
BackboneOutput forward_encode(Backbone& backbone, const torch::Tensor& images);

}  // namespace lt3lssl::models
