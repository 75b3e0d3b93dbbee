#include "lt3lssl/models/backbone.hpp"

#include "lt3lssl/common/error.hpp"

#include <regex>
#include <string>
#include <vector>

namespace lt3lssl::models {

namespace {

namespace nn = torch::nn;

nn::Conv2d conv3x3(std::int64_t in, std::int64_t out, std::int64_t stride) {
  return nn::Conv2d(nn::Conv2dOptions(in, out, 3).stride(stride).padding(1).bias(false));
}

nn::Conv2d conv1x1(std::int64_t in, std::int64_t out, std::int64_t stride) {
  return nn::Conv2d(nn::Conv2dOptions(in, out, 1).stride(stride).bias(false));
}

void kaiming_init(nn::Module& module) {
  for (auto& m : module.modules(/*include_self=*/false)) {
    if (auto* conv = m->as<nn::Conv2d>()) {
      nn::init::kaiming_normal_(conv->weight, 0.0, torch::kFanOut, torch::kReLU);
    } else if (auto* bn = m->as<nn::BatchNorm2d>()) {
      nn::init::ones_(bn->weight);
      nn::init::zeros_(bn->bias);
    }
  }
}

class BasicBlockImpl : public nn::Module {
 public:
  BasicBlockImpl(std::int64_t in, std::int64_t out, std::int64_t stride)
      : conv1(register_module("conv1", conv3x3(in, out, stride))),
        bn1(register_module("bn1", nn::BatchNorm2d(out))),
        conv2(register_module("conv2", conv3x3(out, out, 1))),
        bn2(register_module("bn2", nn::BatchNorm2d(out))) {
    if (stride != 1 || in != out) {
      shortcut_conv = register_module("shortcut_conv", conv1x1(in, out, stride));
      shortcut_bn = register_module("shortcut_bn", nn::BatchNorm2d(out));
    }
  }

  torch::Tensor forward(const torch::Tensor& x) {
    auto y = torch::relu(bn1(conv1(x)));
    y = bn2(conv2(y));
    auto skip = shortcut_conv ? shortcut_bn(shortcut_conv(x)) : x;
    return torch::relu(y + skip);
  }

  nn::Conv2d conv1;
  nn::BatchNorm2d bn1;
  nn::Conv2d conv2;
  nn::BatchNorm2d bn2;
  nn::Conv2d shortcut_conv{nullptr};
  nn::BatchNorm2d shortcut_bn{nullptr};
};
TORCH_MODULE(BasicBlock);

// 3-stage residual network for 32-pixel inputs (He et al., CIFAR variant):
// output stride 4, d = 4 * width.
class CifarResNet : public Backbone {
 public:
  CifarResNet(std::int64_t blocks_per_stage, std::int64_t width)
      : stem_conv_(register_module("stem_conv", conv3x3(3, width, 1))),
        stem_bn_(register_module("stem_bn", nn::BatchNorm2d(width))),
        feature_dim_(4 * width) {
    std::int64_t in = width;
    const std::int64_t widths[] = {width, 2 * width, 4 * width};
    for (int stage = 0; stage < 3; ++stage) {
      for (std::int64_t b = 0; b < blocks_per_stage; ++b) {
        const std::int64_t stride = (b == 0 && stage > 0) ? 2 : 1;
        blocks_->push_back(BasicBlock(in, widths[stage], stride));
        in = widths[stage];
      }
    }
    register_module("blocks", blocks_);
    kaiming_init(*this);
  }

  BackboneOutput forward(const torch::Tensor& images) override {
    auto x = torch::relu(stem_bn_(stem_conv_(images)));
    for (auto& block : *blocks_) x = block->as<BasicBlock>()->forward(x);
    return {x, x.mean({2, 3})};
  }

  std::int64_t feature_dim() const override { return feature_dim_; }

 private:
  nn::Conv2d stem_conv_;
  nn::BatchNorm2d stem_bn_;
  nn::ModuleList blocks_;
  std::int64_t feature_dim_;
};

class BottleneckImpl : public nn::Module {
 public:
  static constexpr std::int64_t kExpansion = 4;

  BottleneckImpl(std::int64_t in, std::int64_t planes, std::int64_t stride)
      : conv1(register_module("conv1", conv1x1(in, planes, 1))),
        bn1(register_module("bn1", nn::BatchNorm2d(planes))),
        conv2(register_module("conv2", conv3x3(planes, planes, stride))),
        bn2(register_module("bn2", nn::BatchNorm2d(planes))),
        conv3(register_module("conv3", conv1x1(planes, planes * kExpansion, 1))),
        bn3(register_module("bn3", nn::BatchNorm2d(planes * kExpansion))) {
    if (stride != 1 || in != planes * kExpansion) {
      down_conv = register_module("down_conv", conv1x1(in, planes * kExpansion, stride));
      down_bn = register_module("down_bn", nn::BatchNorm2d(planes * kExpansion));
    }
  }

  torch::Tensor forward(const torch::Tensor& x) {
    auto y = torch::relu(bn1(conv1(x)));
    y = torch::relu(bn2(conv2(y)));
    y = bn3(conv3(y));
    auto skip = down_conv ? down_bn(down_conv(x)) : x;
    return torch::relu(y + skip);
  }

  nn::Conv2d conv1;
  nn::BatchNorm2d bn1;
  nn::Conv2d conv2;
  nn::BatchNorm2d bn2;
  nn::Conv2d conv3;
  nn::BatchNorm2d bn3;
  nn::Conv2d down_conv{nullptr};
  nn::BatchNorm2d down_bn{nullptr};
};
TORCH_MODULE(Bottleneck);

class ResNet50 : public Backbone {
 public:
  ResNet50()
      : stem_conv_(register_module("stem_conv", nn::Conv2d(nn::Conv2dOptions(3, 64, 7).stride(2).padding(3).bias(false)))),
        stem_bn_(register_module("stem_bn", nn::BatchNorm2d(64))) {
    std::int64_t in = 64;
    const std::int64_t layers[] = {3, 4, 6, 3};
    const std::int64_t planes[] = {64, 128, 256, 512};
    for (int stage = 0; stage < 4; ++stage) {
      for (std::int64_t b = 0; b < layers[stage]; ++b) {
        const std::int64_t stride = (b == 0 && stage > 0) ? 2 : 1;
        blocks_->push_back(Bottleneck(in, planes[stage], stride));
        in = planes[stage] * BottleneckImpl::kExpansion;
      }
    }
    register_module("blocks", blocks_);
    kaiming_init(*this);
  }

  BackboneOutput forward(const torch::Tensor& images) override {
    auto x = torch::relu(stem_bn_(stem_conv_(images)));
    x = torch::max_pool2d(x, 3, 2, 1);
    for (auto& block : *blocks_) x = block->as<Bottleneck>()->forward(x);
    return {x, x.mean({2, 3})};
  }

  std::int64_t feature_dim() const override { return 2048; }

 private:
  nn::Conv2d stem_conv_;
  nn::BatchNorm2d stem_bn_;
  nn::ModuleList blocks_;
};

// Per-pixel linear map; feature map keeps the input resolution.
class LinearStub : public Backbone {
 public:
  explicit LinearStub(std::int64_t dim)
      : proj_(register_module("proj", nn::Conv2d(nn::Conv2dOptions(3, dim, 1).bias(false)))), dim_(dim) {}

  BackboneOutput forward(const torch::Tensor& images) override {
    auto x = proj_(images);
    return {x, x.mean({2, 3})};
  }

  std::int64_t feature_dim() const override { return dim_; }

 private:
  nn::Conv2d proj_;
  std::int64_t dim_;
};

}  // namespace

std::shared_ptr<Backbone> make_backbone(const BackboneSpec& spec) {
  if (spec.width < 1) throw InvalidArgument("backbone width must be positive");
  if (spec.name == "resnet50") return std::make_shared<ResNet50>();
  if (spec.name == "linear") return std::make_shared<LinearStub>(spec.width);
  static const std::regex cifar_resnet(R"(resnet(\d+))");
  std::smatch m;
  if (std::regex_match(spec.name, m, cifar_resnet)) {
    const auto depth = std::stoll(m[1].str());
    if (depth >= 8 && (depth - 2) % 6 == 0) return std::make_shared<CifarResNet>((depth - 2) / 6, spec.width);
  }
  throw InvalidArgument("unknown backbone '" + spec.name + "' (expected resnet<6n+2>, resnet50 or linear)");
}

BackboneOutput forward_encode(Backbone& backbone, const torch::Tensor& images) {
  if (!images.defined() || images.dim() != 4 || images.size(1) != backbone.in_channels()) {
    throw InvalidArgument("encoder expects images [B, " + std::to_string(backbone.in_channels()) + ", H, W]");
  }
  if (images.size(0) == 0) throw InvalidArgument("encoder received an empty batch");
  return backbone.forward(images);
}

}  // namespace lt3lssl::models
