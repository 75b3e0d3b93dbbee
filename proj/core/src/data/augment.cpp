#include "lt3lssl/data/augment.hpp"

#include "lt3lssl/common/error.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace lt3lssl::data {

namespace {

namespace F = torch::nn::functional;
using namespace transforms;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

bool coin(Rng& rng, double p) { return p > 0.0 && uniform(rng, 0.0, 1.0) < p; }

torch::Tensor luminance(const torch::Tensor& img) {
  if (img.size(0) != 3) return img.mean(0, true);
  return (0.299 * img[0] + 0.587 * img[1] + 0.114 * img[2]).unsqueeze(0);
}

torch::Tensor blend(const torch::Tensor& a, const torch::Tensor& b, double t) {
  return (t * a + (1.0 - t) * b).clamp(0.0, 1.0);
}

torch::Tensor resize(const torch::Tensor& img, std::int64_t h, std::int64_t w) {
  return F::interpolate(img.unsqueeze(0),
                        F::InterpolateFuncOptions().size(std::vector<std::int64_t>{h, w}).mode(torch::kBilinear).align_corners(false))
      .squeeze(0)
      .clamp(0.0, 1.0);
}

struct Applier {
  const torch::Tensor& in;
  Rng& rng;

  torch::Tensor operator()(const Identity&) const { return in; }

  torch::Tensor operator()(const RandomResizedCrop& t) const {
    const auto h = in.size(1);
    const auto w = in.size(2);
    const double area = static_cast<double>(h * w);
    for (int attempt = 0; attempt < 10; ++attempt) {
      const double target = area * uniform(rng, t.scale_min, t.scale_max);
      const double log_ratio = uniform(rng, std::log(t.ratio_min), std::log(t.ratio_max));
      const double ratio = std::exp(log_ratio);
      const auto cw = static_cast<std::int64_t>(std::llround(std::sqrt(target * ratio)));
      const auto ch = static_cast<std::int64_t>(std::llround(std::sqrt(target / ratio)));
      if (cw > 0 && ch > 0 && cw <= w && ch <= h) {
        const auto top = std::uniform_int_distribution<std::int64_t>(0, h - ch)(rng);
        const auto left = std::uniform_int_distribution<std::int64_t>(0, w - cw)(rng);
        return resize(in.narrow(1, top, ch).narrow(2, left, cw), h, w);
      }
    }
    return in;
  }

  torch::Tensor operator()(const PadCrop& t) const {
    if (t.pad <= 0) return in;
    auto padded = torch::constant_pad_nd(in, {t.pad, t.pad, t.pad, t.pad}, 0.0);
    const auto top = std::uniform_int_distribution<std::int64_t>(0, 2 * t.pad)(rng);
    const auto left = std::uniform_int_distribution<std::int64_t>(0, 2 * t.pad)(rng);
    return padded.narrow(1, top, in.size(1)).narrow(2, left, in.size(2)).contiguous();
  }

  torch::Tensor operator()(const HorizontalFlip& t) const {
    return coin(rng, t.p) ? in.flip({2}) : in;
  }

  torch::Tensor operator()(const ColorJitter& t) const {
    if (!coin(rng, t.p)) return in;
    torch::Tensor img = in;
    const double b = uniform(rng, std::max(0.0, 1.0 - t.brightness), 1.0 + t.brightness);
    const double c = uniform(rng, std::max(0.0, 1.0 - t.contrast), 1.0 + t.contrast);
    const double s = uniform(rng, std::max(0.0, 1.0 - t.saturation), 1.0 + t.saturation);
    const double hue = uniform(rng, -t.hue, t.hue);
    img = (img * b).clamp(0.0, 1.0);
    img = blend(img, luminance(img).mean().expand_as(img), c);
    if (img.size(0) == 3) {
      img = blend(img, luminance(img).expand_as(img), s);
      // Hue rotation in YIQ space.
      const double angle = hue * 2.0 * std::numbers::pi;
      const double cs = std::cos(angle);
      const double sn = std::sin(angle);
      auto y = 0.299 * img[0] + 0.587 * img[1] + 0.114 * img[2];
      auto i = 0.596 * img[0] - 0.274 * img[1] - 0.322 * img[2];
      auto q = 0.211 * img[0] - 0.523 * img[1] + 0.312 * img[2];
      auto i2 = cs * i - sn * q;
      auto q2 = sn * i + cs * q;
      img = torch::stack({y + 0.956 * i2 + 0.621 * q2, y - 0.272 * i2 - 0.647 * q2, y - 1.106 * i2 + 1.703 * q2})
                .clamp(0.0, 1.0);
    }
    return img;
  }

  torch::Tensor operator()(const Grayscale& t) const {
    return coin(rng, t.p) ? luminance(in).expand_as(in).contiguous() : in;
  }

  torch::Tensor operator()(const GaussianBlur& t) const {
    if (!coin(rng, t.p)) return in;
    const double sigma = uniform(rng, t.sigma_min, t.sigma_max);
    auto radius = static_cast<std::int64_t>(std::ceil(2.0 * sigma));
    radius = std::max<std::int64_t>(1, std::min({radius, (in.size(1) - 1) / 2, (in.size(2) - 1) / 2}));
    auto xs = torch::arange(-radius, radius + 1, torch::kFloat32);
    auto kernel = torch::exp(-(xs * xs) / (2.0 * sigma * sigma));
    kernel = kernel / kernel.sum();
    const auto ch = in.size(0);
    auto img = in.unsqueeze(0);
    img = F::pad(img, F::PadFuncOptions({radius, radius, radius, radius}).mode(torch::kReplicate));
    img = F::conv2d(img, kernel.view({1, 1, 1, -1}).repeat({ch, 1, 1, 1}), F::Conv2dFuncOptions().groups(ch));
    img = F::conv2d(img, kernel.view({1, 1, -1, 1}).repeat({ch, 1, 1, 1}), F::Conv2dFuncOptions().groups(ch));
    return img.squeeze(0).clamp(0.0, 1.0);
  }
};

std::vector<double> parse_numbers(const std::string& token, const std::string& name, std::size_t max_count) {
  std::vector<double> out;
  std::istringstream in(token);
  std::string part;
  std::getline(in, part, ':');  // the name
  while (std::getline(in, part, ':')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw InvalidArgument("augmentation '" + name + "': bad parameter '" + part + "'");
    }
  }
  if (out.size() > max_count) throw InvalidArgument("augmentation '" + name + "': too many parameters");
  return out;
}

void check_probability(double p, const std::string& name) {
  if (p < 0.0 || p > 1.0) throw InvalidArgument("augmentation '" + name + "': probability outside [0,1]");
}

}  // namespace

AugmentationPipeline AugmentationPipeline::moco_v2() {
  return AugmentationPipeline({RandomResizedCrop{}, HorizontalFlip{}, ColorJitter{}, Grayscale{}, GaussianBlur{}});
}

AugmentationPipeline AugmentationPipeline::cifar() {
  return AugmentationPipeline({PadCrop{}, HorizontalFlip{}, ColorJitter{}, Grayscale{}});
}

AugmentationPipeline AugmentationPipeline::identity() { return AugmentationPipeline({Identity{}}); }

AugmentationPipeline AugmentationPipeline::parse(std::string_view text) {
  if (text == "moco_v2" || text == "default") return moco_v2();
  if (text == "cifar") return cifar();
  std::vector<Transform> steps;
  std::istringstream in{std::string(text)};
  std::string token;
  while (std::getline(in, token, ',')) {
    while (!token.empty() && token.front() == ' ') token.erase(token.begin());
    while (!token.empty() && token.back() == ' ') token.pop_back();
    if (token.empty()) continue;
    const auto name = token.substr(0, token.find(':'));
    if (name == "identity") {
      parse_numbers(token, name, 0);
      steps.emplace_back(Identity{});
    } else if (name == "rrc") {
      auto v = parse_numbers(token, name, 2);
      RandomResizedCrop t;
      if (!v.empty()) t.scale_min = v[0];
      if (v.size() > 1) t.scale_max = v[1];
      if (!(t.scale_min > 0.0 && t.scale_min <= t.scale_max && t.scale_max <= 1.0)) {
        throw InvalidArgument("augmentation 'rrc': need 0 < smin <= smax <= 1");
      }
      steps.emplace_back(t);
    } else if (name == "pad_crop") {
      auto v = parse_numbers(token, name, 1);
      PadCrop t;
      if (!v.empty()) t.pad = static_cast<std::int64_t>(v[0]);
      if (t.pad < 0) throw InvalidArgument("augmentation 'pad_crop': negative padding");
      steps.emplace_back(t);
    } else if (name == "hflip") {
      auto v = parse_numbers(token, name, 1);
      HorizontalFlip t;
      if (!v.empty()) t.p = v[0];
      check_probability(t.p, name);
      steps.emplace_back(t);
    } else if (name == "jitter") {
      auto v = parse_numbers(token, name, 5);
      ColorJitter t;
      double* fields[] = {&t.p, &t.brightness, &t.contrast, &t.saturation, &t.hue};
      for (std::size_t i = 0; i < v.size(); ++i) *fields[i] = v[i];
      check_probability(t.p, name);
      steps.emplace_back(t);
    } else if (name == "gray") {
      auto v = parse_numbers(token, name, 1);
      Grayscale t;
      if (!v.empty()) t.p = v[0];
      check_probability(t.p, name);
      steps.emplace_back(t);
    } else if (name == "blur") {
      auto v = parse_numbers(token, name, 3);
      GaussianBlur t;
      if (!v.empty()) t.p = v[0];
      if (v.size() > 1) t.sigma_min = v[1];
      if (v.size() > 2) t.sigma_max = v[2];
      check_probability(t.p, name);
      if (!(t.sigma_min > 0.0 && t.sigma_min <= t.sigma_max)) throw InvalidArgument("augmentation 'blur': bad sigma range");
      steps.emplace_back(t);
    } else {
      throw InvalidArgument("unknown augmentation '" + name + "'");
    }
  }
  if (steps.empty()) throw InvalidArgument("empty augmentation pipeline");
  return AugmentationPipeline(std::move(steps));
}

std::string AugmentationPipeline::to_string() const {
  std::ostringstream out;
  bool first = true;
  for (const auto& step : steps_) {
    if (!first) out << ',';
    first = false;
    std::visit(
        [&out](const auto& t) {
          using T = std::decay_t<decltype(t)>;
          if constexpr (std::is_same_v<T, Identity>) {
            out << "identity";
          } else if constexpr (std::is_same_v<T, RandomResizedCrop>) {
            out << "rrc:" << t.scale_min << ':' << t.scale_max;
          } else if constexpr (std::is_same_v<T, PadCrop>) {
            out << "pad_crop:" << t.pad;
          } else if constexpr (std::is_same_v<T, HorizontalFlip>) {
            out << "hflip:" << t.p;
          } else if constexpr (std::is_same_v<T, ColorJitter>) {
            out << "jitter:" << t.p << ':' << t.brightness << ':' << t.contrast << ':' << t.saturation << ':' << t.hue;
          } else if constexpr (std::is_same_v<T, Grayscale>) {
            out << "gray:" << t.p;
          } else if constexpr (std::is_same_v<T, GaussianBlur>) {
            out << "blur:" << t.p << ':' << t.sigma_min << ':' << t.sigma_max;
          }
        },
        step);
  }
  return out.str();
}

torch::Tensor AugmentationPipeline::apply(const torch::Tensor& image, Rng& rng) const {
  if (image.dim() != 3) throw InvalidArgument("augmentation expects a [C,H,W] image");
  torch::NoGradGuard no_grad;
  torch::Tensor img = image;
  for (const auto& step : steps_) img = std::visit(Applier{img, rng}, step);
  return img.contiguous();
}

std::pair<torch::Tensor, torch::Tensor> two_view_augment(const torch::Tensor& image,
                                                         const AugmentationPipeline& pipeline, std::uint64_t seed) {
  auto rng_q = make_rng({seed, tag(Stream::kAugment), 0});
  auto rng_k = make_rng({seed, tag(Stream::kAugment), 1});
  return {pipeline.apply(image, rng_q), pipeline.apply(image, rng_k)};
}

TwoViewBatch make_two_view_batch(const LabeledImageSet& data, std::span<const std::int64_t> indices,
                                 const AugmentationPipeline& pipeline, std::uint64_t seed, std::int64_t epoch) {
  const auto n = static_cast<std::int64_t>(indices.size());
  if (n == 0) throw InvalidArgument("empty batch");
  auto x = torch::empty({n, data.channels(), data.height(), data.width()}, torch::kFloat32);
  auto xp = torch::empty_like(x);
  std::vector<std::int64_t> labels;
  TwoViewBatch batch;
  for (std::int64_t b = 0; b < n; ++b) {
    const auto i = static_cast<std::size_t>(indices[static_cast<std::size_t>(b)]);
    const auto id = data.sample_ids.at(i);
    auto [q, k] = two_view_augment(data.images[static_cast<std::int64_t>(i)], pipeline,
                                   derive_seed({seed, static_cast<std::uint64_t>(epoch), static_cast<std::uint64_t>(id)}));
    x[b].copy_(q);
    xp[b].copy_(k);
    labels.push_back(data.labels[i]);
    batch.sample_ids.push_back(id);
  }
  batch.x = x;
  batch.x_prime = xp;
  batch.labels = torch::tensor(labels, torch::kInt64);
  return batch;
}

}  // namespace lt3lssl::data
