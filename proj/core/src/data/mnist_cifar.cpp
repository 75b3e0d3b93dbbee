#include "lt3lssl/data/mnist_cifar.hpp"

#include "lt3lssl/common/error.hpp"
#include "lt3lssl/common/seed.hpp"

#include <algorithm>
#include <string>

namespace lt3lssl::data {

namespace {

using namespace torch::indexing;

// [N, 1|3, 28|32, 28|32] -> [N, 3, 32, 32]
torch::Tensor digits_to_rgb32(const torch::Tensor& digits) {
  torch::Tensor d = digits;
  if (d.size(2) == 28 && d.size(3) == 28) {
    d = torch::constant_pad_nd(d, {2, 2, 2, 2}, 0.0);
  } else if (d.size(2) != 32 || d.size(3) != 32) {
    throw InvalidArgument("digit images must be 28x28 or 32x32");
  }
  if (d.size(1) == 1) {
    d = d.expand({d.size(0), 3, 32, 32});
  } else if (d.size(1) == 3) {
    d = d.mean(1, /*keepdim=*/true).expand({d.size(0), 3, 32, 32});
  } else {
    throw InvalidArgument("digit images must have 1 or 3 channels");
  }
  return d.contiguous();
}

std::vector<std::vector<std::int64_t>> by_class(const LabeledImageSet& s, std::int64_t num_classes) {
  std::vector<std::vector<std::int64_t>> out(static_cast<std::size_t>(num_classes));
  for (std::int64_t i = 0; i < s.size(); ++i) {
    const auto y = s.labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= num_classes) throw InvalidArgument("label " + std::to_string(y) + " outside [0, 10)");
    out[static_cast<std::size_t>(y)].push_back(i);
  }
  return out;
}

void fill_noise(torch::Tensor& images, std::int64_t row_begin, std::int64_t row_end,
                const std::vector<std::int64_t>& sample_ids, std::uint64_t seed, Stream stream, FillPolicy fill) {
  auto region = images.index({Slice(), Slice(), Slice(row_begin, row_end), Slice()});
  if (fill == FillPolicy::kZero) {
    region.zero_();
    return;
  }
  const auto n = images.size(0);
  const auto per_sample = images.size(1) * (row_end - row_begin) * images.size(3);
  std::vector<float> buffer(static_cast<std::size_t>(per_sample));
  for (std::int64_t i = 0; i < n; ++i) {
    auto rng = make_rng({seed, tag(stream), static_cast<std::uint64_t>(sample_ids[static_cast<std::size_t>(i)])});
    std::uniform_real_distribution<float> uniform(0.0F, 1.0F);
    for (auto& v : buffer) v = uniform(rng);
    region[i].copy_(torch::from_blob(buffer.data(), region[i].sizes(), torch::kFloat32));
  }
}

}  // namespace

ConcatDataset::ConcatDataset(LabeledImageSet samples) : samples_(std::move(samples)) {
  samples_.validate();
  if (samples_.channels() != kChannels || samples_.height() != kHeight || samples_.width() != kWidth) {
    throw InvalidArgument("concatenated samples must be 3x64x32");
  }
}

ConcatDataset build_mnist_cifar_lt(const LabeledImageSet& digits, const LabeledImageSet& objects,
                                   const LongTailProfile& profile, std::uint64_t seed) {
  constexpr std::int64_t kClasses = static_cast<std::int64_t>(kJointClassNames.size());
  if (profile.num_classes != kClasses) {
    throw InvalidArgument("the concatenated dataset has 10 joint classes, profile has " +
                          std::to_string(profile.num_classes));
  }
  digits.validate();
  objects.validate();
  if (objects.channels() != 3 || objects.height() != 32 || objects.width() != 32) {
    throw InvalidArgument("object images must be 3x32x32");
  }
  if (digits.max_label() >= kClasses || objects.max_label() >= kClasses) {
    throw InvalidArgument("digit and object sources must both have 10 classes");
  }
  auto digit_pool = by_class(digits, kClasses);
  auto object_pool = by_class(objects, kClasses);

  std::vector<std::int64_t> digit_idx;
  std::vector<std::int64_t> object_idx;
  std::vector<std::int64_t> labels;
  for (std::int64_t c = 0; c < kClasses; ++c) {
    const auto need = profile.counts[static_cast<std::size_t>(c)];
    auto& dp = digit_pool[static_cast<std::size_t>(c)];
    auto& op = object_pool[static_cast<std::size_t>(c)];
    if (static_cast<std::int64_t>(dp.size()) < need || static_cast<std::int64_t>(op.size()) < need) {
      throw DataError("class " + std::to_string(c) + " needs " + std::to_string(need) + " samples, sources have " +
                      std::to_string(dp.size()) + " digits / " + std::to_string(op.size()) + " objects");
    }
    auto rng = make_rng({seed, tag(Stream::kPairing), static_cast<std::uint64_t>(c)});
    std::shuffle(dp.begin(), dp.end(), rng);
    std::shuffle(op.begin(), op.end(), rng);
    digit_idx.insert(digit_idx.end(), dp.begin(), dp.begin() + need);
    object_idx.insert(object_idx.end(), op.begin(), op.begin() + need);
    labels.insert(labels.end(), static_cast<std::size_t>(need), c);
  }

  auto top = digits_to_rgb32(digits.images.index_select(0, torch::tensor(digit_idx, torch::kInt64)));
  auto bottom = objects.images.index_select(0, torch::tensor(object_idx, torch::kInt64));
  LabeledImageSet out;
  out.images = torch::cat({top, bottom}, /*dim=*/2).contiguous();
  out.labels = std::move(labels);
  out.sample_ids.resize(out.labels.size());
  for (std::size_t i = 0; i < out.sample_ids.size(); ++i) out.sample_ids[i] = static_cast<std::int64_t>(i);
  return ConcatDataset(std::move(out));
}

std::string_view variant_name(EvalVariant v) {
  switch (v) {
    case EvalVariant::kFull: return "full";
    case EvalVariant::kMnistOnly: return "mnist_only";
    case EvalVariant::kCifarOnly: return "cifar_only";
  }
  return "?";
}

EvalVariant parse_variant(std::string_view name) {
  if (name == "full") return EvalVariant::kFull;
  if (name == "mnist_only") return EvalVariant::kMnistOnly;
  if (name == "cifar_only") return EvalVariant::kCifarOnly;
  throw InvalidArgument("unknown test variant '" + std::string(name) + "' (expected full, mnist_only, cifar_only)");
}

ConcatDataset make_eval_variant(const ConcatDataset& dataset, EvalVariant variant, std::uint64_t seed,
                                FillPolicy fill) {
  if (variant == EvalVariant::kFull) return dataset;
  LabeledImageSet out = dataset.samples();
  out.images = out.images.clone();
  if (variant == EvalVariant::kMnistOnly) {
    fill_noise(out.images, ConcatDataset::kPartBoundary, ConcatDataset::kHeight, out.sample_ids, seed,
               Stream::kEvalFill, fill);
  } else {
    fill_noise(out.images, 0, ConcatDataset::kPartBoundary, out.sample_ids, seed, Stream::kEvalFill, fill);
  }
  return ConcatDataset(std::move(out));
}

ConcatDataset make_oracle_train(const ConcatDataset& dataset, std::uint64_t seed) {
  LabeledImageSet out = dataset.samples();
  out.images = out.images.clone();
  fill_noise(out.images, 0, ConcatDataset::kPartBoundary, out.sample_ids, seed, Stream::kOracleFill,
             FillPolicy::kUniformNoise);
  return ConcatDataset(std::move(out));
}

}  // namespace lt3lssl::data
