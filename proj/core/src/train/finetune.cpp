#include "lt3lssl/train/finetune.hpp"

#include "lt3lssl/common/error.hpp"
#include "lt3lssl/ssl/losses.hpp"

#include <cmath>

namespace lt3lssl::train {

ClassBalancedSampler::ClassBalancedSampler(std::span<const std::int64_t> labels, std::int64_t num_classes) {
  std::vector<std::vector<std::int64_t>> by_class(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto y = labels[i];
    if (y < 0 || y >= num_classes) throw InvalidArgument("label " + std::to_string(y) + " outside class range");
    by_class[static_cast<std::size_t>(y)].push_back(static_cast<std::int64_t>(i));
  }
  for (auto& c : by_class)
    if (!c.empty()) classes_.push_back(std::move(c));
  if (classes_.empty()) throw DataError("class-balanced sampler: no samples");
}

std::int64_t ClassBalancedSampler::draw(Rng& rng) const {
  std::uniform_int_distribution<std::size_t> pick_class(0, classes_.size() - 1);
  const auto& members = classes_[pick_class(rng)];
  std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
  return members[pick(rng)];
}

models::Checkpoint finetune_classifier_balanced(const models::Checkpoint& checkpoint,
                                                const data::LabeledImageSet& train_set, const TrainConfig& cfg) {
  train_set.validate();
  auto model = checkpoint.restore();
  const auto& ft = cfg.finetune;
  const auto n = train_set.size();
  const auto steps = ft.epochs * ((n + ft.batch_size - 1) / ft.batch_size);

  models::Checkpoint out = checkpoint;
  if (steps == 0 || n == 0) return out;

  torch::Tensor features;
  {
    model.eval();
    torch::NoGradGuard no_grad;
    std::vector<torch::Tensor> chunks;
    for (std::int64_t s = 0; s < n; s += 256)
      chunks.push_back(model.encoder->forward(train_set.images.slice(0, s, std::min(n, s + 256))).pooled);
    features = torch::cat(chunks, 0);
  }
  const auto labels = torch::tensor(train_set.labels, torch::kLong);
  ClassBalancedSampler sampler(train_set.labels, model.spec.num_classes);
  auto rng = make_rng({cfg.seed, tag(Stream::kBalancedSampler)});

  model.classifier->train();
  torch::optim::SGD opt(model.classifier->parameters(),
                        torch::optim::SGDOptions(ft.lr).momentum(ft.momentum).weight_decay(ft.weight_decay));
  std::vector<std::int64_t> idx(static_cast<std::size_t>(ft.batch_size));
  for (std::int64_t t = 0; t < steps; ++t) {
    const double lr = 0.5 * ft.lr * (1.0 + std::cos(M_PI * static_cast<double>(t) / static_cast<double>(steps)));
    for (auto& g : opt.param_groups()) static_cast<torch::optim::SGDOptions&>(g.options()).lr(lr);
    for (auto& i : idx) i = sampler.draw(rng);
    auto sel = torch::tensor(idx, torch::kLong);
    auto loss = ssl::classification_loss(model.classifier->forward(features.index_select(0, sel)),
                                         labels.index_select(0, sel));
    opt.zero_grad();
    loss.backward();
    opt.step();
  }

  auto fresh = models::Checkpoint::capture(model, checkpoint.profile, checkpoint.config_hash, checkpoint.step);
  out.sets["classifier"] = fresh.sets.at("classifier");
  return out;
}

}  // namespace lt3lssl::train
