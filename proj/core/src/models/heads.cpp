#include "lt3lssl/models/heads.hpp"

#include "lt3lssl/common/error.hpp"

#include <cmath>
#include <string>

namespace lt3lssl::models {

namespace {

void check_last_dim(const torch::Tensor& t, std::int64_t expected, const char* what) {
  if (!t.defined() || (t.dim() != 1 && t.dim() != 2) || t.size(-1) != expected) {
    throw InvalidArgument(std::string(what) + ": expected last dimension " + std::to_string(expected));
  }
}

}  // namespace

ProjectorImpl::ProjectorImpl(const ProjectorSpec& spec) : spec_(spec) {
  if (spec.input_dim < 1 || spec.hidden_dim < 1 || spec.output_dim < 1) {
    throw InvalidArgument("projector dimensions must be positive");
  }
  fc1 = register_module("fc1", torch::nn::Linear(spec.input_dim, spec.hidden_dim));
  fc2 = register_module("fc2", torch::nn::Linear(spec.hidden_dim, spec.output_dim));
}

torch::Tensor ProjectorImpl::forward(const torch::Tensor& pooled) { return fc2(torch::relu(fc1(pooled))); }

torch::Tensor project(Projector& projector, const torch::Tensor& pooled) {
  check_last_dim(pooled, projector->spec().input_dim, "project");
  return projector->forward(pooled);
}

ClassifierImpl::ClassifierImpl(std::int64_t feature_dim, std::int64_t num_classes, bool bias)
    : feature_dim_(feature_dim), num_classes_(num_classes) {
  if (feature_dim < 1 || num_classes < 1) throw InvalidArgument("classifier dimensions must be positive");
  fc = register_module("fc", torch::nn::Linear(torch::nn::LinearOptions(feature_dim, num_classes).bias(bias)));
}

torch::Tensor ClassifierImpl::forward(const torch::Tensor& pooled) { return fc(pooled); }

torch::Tensor classify(Classifier& classifier, const torch::Tensor& pooled) {
  check_last_dim(pooled, classifier->feature_dim(), "classify");
  return classifier->forward(pooled);
}

torch::Tensor log_prior(const data::LongTailProfile& profile) {
  if (profile.counts.empty()) throw InvalidArgument("adjust_logits: empty profile");
  double total = 0.0;
  for (auto n : profile.counts) {
    if (n <= 0) throw InvalidArgument("adjust_logits: every class count must be positive");
    total += static_cast<double>(n);
  }
  std::vector<float> offsets;
  offsets.reserve(profile.counts.size());
  for (auto n : profile.counts) offsets.push_back(static_cast<float>(std::log(static_cast<double>(n) / total)));
  return torch::tensor(offsets, torch::kFloat32);
}

torch::Tensor adjust_logits(const torch::Tensor& logits, const data::LongTailProfile& profile) {
  auto offsets = log_prior(profile);
  check_last_dim(logits, offsets.size(0), "adjust_logits");
  return logits + offsets.to(logits.dtype());
}

}  // namespace lt3lssl::models
