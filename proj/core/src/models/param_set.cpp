#include "lt3lssl/models/param_set.hpp"

#include "lt3lssl/common/error.hpp"

#include <cstring>

namespace lt3lssl::models {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void fnv(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
}

}  // namespace

ParamSet ParamSet::parameters_of(const torch::nn::Module& module) {
  std::vector<Entry> entries;
  for (const auto& item : module.named_parameters(/*recurse=*/true)) entries.emplace_back(item.key(), item.value());
  return ParamSet(std::move(entries));
}

ParamSet ParamSet::state_of(const torch::nn::Module& module) {
  auto set = parameters_of(module);
  for (const auto& item : module.named_buffers(/*recurse=*/true)) set.entries_.emplace_back(item.key(), item.value());
  return set;
}

std::int64_t ParamSet::numel() const {
  std::int64_t n = 0;
  for (const auto& [name, t] : entries_) n += t.numel();
  return n;
}

ParamSet ParamSet::clone() const {
  torch::NoGradGuard no_grad;
  std::vector<Entry> copy;
  copy.reserve(entries_.size());
  for (const auto& [name, t] : entries_) copy.emplace_back(name, t.detach().clone());
  return ParamSet(std::move(copy));
}

void ParamSet::check_same_layout(const ParamSet& other) const {
  if (entries_.size() != other.entries_.size()) {
    throw InvalidArgument("parameter sets differ in size: " + std::to_string(entries_.size()) + " vs " +
                          std::to_string(other.entries_.size()));
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& [a_name, a] = entries_[i];
    const auto& [b_name, b] = other.entries_[i];
    if (a_name != b_name) throw InvalidArgument("parameter name mismatch: " + a_name + " vs " + b_name);
    if (a.sizes() != b.sizes()) throw InvalidArgument("parameter shape mismatch for " + a_name);
  }
}

void ParamSet::copy_from(const ParamSet& src) {
  check_same_layout(src);
  torch::NoGradGuard no_grad;
  for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i].second.copy_(src.entries_[i].second);
}

std::uint64_t ParamSet::fingerprint() const {
  std::uint64_t h = kFnvOffset;
  for (const auto& [name, t] : entries_) {
    fnv(h, name.data(), name.size());
    for (auto s : t.sizes()) fnv(h, &s, sizeof(s));
    auto c = t.detach().contiguous();
    fnv(h, c.data_ptr(), static_cast<std::size_t>(c.numel()) * c.element_size());
  }
  return h;
}

void momentum_update(ParamSet& theta_k, const ParamSet& theta_q, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("momentum rate must lie in [0, 1]");
  theta_k.check_same_layout(theta_q);
  torch::NoGradGuard no_grad;
  for (std::size_t i = 0; i < theta_k.size(); ++i) {
    auto k = theta_k.entries()[i].second;
    const auto& q = theta_q.entries()[i].second;
    k.mul_(alpha).add_(q.detach() * (1.0 - alpha));
  }
}

}  // namespace lt3lssl::models
