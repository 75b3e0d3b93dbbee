#include "lt3lssl/ssl/queue.hpp"

#include "lt3lssl/common/error.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace lt3lssl::ssl {

AugmentedQueue::AugmentedQueue(std::int64_t capacity, std::int64_t dim)
    : capacity_(capacity), dim_(dim) {
  if (capacity < 1 || dim < 1) throw InvalidArgument("AugmentedQueue: capacity and dim must be >= 1");
  embeddings_ = torch::zeros({capacity, dim});
  labels_.assign(static_cast<std::size_t>(capacity), kSentinel);
  stamp_.assign(static_cast<std::size_t>(capacity), -1);
}

std::int64_t AugmentedQueue::occupied() const {
  std::int64_t n = 0;
  for (auto l : labels_) n += l != kSentinel;
  return n;
}

void AugmentedQueue::push(const torch::Tensor& embeddings, const std::vector<std::int64_t>& labels) {
  auto e = embeddings.dim() == 1 ? embeddings.unsqueeze(0) : embeddings;
  if (e.dim() != 2 || e.size(1) != dim_) throw InvalidArgument("AugmentedQueue::push: dimension mismatch");
  if (static_cast<std::size_t>(e.size(0)) != labels.size())
    throw InvalidArgument("AugmentedQueue::push: one label per embedding required");
  e = e.detach().to(torch::kFloat).contiguous();
  auto norms = e.norm(2, 1);
  if (e.size(0) > 0 && ((norms - 1).abs() > kNormTolerance).any().item<bool>())
    throw InvalidArgument("AugmentedQueue::push: embeddings must be unit-norm");
  for (auto l : labels)
    if (l < 0) throw InvalidArgument("AugmentedQueue::push: negative label");
  for (std::int64_t i = 0; i < e.size(0); ++i) {
    embeddings_[head_].copy_(e[i]);
    labels_[static_cast<std::size_t>(head_)] = labels[static_cast<std::size_t>(i)];
    stamp_[static_cast<std::size_t>(head_)] = pushes_++;
    head_ = (head_ + 1) % capacity_;
  }
}

void AugmentedQueue::push(const torch::Tensor& embedding, std::int64_t label) {
  if (embedding.dim() != 1) throw InvalidArgument("AugmentedQueue::push: expected a single [e] embedding");
  push(embedding, std::vector<std::int64_t>{label});
}

std::optional<torch::Tensor> AugmentedQueue::aggregate(std::int64_t label) const {
  if (label < 0) return std::nullopt;
  std::vector<std::int64_t> idx;
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (labels_[i] == label) idx.push_back(static_cast<std::int64_t>(i));
  if (idx.empty()) return std::nullopt;
  return embeddings_.index_select(0, torch::tensor(idx, torch::kLong)).mean(0);
}

std::optional<torch::Tensor> AugmentedQueue::most_recent(std::int64_t label) const {
  if (label < 0) return std::nullopt;
  std::int64_t best = -1;
  std::int64_t best_stamp = -1;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == label && stamp_[i] > best_stamp) {
      best_stamp = stamp_[i];
      best = static_cast<std::int64_t>(i);
    }
  }
  if (best < 0) return std::nullopt;
  return embeddings_[best].clone();
}

namespace {

template <typename Lookup>
std::pair<torch::Tensor, torch::Tensor> lookup_batch(std::int64_t dim, const std::vector<std::int64_t>& labels,
                                                     Lookup&& lookup) {
  auto n = static_cast<std::int64_t>(labels.size());
  auto out = torch::zeros({n, dim});
  auto valid = torch::zeros({n}, torch::kBool);
  for (std::int64_t i = 0; i < n; ++i) {
    if (auto v = lookup(labels[static_cast<std::size_t>(i)])) {
      out[i].copy_(*v);
      valid[i] = true;
    }
  }
  return {out, valid};
}

}  // namespace

std::pair<torch::Tensor, torch::Tensor> AugmentedQueue::aggregate_batch(const std::vector<std::int64_t>& labels) const {
  // Each class mean is computed once per call.
  std::map<std::int64_t, std::optional<torch::Tensor>> cache;
  return lookup_batch(dim_, labels, [&](std::int64_t l) {
    auto it = cache.find(l);
    if (it == cache.end()) it = cache.emplace(l, aggregate(l)).first;
    return it->second;
  });
}

std::pair<torch::Tensor, torch::Tensor> AugmentedQueue::most_recent_batch(
    const std::vector<std::int64_t>& labels) const {
  return lookup_batch(dim_, labels, [&](std::int64_t l) { return most_recent(l); });
}

void AugmentedQueue::restore(const torch::Tensor& embeddings, const std::vector<std::int64_t>& labels,
                             std::int64_t head) {
  if (embeddings.dim() != 2 || embeddings.size(0) != capacity_ || embeddings.size(1) != dim_ ||
      static_cast<std::int64_t>(labels.size()) != capacity_ || head < 0 || head >= capacity_)
    throw InvalidArgument("AugmentedQueue::restore: state does not match queue shape");
  embeddings_ = embeddings.detach().to(torch::kFloat).clone();
  labels_ = labels;
  head_ = head;
  // Recency follows FIFO order starting at the slot after the newest entry.
  pushes_ = 0;
  for (std::int64_t k = 0; k < capacity_; ++k) {
    auto slot = static_cast<std::size_t>((head + k) % capacity_);
    stamp_[slot] = labels_[slot] == kSentinel ? -1 : pushes_++;
  }
}

void write_queue_snapshot(const AugmentedQueue& queue, const std::filesystem::path& csv,
                          const std::optional<std::filesystem::path>& embedding_bin) {
  std::ofstream out(csv);
  if (!out) throw IoError("cannot write " + csv.string());
  out << "slot,pseudo_label\n";
  const auto& labels = queue.labels();
  for (std::size_t i = 0; i < labels.size(); ++i) out << i << ',' << labels[i] << '\n';
  if (!out) throw IoError("write failed: " + csv.string());
  if (embedding_bin) {
    std::ofstream bin(*embedding_bin, std::ios::binary);
    if (!bin) throw IoError("cannot write " + embedding_bin->string());
    auto e = queue.embeddings().contiguous();
    bin.write(reinterpret_cast<const char*>(e.data_ptr<float>()),
              static_cast<std::streamsize>(e.numel() * sizeof(float)));
    if (!bin) throw IoError("write failed: " + embedding_bin->string());
  }
}

std::vector<std::int64_t> read_queue_snapshot_labels(const std::filesystem::path& csv) {
  std::ifstream in(csv);
  if (!in) throw IoError("cannot read " + csv.string());
  std::string line;
  std::getline(in, line);
  if (line != "slot,pseudo_label") throw DataError("unexpected queue snapshot header in " + csv.string());
  std::vector<std::int64_t> labels;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto comma = line.find(',');
    if (comma == std::string::npos) throw DataError("malformed row in " + csv.string());
    labels.push_back(std::stoll(line.substr(comma + 1)));
  }
  return labels;
}

}  // namespace lt3lssl::ssl
