#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace lt3lssl::ssl {

// Fixed-capacity FIFO of (unit embedding, pseudo-label) pairs. Fresh slots
// hold the sentinel (zero vector, label -1) and never match a class.
// Single writer; copies are independent snapshots.
class AugmentedQueue {
 public:
  static constexpr std::int64_t kSentinel = -1;
  static constexpr double kNormTolerance = 1e-3;

  AugmentedQueue(std::int64_t capacity, std::int64_t dim);

  std::int64_t capacity() const { return capacity_; }
  std::int64_t dim() const { return dim_; }
  // Slot that the next push overwrites.
  std::int64_t head() const { return head_; }
  const torch::Tensor& embeddings() const { return embeddings_; }
  const std::vector<std::int64_t>& labels() const { return labels_; }
  std::int64_t occupied() const;

  // Pushes one embedding [e] or a batch [B, e] in row order, evicting the
  // oldest entries. Throws InvalidArgument for norms outside 1 +- 1e-3,
  // negative labels, or dimension mismatch.
  void push(const torch::Tensor& embeddings, const std::vector<std::int64_t>& labels);
  void push(const torch::Tensor& embedding, std::int64_t label);

  // Mean of all stored embeddings labelled `label`, or nullopt when none.
  std::optional<torch::Tensor> aggregate(std::int64_t label) const;
  // Most recently pushed embedding labelled `label`, or nullopt.
  std::optional<torch::Tensor> most_recent(std::int64_t label) const;

  // Per-row lookups for a batch of labels: returns ([B, e] targets, [B] bool
  // valid mask). Rows without a match are zero and invalid.
  std::pair<torch::Tensor, torch::Tensor> aggregate_batch(const std::vector<std::int64_t>& labels) const;
  std::pair<torch::Tensor, torch::Tensor> most_recent_batch(const std::vector<std::int64_t>& labels) const;

  // Restores a saved state; throws InvalidArgument on inconsistent shapes.
  void restore(const torch::Tensor& embeddings, const std::vector<std::int64_t>& labels, std::int64_t head);

 private:
  std::int64_t capacity_;
  std::int64_t dim_;
  std::int64_t head_ = 0;
  torch::Tensor embeddings_;
  std::vector<std::int64_t> labels_;
  // Monotone push counter per slot, to resolve recency.
  std::vector<std::int64_t> stamp_;
  std::int64_t pushes_ = 0;
};

// Snapshot export: CSV `slot,pseudo_label` (slots in storage order) and an
// optional raw float32 dump of the [L, e] embeddings.
void write_queue_snapshot(const AugmentedQueue& queue, const std::filesystem::path& csv,
                          const std::optional<std::filesystem::path>& embedding_bin = std::nullopt);
// Labels per slot from a snapshot CSV.
std::vector<std::int64_t> read_queue_snapshot_labels(const std::filesystem::path& csv);

}  // namespace lt3lssl::ssl
