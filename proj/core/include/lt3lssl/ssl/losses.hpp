#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <string>

namespace lt3lssl::ssl {

// Negative cosine similarity -<a/|a|, b/|b|>.
//
// Works on single vectors [e] or batches [B, e] (mean over the batch). The
// target `f_b` is detached: gradients reach only the online input `f_a`.
// Throws InvalidArgument if any vector has zero norm.
torch::Tensor cosine_similarity_loss(const torch::Tensor& f_a, const torch::Tensor& f_b);

// Per-sample losses [B] for batched inputs, same conventions.
torch::Tensor cosine_similarity_loss_per_sample(const torch::Tensor& f_a, const torch::Tensor& f_b);

// Closed-form gradient of the single-vector loss with respect to f_a:
//   -(b_hat - (a_hat . b_hat) a_hat) / |a|
torch::Tensor cosine_similarity_loss_grad(const torch::Tensor& f_a, const torch::Tensor& f_b);

// Softmax cross-entropy of (already adjusted) logits. [C] with a scalar label,
// or [B, C] with int64 labels [B] (mean). Throws InvalidArgument for labels
// outside [0, C).
torch::Tensor classification_loss(const torch::Tensor& logits, const torch::Tensor& labels);
double classification_loss(const torch::Tensor& logits, std::int64_t label);

// Cross-entropy of the query against [key, negatives...] cosine logits
// divided by `temperature`. query/key: [e] or [B, e]; negatives: [K, e].
// Throws InvalidArgument for an empty negative set or temperature <= 0.
torch::Tensor infonce_loss(const torch::Tensor& query, const torch::Tensor& key, const torch::Tensor& negatives,
                           double temperature = 0.2);

// Which terms of the total objective are active.
struct LossSwitches {
  bool sim1 = true;
  bool sim2 = true;
  bool sim3 = true;
  bool cls = true;
};

struct LossBreakdown {
  double sim1 = 0.0;
  double sim2 = 0.0;
  double sim3 = 0.0;
  double cls = 0.0;
  double total = 0.0;
};

// Unit-weighted sum of the enabled terms; disabled terms are reported as 0.
// Throws NumericError when an enabled term is not finite.
LossBreakdown total_loss(double sim1, double sim2, double sim3, double cls, const LossSwitches& enabled = {});

}  // namespace lt3lssl::ssl
