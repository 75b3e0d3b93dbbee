#include "lt3lssl/ssl/losses.hpp"

#include "lt3lssl/common/error.hpp"

#include <cmath>

namespace lt3lssl::ssl {
namespace {

void check_pair(const torch::Tensor& a, const torch::Tensor& b, const char* what) {
  if (a.dim() < 1 || a.dim() > 2) throw InvalidArgument(std::string(what) + ": expected [e] or [B, e]");
  if (!a.sizes().equals(b.sizes())) throw InvalidArgument(std::string(what) + ": shape mismatch");
}

torch::Tensor norms_checked(const torch::Tensor& v, const char* what) {
  auto n = v.norm(2, -1);
  if ((n.detach() <= 0).any().item<bool>()) throw InvalidArgument(std::string(what) + ": zero-norm vector");
  return n;
}

}  // namespace

torch::Tensor cosine_similarity_loss_per_sample(const torch::Tensor& f_a, const torch::Tensor& f_b) {
  check_pair(f_a, f_b, "cosine_similarity_loss");
  auto a = f_a.dim() == 1 ? f_a.unsqueeze(0) : f_a;
  auto b = (f_b.dim() == 1 ? f_b.unsqueeze(0) : f_b).detach();
  auto na = norms_checked(a, "cosine_similarity_loss");
  auto nb = norms_checked(b, "cosine_similarity_loss");
  return -(a * b).sum(-1) / (na * nb);
}

torch::Tensor cosine_similarity_loss(const torch::Tensor& f_a, const torch::Tensor& f_b) {
  auto per = cosine_similarity_loss_per_sample(f_a, f_b);
  return f_a.dim() == 1 ? per.squeeze(0) : per.mean();
}

torch::Tensor cosine_similarity_loss_grad(const torch::Tensor& f_a, const torch::Tensor& f_b) {
  if (f_a.dim() != 1) throw InvalidArgument("cosine_similarity_loss_grad: expected [e]");
  check_pair(f_a, f_b, "cosine_similarity_loss_grad");
  auto a = f_a.detach();
  auto na = norms_checked(a, "cosine_similarity_loss_grad");
  auto nb = norms_checked(f_b.detach(), "cosine_similarity_loss_grad");
  auto a_hat = a / na;
  auto b_hat = f_b.detach() / nb;
  return -(b_hat - (a_hat * b_hat).sum() * a_hat) / na;
}

torch::Tensor classification_loss(const torch::Tensor& logits, const torch::Tensor& labels) {
  auto z = logits.dim() == 1 ? logits.unsqueeze(0) : logits;
  auto y = labels.dim() == 0 ? labels.reshape({1}) : labels;
  if (z.dim() != 2 || y.dim() != 1 || y.size(0) != z.size(0))
    throw InvalidArgument("classification_loss: expected logits [B, C] and labels [B]");
  auto num_classes = z.size(1);
  if (y.numel() > 0 && ((y < 0).any().item<bool>() || (y >= num_classes).any().item<bool>()))
    throw InvalidArgument("classification_loss: label outside [0, " + std::to_string(num_classes) + ")");
  return torch::nn::functional::cross_entropy(z, y.to(torch::kLong));
}

double classification_loss(const torch::Tensor& logits, std::int64_t label) {
  return classification_loss(logits, torch::tensor({label}, torch::kLong)).item<double>();
}

torch::Tensor infonce_loss(const torch::Tensor& query, const torch::Tensor& key, const torch::Tensor& negatives,
                           double temperature) {
  if (!(temperature > 0.0)) throw InvalidArgument("infonce_loss: temperature must be > 0");
  check_pair(query, key, "infonce_loss");
  if (negatives.dim() != 2 || negatives.size(0) == 0) throw InvalidArgument("infonce_loss: empty negative set");
  auto q = query.dim() == 1 ? query.unsqueeze(0) : query;
  auto k = (key.dim() == 1 ? key.unsqueeze(0) : key).detach();
  if (negatives.size(1) != q.size(1)) throw InvalidArgument("infonce_loss: negative dimension mismatch");
  q = q / norms_checked(q, "infonce_loss").unsqueeze(1);
  k = k / norms_checked(k, "infonce_loss").unsqueeze(1);
  auto n = negatives.detach();
  n = n / norms_checked(n, "infonce_loss").unsqueeze(1);
  auto pos = (q * k).sum(1, true);
  auto neg = q.matmul(n.t());
  auto logits = torch::cat({pos, neg}, 1) / temperature;
  auto target = torch::zeros({q.size(0)}, torch::kLong);
  return torch::nn::functional::cross_entropy(logits, target);
}

LossBreakdown total_loss(double sim1, double sim2, double sim3, double cls, const LossSwitches& enabled) {
  LossBreakdown out;
  auto take = [](bool on, double v, const char* name) {
    if (!on) return 0.0;
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite loss term ") + name);
    return v;
  };
  out.sim1 = take(enabled.sim1, sim1, "sim1");
  out.sim2 = take(enabled.sim2, sim2, "sim2");
  out.sim3 = take(enabled.sim3, sim3, "sim3");
  out.cls = take(enabled.cls, cls, "cls");
  out.total = out.sim1 + out.sim2 + out.sim3 + out.cls;
  return out;
}

}  // namespace lt3lssl::ssl
