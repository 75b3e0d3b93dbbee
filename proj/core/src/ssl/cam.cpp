#include "lt3lssl/ssl/cam.hpp"

#include "lt3lssl/common/error.hpp"

namespace lt3lssl::ssl {

torch::Tensor compute_cam(const torch::Tensor& feature_map, const torch::Tensor& weight, std::int64_t class_index) {
  if (feature_map.dim() != 3) throw InvalidArgument("compute_cam: expected feature map [d, h, w]");
  return compute_cam(feature_map.unsqueeze(0), weight, torch::tensor({class_index}, torch::kLong)).squeeze(0);
}

torch::Tensor compute_cam(const torch::Tensor& feature_map, const torch::Tensor& weight, const torch::Tensor& classes) {
  if (feature_map.dim() != 4) throw InvalidArgument("compute_cam: expected feature map [B, d, h, w]");
  if (weight.dim() != 2 || weight.size(1) != feature_map.size(1))
    throw InvalidArgument("compute_cam: classifier weight must be [C, d] with matching d");
  if (classes.dim() != 1 || classes.size(0) != feature_map.size(0))
    throw InvalidArgument("compute_cam: expected one class per sample");
  auto num_classes = weight.size(0);
  if ((classes < 0).any().item<bool>() || (classes >= num_classes).any().item<bool>())
    throw InvalidArgument("compute_cam: class outside [0, " + std::to_string(num_classes) + ")");
  auto w = weight.index_select(0, classes.to(torch::kLong));  // [B, d]
  return torch::einsum("bd,bdhw->bhw", {w, feature_map});
}

torch::Tensor normalize_cam(const torch::Tensor& raw) {
  if (raw.dim() != 2 && raw.dim() != 3) throw InvalidArgument("normalize_cam: expected [h, w] or [B, h, w]");
  auto m = raw.dim() == 2 ? raw.unsqueeze(0) : raw;
  auto flat = m.flatten(1);
  auto lo = std::get<0>(flat.min(1, true));
  auto hi = std::get<0>(flat.max(1, true));
  auto range = hi - lo;
  auto constant = range <= 0;
  auto out = torch::where(constant, torch::zeros_like(flat), (flat - lo) / torch::where(constant, torch::ones_like(range), range));
  out = out.view_as(m);
  return raw.dim() == 2 ? out.squeeze(0) : out;
}

torch::Tensor upsample_mask(const torch::Tensor& mask, std::int64_t height, std::int64_t width) {
  if (mask.dim() != 3) throw InvalidArgument("upsample_mask: expected [B, h, w]");
  namespace F = torch::nn::functional;
  return F::interpolate(mask.unsqueeze(1), F::InterpolateFuncOptions()
                                               .size(std::vector<std::int64_t>{height, width})
                                               .mode(torch::kBilinear)
                                               .align_corners(false));
}

torch::Tensor mask_input(const torch::Tensor& x, const torch::Tensor& mask) {
  if (x.dim() == 3 && mask.dim() == 2) return mask_input(x.unsqueeze(0), mask.unsqueeze(0)).squeeze(0);
  if (x.dim() != 4 || mask.dim() != 3 || mask.size(0) != x.size(0))
    throw InvalidArgument("mask_input: expected x [B, C, H, W] and mask [B, h, w]");
  auto up = upsample_mask(mask, x.size(2), x.size(3));
  return x * (1.0 - up);
}

torch::Tensor mask_input_stages(const torch::Tensor& x, const torch::Tensor& first_mask, std::int64_t stages,
                                const CamFn& cam_fn) {
  if (stages < 1) throw InvalidArgument("mask_input_stages: stages must be >= 1");
  if (x.dim() != 4) throw InvalidArgument("mask_input_stages: expected x [B, C, H, W]");
  auto combined = upsample_mask(first_mask, x.size(2), x.size(3));
  auto masked = x * (1.0 - combined);
  for (std::int64_t s = 1; s < stages; ++s) {
    auto next = upsample_mask(cam_fn(masked), x.size(2), x.size(3));
    combined = torch::maximum(combined, next);
    masked = x * (1.0 - combined);
  }
  return masked;
}

}  // namespace lt3lssl::ssl
