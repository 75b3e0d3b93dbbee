#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <functional>

namespace lt3lssl::ssl {

// Class activation map M_c(i, j) = sum_k w_k^c f_k(i, j).
//
// feature_map: [d, h, w] with a scalar class, or [B, d, h, w] with int64
// classes [B]. weight: classifier matrix [C, d]. Returns [h, w] or [B, h, w].
// Throws InvalidArgument for classes outside [0, C) or mismatched d.
torch::Tensor compute_cam(const torch::Tensor& feature_map, const torch::Tensor& weight, std::int64_t class_index);
torch::Tensor compute_cam(const torch::Tensor& feature_map, const torch::Tensor& weight, const torch::Tensor& classes);

// Min-max normalization of each map ([h, w] or [B, h, w]) to [0, 1]; a
// constant map becomes all zeros.
torch::Tensor normalize_cam(const torch::Tensor& raw);

// Bilinear upsampling of normalized masks [B, h, w] to [B, 1, H, W].
torch::Tensor upsample_mask(const torch::Tensor& mask, std::int64_t height, std::int64_t width);

// x_p = x * (1 - upsample(mask)), mask broadcast over channels.
// x: [B, C, H, W]; mask: [B, h, w] (or [h, w] with x [C, H, W]).
torch::Tensor mask_input(const torch::Tensor& x, const torch::Tensor& mask);

// Maps a (masked) batch to normalized CAMs [B, h, w].
using CamFn = std::function<torch::Tensor(const torch::Tensor& images)>;

// Multi-stage masking: stage 1 uses `first_mask`; each later stage computes a
// CAM of the previously masked input with `cam_fn`, and masks accumulate by
// elementwise maximum at image resolution. Returns the masked input.
torch::Tensor mask_input_stages(const torch::Tensor& x, const torch::Tensor& first_mask, std::int64_t stages,
                                const CamFn& cam_fn);

}  // namespace lt3lssl::ssl
