#pragma once

#include "lt3lssl/data/profile.hpp"
#include "lt3lssl/models/model.hpp"

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lt3lssl::models {

// Binary container:
//   magic "LT3LCKPT" | u32 version | u64 config hash | i64 step
//   model spec (strings + i64s) | profile (i64 C, C x i64 counts, f64 beta)
//   u32 set count, then per set: name, u32 tensor count, per tensor:
//     name, u32 ndim, ndim x i64 shape, raw little-endian float32 data
//   u8 has_queue [, i64 capacity, i64 dim, i64 head, float32 embeddings,
//                   capacity x i64 labels]
// Strings are u32 length + bytes. Readers reject other versions.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct QueueState {
  std::int64_t capacity = 0;
  std::int64_t dim = 0;
  std::int64_t head = 0;
  torch::Tensor embeddings;  // [capacity, dim]
  std::vector<std::int64_t> labels;
};

struct Checkpoint {
  std::uint64_t config_hash = 0;
  std::int64_t step = 0;
  ModelSpec spec;
  data::LongTailProfile profile;
  std::map<std::string, std::vector<std::pair<std::string, torch::Tensor>>> sets;
  std::optional<QueueState> queue;

  // Captures (deep copies) the bundle's state.
  static Checkpoint capture(const ModelBundle& model, const data::LongTailProfile& profile,
                            std::uint64_t config_hash, std::int64_t step);
  // Rebuilds a bundle with this checkpoint's weights.
  ModelBundle restore() const;
  // Copies weights into an existing bundle with the same layout.
  void load_into(ModelBundle& model) const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
// Throws IoError for missing files and DataError for bad magic, unknown
// versions or truncated payloads.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace lt3lssl::models
