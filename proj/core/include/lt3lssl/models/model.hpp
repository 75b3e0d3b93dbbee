#pragma once

#include "lt3lssl/models/backbone.hpp"
#include "lt3lssl/models/heads.hpp"
#include "lt3lssl/models/param_set.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <string>

namespace lt3lssl::models {

struct ModelSpec {
  BackboneSpec backbone;
  std::int64_t num_classes = 10;
  std::int64_t projector_hidden = 2048;
  std::int64_t embedding_dim = 128;
  bool classifier_bias = true;

  ProjectorSpec projector_spec(std::int64_t feature_dim) const {
    return {feature_dim, projector_hidden, embedding_dim};
  }
};

// Online encoder/projector/classifier plus the momentum encoder/projector.
// The momentum side is created as an exact copy of the online side and never
// receives gradients.
struct ModelBundle {
  ModelSpec spec;
  std::shared_ptr<Backbone> encoder;
  Projector projector{nullptr};
  Classifier classifier{nullptr};
  std::shared_ptr<Backbone> momentum_encoder;
  Projector momentum_projector{nullptr};

  // Parameters drawn from torch's generator seeded with `seed`.
  static ModelBundle create(const ModelSpec& spec, std::uint64_t seed);

  std::int64_t feature_dim() const { return encoder->feature_dim(); }

  // Named state of every component (parameters and buffers), keyed by
  // "encoder", "projector", "classifier", "momentum_encoder",
  // "momentum_projector".
  std::map<std::string, ParamSet> state_sets() const;
  // Parameters the optimizer updates: encoder, projector, classifier.
  std::vector<torch::Tensor> online_parameters() const;
  std::uint64_t fingerprint() const;

  void train(bool on = true);
  void eval() { train(false); }
};

}  // namespace lt3lssl::models
