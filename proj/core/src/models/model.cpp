#include "lt3lssl/models/model.hpp"

#include "lt3lssl/common/seed.hpp"

namespace lt3lssl::models {

ModelBundle ModelBundle::create(const ModelSpec& spec, std::uint64_t seed) {
  torch::manual_seed(derive_seed({seed, tag(Stream::kInit)}));
  ModelBundle m;
  m.spec = spec;
  m.encoder = make_backbone(spec.backbone);
  const auto d = m.encoder->feature_dim();
  m.projector = Projector(spec.projector_spec(d));
  m.classifier = Classifier(d, spec.num_classes, spec.classifier_bias);
  m.momentum_encoder = make_backbone(spec.backbone);
  m.momentum_projector = Projector(spec.projector_spec(d));

  auto enc_k = ParamSet::state_of(*m.momentum_encoder);
  enc_k.copy_from(ParamSet::state_of(*m.encoder));
  auto proj_k = ParamSet::state_of(*m.momentum_projector);
  proj_k.copy_from(ParamSet::state_of(*m.projector));
  for (auto& p : m.momentum_encoder->parameters()) p.set_requires_grad(false);
  for (auto& p : m.momentum_projector->parameters()) p.set_requires_grad(false);
  return m;
}

std::map<std::string, ParamSet> ModelBundle::state_sets() const {
  return {
      {"encoder", ParamSet::state_of(*encoder)},
      {"projector", ParamSet::state_of(*projector)},
      {"classifier", ParamSet::state_of(*classifier)},
      {"momentum_encoder", ParamSet::state_of(*momentum_encoder)},
      {"momentum_projector", ParamSet::state_of(*momentum_projector)},
  };
}

std::vector<torch::Tensor> ModelBundle::online_parameters() const {
  std::vector<torch::Tensor> params = encoder->parameters();
  for (auto& p : projector->parameters()) params.push_back(p);
  for (auto& p : classifier->parameters()) params.push_back(p);
  return params;
}

std::uint64_t ModelBundle::fingerprint() const {
  std::uint64_t h = 0;
  for (const auto& [name, set] : state_sets()) h = splitmix64(h ^ set.fingerprint());
  return h;
}

void ModelBundle::train(bool on) {
  encoder->train(on);
  projector->train(on);
  classifier->train(on);
  momentum_encoder->train(on);
  momentum_projector->train(on);
}

}  // namespace lt3lssl::models
