#include "fixtures.hpp"

#include "lt3lssl/common/error.hpp"
#include "lt3lssl/data/profile.hpp"
#include "lt3lssl/models/backbone.hpp"
#include "lt3lssl/models/checkpoint.hpp"
#include "lt3lssl/models/heads.hpp"
#include "lt3lssl/models/model.hpp"
#include "lt3lssl/models/param_set.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

using namespace lt3lssl;
using namespace lt3lssl::models;

namespace {

ModelSpec tiny_spec(const std::string& backbone = "resnet8", std::int64_t width = 4) {
  ModelSpec s;
  s.backbone = {backbone, width};
  s.num_classes = 5;
  s.projector_hidden = 32;
  s.embedding_dim = 8;
  return s;
}

}  // namespace

TEST(Backbone, Resnet32FeatureMapShape) {
  auto net = make_backbone({"resnet32", 16});
  auto out = forward_encode(*net, torch::rand({2, 3, 64, 32}));
  EXPECT_EQ(out.feature_map.sizes(), (std::vector<std::int64_t>{2, 64, 16, 8}));
  EXPECT_EQ(out.pooled.sizes(), (std::vector<std::int64_t>{2, 64}));
  EXPECT_TRUE(torch::allclose(out.pooled, out.feature_map.mean({2, 3})));
  EXPECT_EQ(net->feature_dim(), 64);
}

TEST(Backbone, Resnet50FeatureDim) {
  auto net = make_backbone({"resnet50", 16});
  net->eval();
  torch::NoGradGuard g;
  auto out = forward_encode(*net, torch::rand({1, 3, 64, 64}));
  EXPECT_EQ(out.feature_map.size(1), 2048);
  EXPECT_EQ(out.pooled.sizes(), (std::vector<std::int64_t>{1, 2048}));
}

TEST(Backbone, RejectsBadInputsAndNames) {
  auto net = make_backbone({"resnet8", 4});
  EXPECT_THROW(forward_encode(*net, torch::rand({2, 1, 32, 32})), InvalidArgument);
  EXPECT_THROW(forward_encode(*net, torch::rand({0, 3, 32, 32})), InvalidArgument);
  EXPECT_THROW(make_backbone({"resnet9", 4}), InvalidArgument);
  EXPECT_THROW(make_backbone({"vgg", 4}), InvalidArgument);
}

TEST(Heads, ProjectorShapes) {
  Projector p(ProjectorSpec{64, 2048, 128});
  EXPECT_EQ(p->fc1->weight.sizes(), (std::vector<std::int64_t>{2048, 64}));
  EXPECT_EQ(p->fc2->weight.sizes(), (std::vector<std::int64_t>{128, 2048}));
  EXPECT_EQ(project(p, torch::rand({3, 64})).sizes(), (std::vector<std::int64_t>{3, 128}));
  EXPECT_EQ(project(p, torch::rand({64})).sizes(), (std::vector<std::int64_t>{128}));
  EXPECT_THROW(project(p, torch::rand({3, 63})), InvalidArgument);
}

TEST(Heads, ProjectorIsTwoAffineLayersWithRelu) {
  Projector p(ProjectorSpec{4, 6, 3});
  auto x = torch::rand({2, 4});
  auto h = torch::relu(torch::matmul(x, p->fc1->weight.t()) + p->fc1->bias);
  auto expected = torch::matmul(h, p->fc2->weight.t()) + p->fc2->bias;
  EXPECT_TRUE(torch::allclose(project(p, x), expected, 1e-6, 1e-6));
}

TEST(Heads, ClassifierIsLinear) {
  Classifier c(4, 3);
  auto x = torch::rand({2, 4});
  EXPECT_EQ(c->weight().sizes(), (std::vector<std::int64_t>{3, 4}));
  auto expected = torch::matmul(x, c->weight().t()) + c->fc->bias;
  EXPECT_TRUE(torch::allclose(classify(c, x), expected, 1e-6, 1e-6));
}

TEST(Heads, AdjustLogitsBalancedIsConstantShift) {
  auto z = torch::tensor({1.0F, -2.0F, 0.5F, 3.0F});
  auto adj = adjust_logits(z, data::LongTailProfile::from_counts({7, 7, 7, 7}));
  EXPECT_TRUE(torch::allclose(adj - z, torch::full({4}, static_cast<float>(std::log(0.25)))));
  EXPECT_EQ(adj.argmax().item<std::int64_t>(), z.argmax().item<std::int64_t>());
}

TEST(Heads, AdjustLogitsTwoClassCase) {
  auto adj = adjust_logits(torch::zeros({2}), data::LongTailProfile::from_counts({900, 100}));
  EXPECT_NEAR(adj[0].item<float>(), std::log(0.9), 1e-6);
  EXPECT_NEAR(adj[1].item<float>(), std::log(0.1), 1e-6);
  auto batch = adjust_logits(torch::zeros({3, 2}), data::LongTailProfile::from_counts({900, 100}));
  EXPECT_EQ(batch.sizes(), (std::vector<std::int64_t>{3, 2}));
  EXPECT_THROW(adjust_logits(torch::zeros({3}), data::LongTailProfile::from_counts({900, 100})), InvalidArgument);
}

TEST(ParamSet, MomentumUpdateExact) {
  ParamSet k({{"a", torch::tensor({1.0F, 2.0F})}, {"b", torch::tensor({-4.0F})}});
  ParamSet q({{"a", torch::tensor({3.0F, 0.0F})}, {"b", torch::tensor({4.0F})}});
  momentum_update(k, q, 0.75);
  EXPECT_TRUE(torch::allclose(k.entries()[0].second, torch::tensor({1.5F, 1.5F}), 0.0, 1e-7));
  EXPECT_TRUE(torch::allclose(k.entries()[1].second, torch::tensor({-2.0F}), 0.0, 1e-7));
}

TEST(ParamSet, MomentumUpdateBoundaryAlphas) {
  auto q0 = torch::rand({5});
  auto k0 = torch::rand({5});
  ParamSet k1({{"w", k0.clone()}});
  momentum_update(k1, ParamSet({{"w", q0}}), 1.0);
  EXPECT_TRUE(torch::equal(k1.entries()[0].second, k0));
  ParamSet k2({{"w", k0.clone()}});
  momentum_update(k2, ParamSet({{"w", q0}}), 0.0);
  EXPECT_TRUE(torch::equal(k2.entries()[0].second, q0));
}

TEST(ParamSet, MomentumUpdateRandomMatchesFormula) {
  torch::manual_seed(3);
  for (int t = 0; t < 20; ++t) {
    const double alpha = torch::rand({1}).item<double>();
    auto k0 = torch::randn({17});
    auto q0 = torch::randn({17});
    ParamSet k({{"w", k0.clone()}});
    momentum_update(k, ParamSet({{"w", q0}}), alpha);
    auto expected = k0.to(torch::kFloat64) * alpha + q0.to(torch::kFloat64) * (1.0 - alpha);
    EXPECT_LE((k.entries()[0].second.to(torch::kFloat64) - expected).abs().max().item<double>(), 1e-6);
  }
}

TEST(ParamSet, LayoutMismatchThrows) {
  ParamSet k({{"w", torch::zeros({2})}});
  EXPECT_THROW(momentum_update(k, ParamSet({{"w", torch::zeros({3})}}), 0.5), InvalidArgument);
  EXPECT_THROW(momentum_update(k, ParamSet({{"v", torch::zeros({2})}}), 0.5), InvalidArgument);
  EXPECT_THROW(momentum_update(k, ParamSet({{"w", torch::zeros({2})}}), 1.5), InvalidArgument);
}

TEST(ModelBundle, MomentumSideStartsAsCopy) {
  auto m = ModelBundle::create(tiny_spec(), 1);
  const auto sets = m.state_sets();
  EXPECT_EQ(sets.at("encoder").fingerprint(), sets.at("momentum_encoder").fingerprint());
  EXPECT_EQ(sets.at("projector").fingerprint(), sets.at("momentum_projector").fingerprint());
  for (const auto& [name, t] : ParamSet::parameters_of(*m.momentum_encoder).entries()) {
    EXPECT_FALSE(t.requires_grad()) << name;
  }
}

TEST(ModelBundle, SeededCreationIsDeterministic) {
  EXPECT_EQ(ModelBundle::create(tiny_spec(), 1).fingerprint(), ModelBundle::create(tiny_spec(), 1).fingerprint());
  EXPECT_NE(ModelBundle::create(tiny_spec(), 1).fingerprint(), ModelBundle::create(tiny_spec(), 2).fingerprint());
}

TEST(Checkpoint, RoundTripPreservesEveryTensor) {
  test_support::TempDir dir("ckpt");
  auto m = ModelBundle::create(tiny_spec(), 4);
  const auto profile = data::build_longtail_profile(5, 40, 4.0);
  auto ckpt = Checkpoint::capture(m, profile, 0xabcdef, 17);
  QueueState q;
  q.capacity = 3;
  q.dim = 8;
  q.head = 1;
  q.embeddings = torch::rand({3, 8});
  q.labels = {2, -1, 0};
  ckpt.queue = q;
  save_checkpoint(dir / "m.bin", ckpt);

  const auto back = load_checkpoint(dir / "m.bin");
  EXPECT_EQ(back.config_hash, 0xabcdefULL);
  EXPECT_EQ(back.step, 17);
  EXPECT_EQ(back.profile.counts, profile.counts);
  EXPECT_EQ(back.spec.backbone.name, "resnet8");
  ASSERT_TRUE(back.queue.has_value());
  EXPECT_EQ(back.queue->labels, q.labels);
  EXPECT_TRUE(torch::equal(back.queue->embeddings, q.embeddings));
  EXPECT_EQ(back.restore().fingerprint(), m.fingerprint());

  auto other = ModelBundle::create(tiny_spec(), 5);
  back.load_into(other);
  EXPECT_EQ(other.fingerprint(), m.fingerprint());
}

TEST(Checkpoint, RejectsBadMagicTruncationAndMissingFile) {
  test_support::TempDir dir("ckpt_bad");
  auto m = ModelBundle::create(tiny_spec("linear", 4), 4);
  save_checkpoint(dir / "ok.bin", Checkpoint::capture(m, data::LongTailProfile::from_counts({4, 3, 2, 2, 1}), 1, 0));

  std::ifstream in(dir / "ok.bin", std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  {
    std::ofstream out(dir / "magic.bin", std::ios::binary);
    auto b = bytes;
    b[0] = 'X';
    out << b;
  }
  {
    std::ofstream out(dir / "trunc.bin", std::ios::binary);
    out << bytes.substr(0, bytes.size() / 2);
  }
  EXPECT_THROW(load_checkpoint(dir / "magic.bin"), DataError);
  EXPECT_THROW(load_checkpoint(dir / "trunc.bin"), DataError);
  EXPECT_THROW(load_checkpoint(dir / "absent.bin"), IoError);
}
